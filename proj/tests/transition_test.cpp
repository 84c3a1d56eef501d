#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "instab/logsum.hpp"
#include "instab/rng.hpp"
#include "instab/transition.hpp"

#include <cmath>
#include <sstream>

using namespace instab;

namespace {

constexpr double kLog2 = 0.6931471805599453;

OperatorSeq random_dense_system(int dim, std::uint64_t seed) {
    OperatorSeq seq;
    seq.kind = Kind::Dense;
    seq.dim = dim;
    seq.label = "test-dense";
    seq.coeff_at = [dim, seed](int n) {
        SplitMix64 g(derive_seed(seed, static_cast<std::uint64_t>(n)));
        Eigen::MatrixXd m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                m(i, j) = (i == j ? 1.5 : 0.0) + 0.3 * g.normal();
        return StepOperator::dense(m);
    };
    return seq;
}

// Reference product of two scale-normalized dense operators.
Eigen::MatrixXd dense_of(const StepOperator& op) {
    return std::exp(op.log_scale) * op.mat;
}

}  // namespace

TEST_CASE("transition base cases and the paper values") {
    TransitionCache cache(make_paper_example(2.0));

    const auto id = cache.transition(7, 7);
    CHECK(id.log_mags[0] == 0.0);

    // a_3 * a_4 = 2^4 * 2^{-4} = 1, times c^2
    CHECK(cache.transition(4, 2).log_mags[0] == doctest::Approx(2 * kLog2).epsilon(1e-12));
    // c^2 * 2^{m-n} with (m,n)=(3,1)
    CHECK(cache.transition(3, 1).log_mags[0] == doctest::Approx(std::log(16.0)).epsilon(1e-12));

    CHECK_THROWS_AS(cache.transition(1, 2), std::domain_error);
    CHECK_THROWS_AS(cache.transition(0, -1), std::domain_error);
}

TEST_CASE("checkpoint stride does not change results") {
    const auto sys = make_paper_example(1.3);
    TransitionCache direct(sys, 1000000);
    TransitionCache strided(sys, 4);
    for (int m = 0; m <= 70; m += 7)
        for (int n = 0; n <= m; n += 5)
            CHECK(direct.transition(m, n).equals(strided.transition(m, n)));
}

TEST_CASE("min gain on scalar and diagonal systems") {
    TransitionCache c2(make_constant(StepOperator::scalar(std::log(2.0)), 1));
    CHECK(c2.min_gain(5, 2, Norm::Two) == doctest::Approx(3 * kLog2));
    CHECK(c2.min_gain(5, 2, Norm::One) == doctest::Approx(3 * kLog2));

    TransitionCache d23(make_constant(
        StepOperator::diagonal({std::log(2.0), std::log(3.0)}), 2));
    CHECK(d23.min_gain(4, 1, Norm::Two) == doctest::Approx(3 * kLog2));
}

TEST_CASE("singular dense products have gain -inf") {
    OperatorSeq seq;
    seq.kind = Kind::Dense;
    seq.dim = 2;
    seq.label = "zero-column";
    seq.coeff_at = [](int n) {
        Eigen::MatrixXd m(2, 2);
        if (n == 3)
            m << 1.0, 0.0, 2.0, 0.0;  // kills e_2
        else
            m << 2.0, 0.0, 0.0, 2.0;
        return StepOperator::dense(m);
    };
    TransitionCache cache(seq);
    CHECK(cache.min_gain(5, 1, Norm::Two) == neg_inf);
    CHECK(cache.min_gain(2, 0, Norm::Two) > 0.0);
    CHECK_THROWS_AS(cache.min_gain(5, 1, Norm::One), std::invalid_argument);
}

TEST_CASE("growth table basics") {
    TransitionCache cache(make_constant(StepOperator::scalar(std::log(2.0)), 1));
    const auto t0 = growth_table(cache, 0, Norm::Two);
    CHECK(t0.g.size() == 1);
    CHECK(t0.at(0, 0) == 0.0);

    const auto t3 = growth_table(cache, 3, Norm::Two);
    for (int m = 0; m <= 3; ++m)
        for (int n = 0; n <= m; ++n)
            CHECK(t3.at(m, n) == doctest::Approx((m - n) * kLog2));

    TransitionCache paper(make_paper_example(2.0));
    const auto tp = growth_table(paper, 4, Norm::Two);
    CHECK(tp.at(2, 1) == doctest::Approx(-kLog2));
    for (int n = 0; n <= 4; ++n) CHECK(tp.at(n, n) == 0.0);
}

TEST_CASE("closed form matches the four-case table") {
    CHECK(paper_example_closed_form(1.0, 6, 2) == 0.0);
    CHECK(paper_example_closed_form(1.0, 5, 2) == doctest::Approx(6 * kLog2));
    CHECK(paper_example_closed_form(3.0, 4, 3) ==
          doctest::Approx(std::log(3.0) - 4 * kLog2));
    CHECK(paper_example_closed_form(2.0, 9, 9) == 0.0);
    CHECK_THROWS_AS(paper_example_closed_form(1.0, 2, 5), std::domain_error);
    CHECK_THROWS_AS(paper_example_closed_form(-1.0, 5, 2), std::invalid_argument);
}

TEST_CASE("engine agrees with the closed form") {
    for (double c : {0.5, 1.0, 2.0}) {
        TransitionCache cache(make_paper_example(c));
        for (int m = 0; m <= 60; ++m)
            for (int n = 0; n <= m; ++n) {
                const double got = cache.min_gain(m, n, Norm::Two);
                const double want = paper_example_closed_form(c, m, n);
                CHECK(std::abs(got - want) < 1e-9);
            }
    }
}

TEST_CASE("cocycle identity on dense fixtures") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto sys = random_dense_system(3, seed);
        TransitionCache cache(sys);
        for (int p = 0; p <= 16; p += 3)
            for (int n = p; n <= 16; n += 2)
                for (int m = n; m <= 16; ++m) {
                    const Eigen::MatrixXd direct = dense_of(cache.transition(m, p));
                    const Eigen::MatrixXd split =
                        dense_of(cache.transition(m, n)) *
                        dense_of(cache.transition(n, p));
                    const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
                    CHECK((direct - split).cwiseAbs().maxCoeff() / scale < 1e-9);
                }
    }
}

TEST_CASE("minimum gain is supermultiplicative on dense fixtures") {
    for (std::uint64_t seed : {11u, 12u}) {
        TransitionCache cache(random_dense_system(4, seed));
        for (int p = 0; p <= 20; p += 4)
            for (int n = p; n <= 20; n += 3)
                for (int m = n; m <= 20; m += 2) {
                    const double whole = cache.min_gain(m, p, Norm::Two);
                    const double split = cache.min_gain(m, n, Norm::Two) +
                                         cache.min_gain(n, p, Norm::Two);
                    CHECK(whole >= split - 1e-9);
                }
    }
}

TEST_CASE("growth table CSV format") {
    TransitionCache cache(make_constant(StepOperator::scalar(0.0), 1));
    auto table = growth_table(cache, 2, Norm::Two);
    table.g[3] = neg_inf;  // (2,0)
    const std::string csv = growth_table_csv(table);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "m,n,g");
    std::getline(in, line);
    CHECK(line == "0,0,0");
    std::getline(in, line);  // 1,0
    std::getline(in, line);  // 1,1
    std::getline(in, line);
    CHECK(line == "2,0,-inf");
}

TEST_CASE("log vector norms and propagation") {
    const auto sys = make_constant(StepOperator::scalar(std::log(2.0)), 1);
    const auto norms =
        propagate_log_norms(sys, 5, 2, LogVector::basis(Kind::Scalar, 1, 0),
                            Norm::Two);
    REQUIRE(norms.size() == 4);
    CHECK(norms[0] == 0.0);
    CHECK(norms[3] == doctest::Approx(3 * kLog2));

    LogVector v = LogVector::basis(Kind::Diagonal, 2, 0);
    CHECK(v.log_norm(Norm::One) == 0.0);
    CHECK(v.log_norm(Norm::Two) == 0.0);

    Eigen::VectorXd w(2);
    w << 3.0, 4.0;
    LogVector dv = LogVector::dense_vec(w);
    CHECK(dv.log_norm(Norm::Two) == doctest::Approx(std::log(5.0)));
    CHECK(dv.log_norm(Norm::One) == doctest::Approx(std::log(7.0)));
    CHECK(dv.log_norm(Norm::Infinity) == doctest::Approx(std::log(4.0)));
    dv.normalize(Norm::Two);
    CHECK(dv.log_norm(Norm::Two) == doctest::Approx(0.0));
}

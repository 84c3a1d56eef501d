#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "instab/logsum.hpp"
#include "instab/przyluski.hpp"

#include <cmath>

using namespace instab;

namespace {

constexpr double kLog2 = 0.6931471805599453;

OperatorSeq constant_scalar(double value) {
    return make_constant(StepOperator::scalar(std::log(value)), 1);
}

LogVector scalar_x() { return LogVector::basis(Kind::Scalar, 1, 0); }

}  // namespace

TEST_CASE("weighted sum: trivial and two-term windows") {
    const auto sys = constant_scalar(2.0);
    // single term: just the normalized state norm
    CHECK(weighted_sum(sys, 3, 3, scalar_x(), 5.0) == doctest::Approx(0.0));
    // d*1 + 2 = 5
    CHECK(weighted_sum(sys, 1, 0, scalar_x(), 3.0) ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("weighted sum: geometric series oracle") {
    const auto sys = constant_scalar(2.0);
    // sum_{k=0}^{10} 4^{10-k} 2^k = 2 * 4^10 * (1 - 2^{-11})
    const double want = std::log(2.0 * std::pow(4.0, 10) * (1.0 - std::pow(2.0, -11)));
    CHECK(weighted_sum(sys, 10, 0, scalar_x(), 4.0) ==
          doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("weighted sum matches a direct double-precision evaluation") {
    const auto sys = make_paper_example(1.3);
    for (double d : {1.1, 2.0, 3.7}) {
        for (int n : {0, 2, 5}) {
            const int m = n + 12;
            const auto nu = propagate_log_norms(sys, m, n, scalar_x(), Norm::Two);
            double direct = 0.0;
            for (int k = n; k <= m; ++k)
                direct += std::pow(d, m - k) * std::exp(nu[k - n]);
            CHECK(weighted_sum(sys, m, n, scalar_x(), d) ==
                  doctest::Approx(std::log(direct)).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted sum lower bounds and monotonicity in d") {
    const auto sys = make_paper_example(2.0);
    for (int n : {0, 1, 4})
        for (int m = n; m <= n + 10; ++m) {
            const auto nu = propagate_log_norms(sys, m, n, scalar_x(), Norm::Two);
            const double s2 = weighted_sum(sys, m, n, scalar_x(), 2.0);
            const double s3 = weighted_sum(sys, m, n, scalar_x(), 3.0);
            CHECK(s3 >= s2 - 1e-12);
            CHECK(s2 >= nu.back() - 1e-12);            // k = m term
            CHECK(s2 >= (m - n) * kLog2 + nu[0] - 1e-12);  // k = n term
        }
}

TEST_CASE("weighted sum input validation") {
    const auto sys = constant_scalar(2.0);
    CHECK_THROWS_AS(weighted_sum(sys, 1, 2, scalar_x(), 2.0), std::domain_error);
    CHECK_THROWS_AS(weighted_sum(sys, 2, 0, scalar_x(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_sum(sys, 2, 0, scalar_x(), -1.0), std::invalid_argument);
}

TEST_CASE("default d grid spans up to four times the max step gain") {
    const auto grid = default_d_grid(constant_scalar(2.0), 16);
    REQUIRE(grid.size() == 17);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    CHECK(grid.front() > 1.0);
    CHECK(grid.back() == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("COR4 fit on the doubling system reproduces the geometric bound") {
    const int M = 32;
    const auto fit = fit_criterion(constant_scalar(2.0), M, Variant::COR4,
                                   {1.5});
    REQUIRE(fit.has_value());
    CHECK(fit->logc == 0.0);
    CHECK(fit->logd == doctest::Approx(std::log(1.5)).epsilon(1e-12));
    // sum_{j<=M} 0.75^j = (1 - 0.75^{M+1}) / 0.25
    const double want = std::log((1.0 - std::pow(0.75, M + 1)) / 0.25);
    CHECK(fit->logD == doctest::Approx(want).epsilon(1e-9));
    CHECK(fit->slack == doctest::Approx(0.0));
    CHECK_FALSE(fit->x_sampled);
}

TEST_CASE("COR4 fit is infeasible for decaying systems within budget") {
    CHECK_FALSE(fit_criterion(constant_scalar(0.5), 32, Variant::COR4,
                              {1.5, 2.0, 3.0})
                    .has_value());
    // the paper example decays along even windows without the c^m factor
    const auto sys = make_paper_example(2.0);
    CHECK_FALSE(fit_criterion(sys, 32, Variant::COR4,
                              default_d_grid(sys, 32))
                    .has_value());
}

TEST_CASE("THM2 fit on the paper example is feasible and checkable") {
    const auto sys = make_paper_example(2.0);
    const int M = 32;
    const auto fit =
        fit_criterion(sys, M, Variant::THM2, default_d_grid(sys, M));
    REQUIRE(fit.has_value());
    CHECK(fit->logd > fit->logc);
    CHECK(fit->logD >= 0.0);
    const auto check = check_criterion(sys, *fit, M);
    CHECK(check.pass);
    CHECK(check.constraints > 0);
}

TEST_CASE("fit prefers larger d, breaking ties by smaller D") {
    const auto sys = constant_scalar(2.0);
    const auto narrow = fit_criterion(sys, 16, Variant::COR4, {1.2});
    const auto wide = fit_criterion(sys, 16, Variant::COR4, {1.2, 1.5});
    REQUIRE(narrow.has_value());
    REQUIRE(wide.has_value());
    CHECK(wide->logd == doctest::Approx(std::log(1.5)));
    CHECK(wide->logd > narrow->logd);
}

TEST_CASE("fit input validation") {
    const auto sys = constant_scalar(2.0);
    CHECK_THROWS_AS(fit_criterion(sys, 8, Variant::THM2, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_criterion(sys, 8, Variant::THM2, {0.9}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_criterion(sys, -1, Variant::THM2, {2.0}),
                    std::invalid_argument);
}

TEST_CASE("certificate to criterion uses the geometric-series constant") {
    Certificate cert;
    cert.concept_kind = Concept::UPIS;
    cert.L = 0.0;   // N = 1
    cert.a = kLog2; // r = 1/2
    cert.b = 0.0;   // s = 1
    cert.window = 16;
    const auto fit = certificate_to_criterion(cert, 2.0);
    CHECK(fit.logd == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(fit.logc == doctest::Approx(kLog2).epsilon(1e-12));
    CHECK(fit.logD == doctest::Approx(kLog2).epsilon(1e-12));
    // log 2 + log c == log d, so the 2c < d case is just missed
    CHECK(fit.variant == Variant::THM2);

    Certificate fast = cert;
    fast.a = std::log(4.0);  // r = 1/4: now 2c < d holds after conversion
    const auto fit4 = certificate_to_criterion(fast, 2.0);
    CHECK(fit4.variant == Variant::PROP3);
    CHECK(fit4.logd == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    CHECK(fit4.logD == doctest::Approx(kLog2).epsilon(1e-12));

    CHECK_THROWS_AS(certificate_to_criterion(cert, 1.0), std::invalid_argument);
    Certificate bad = cert;
    bad.a = 0.0;
    CHECK_THROWS_AS(certificate_to_criterion(bad, 2.0), std::invalid_argument);
}

TEST_CASE("criterion to certificate inverts the constants") {
    CriterionFit fit;
    fit.variant = Variant::THM2;
    fit.logD = kLog2;             // D = 2
    fit.logd = std::log(4.0);
    fit.logc = kLog2;             // c = 2
    fit.window = 16;
    const auto out = criterion_to_certificate(fit);
    CHECK_FALSE(out.downgraded);
    CHECK(out.cert.concept_kind == Concept::PIS);
    CHECK(out.cert.L == doctest::Approx(kLog2));
    CHECK(out.cert.a == doctest::Approx(kLog2));
    CHECK(out.cert.b == doctest::Approx(kLog2));

    // PROP3 constants with s >= 1/r get downgraded instead of patched
    CriterionFit p3 = fit;
    p3.variant = Variant::PROP3;
    const auto down = criterion_to_certificate(p3);
    CHECK(down.downgraded);
    CHECK(down.cert.concept_kind == Concept::PIS);

    CriterionFit cor = fit;
    cor.variant = Variant::COR4;
    cor.logc = 0.0;
    CHECK(criterion_to_certificate(cor).cert.concept_kind == Concept::UPIS);
}

TEST_CASE("round trip keeps the converted criterion valid on the system") {
    const auto sys = constant_scalar(2.0);
    TransitionCache cache(sys);
    const auto table = growth_table(cache, 24, Norm::Two);
    const auto cert = fit_certificate(table, Concept::PIS, 0.0);
    REQUIRE(cert.has_value());
    const auto fit = certificate_to_criterion(*cert, 2.0);
    const auto check = check_criterion(sys, fit, 24);
    CHECK(check.pass);
    CHECK(check.worst_margin >= -1e-9);

    const auto back = criterion_to_certificate(fit);
    CHECK(verify_certificate(sys, back.cert, 500, 13).pass);
}

TEST_CASE("equivalence report: feasible, infeasible, and UPIS cases") {
    const auto both = check_equivalence(constant_scalar(2.0), 24, Variant::THM2);
    REQUIRE(both.size() == 2);
    for (const auto& r : both) {
        CHECK(r.source_feasible);
        CHECK(r.pass);
        CHECK(r.margin >= -1e-9);
    }

    const auto none = check_equivalence(constant_scalar(0.5), 24, Variant::THM2);
    for (const auto& r : none) {
        CHECK_FALSE(r.source_feasible);
        CHECK(r.pass);
        CHECK(r.note.find("consistent") != std::string::npos);
    }

    const auto cor = check_equivalence(constant_scalar(2.0), 24, Variant::COR4);
    for (const auto& r : cor) {
        CHECK(r.source_feasible);
        CHECK(r.pass);
    }
}

TEST_CASE("variant parsing") {
    CHECK(parse_variant("thm2") == Variant::THM2);
    CHECK(parse_variant("PROP3") == Variant::PROP3);
    CHECK(parse_variant("cor4") == Variant::COR4);
    CHECK(to_string(Variant::COR4) == "COR4");
    CHECK_THROWS_AS(parse_variant("thm9"), std::invalid_argument);
}

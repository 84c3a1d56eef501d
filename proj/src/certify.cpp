#include "instab/certify.hpp"

#include "instab/logsum.hpp"
#include "instab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace instab {

std::string to_string(Concept c) {
    switch (c) {
        case Concept::UPIS: return "UPIS";
        case Concept::PIS: return "PIS";
        case Concept::SPIS: return "SPIS";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Certified: return "certified";
        case Verdict::Rejected: return "rejected";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

Concept parse_concept(const std::string& s) {
    if (s == "upis" || s == "UPIS") return Concept::UPIS;
    if (s == "pis" || s == "PIS") return Concept::PIS;
    if (s == "spis" || s == "SPIS") return Concept::SPIS;
    throw std::invalid_argument("unknown concept_kind: " + s);
}

double required_offset(const GrowthTable& table, double a, double b,
                       int m_limit) {
    if (!(a > 0.0)) throw std::invalid_argument("required_offset needs a > 0");
    if (!(b >= 0.0)) throw std::invalid_argument("required_offset needs b >= 0");
    const int M = (m_limit >= 0) ? std::min(m_limit, table.M) : table.M;
    double worst = 0.0;
    for (int m = 0; m <= M; ++m) {
        for (int n = 0; n <= m; ++n) {
            const double g = table.at(m, n);
            if (g == neg_inf) return pos_inf;
            worst = std::max(worst, a * (m - n) - b * n - g);
        }
    }
    return worst;
}

GrowthTable subtable(const GrowthTable& table, int M) {
    if (M > table.M) throw std::invalid_argument("subtable horizon exceeds table");
    GrowthTable sub;
    sub.M = M;
    sub.norm = table.norm;
    sub.g.assign(table.g.begin(),
                 table.g.begin() + static_cast<std::ptrdiff_t>(M + 1) * (M + 2) / 2);
    return sub;
}

namespace {

constexpr double kFitTol = 1e-9;

// Minimal feasible b at a given rate, using the full L budget.
double required_b(const GrowthTable& table, double a, double budget) {
    double b = 0.0;
    for (int m = 1; m <= table.M; ++m)
        for (int n = 1; n <= m; ++n)
            b = std::max(b, (a * (m - n) - table.at(m, n) - budget) / n);
    return b;
}

Certificate finish_fit(const GrowthTable& table, Concept concept_kind, double a,
                       double b) {
    double t_max = -pos_inf;
    for (int m = 0; m <= table.M; ++m)
        for (int n = 0; n <= m; ++n)
            t_max = std::max(t_max, a * (m - n) - b * n - table.at(m, n));
    Certificate cert;
    cert.concept_kind = concept_kind;
    cert.a = a;
    cert.b = b;
    cert.window = table.M;
    cert.L = std::max(0.0, t_max);
    cert.slack = cert.L - t_max;  // exactly 0 when a constraint binds
    return cert;
}

}  // namespace

std::optional<Certificate> fit_certificate(const GrowthTable& table,
                                           Concept concept_kind, double L_budget,
                                           double gap_delta) {
    if (table.g.empty()) throw std::invalid_argument("empty growth table");
    if (!(L_budget >= 0.0)) throw std::invalid_argument("L_budget must be >= 0");
    if (!(gap_delta > 0.0)) throw std::invalid_argument("gap_delta must be > 0");
    if (table.has_singular()) return std::nullopt;
    if (table.M < 1) return std::nullopt;  // no pair constrains a

    // Pairs with n = 0 bound a regardless of b.
    double a_ub = pos_inf;
    for (int m = 1; m <= table.M; ++m)
        a_ub = std::min(a_ub, (table.at(m, 0) + L_budget) / m);

    switch (concept_kind) {
        case Concept::UPIS: {
            double a = a_ub;
            for (int m = 1; m <= table.M; ++m)
                for (int n = 1; n < m; ++n)
                    a = std::min(a, (table.at(m, n) + L_budget) / (m - n));
            if (!(a > kFitTol)) return std::nullopt;
            return finish_fit(table, concept_kind, a, 0.0);
        }
        case Concept::PIS: {
            const double a = a_ub;
            if (!(a > kFitTol)) return std::nullopt;
            const double b = required_b(table, a, L_budget);
            return finish_fit(table, concept_kind, a, b);
        }
        case Concept::SPIS: {
            if (!(a_ub > kFitTol)) return std::nullopt;
            // f(a) = required_b(a) - (a - gap) is convex piecewise linear;
            // the feasible rates are an interval. Locate the minimum by
            // ternary search, then the rightmost root by bisection.
            auto f = [&](double a) {
                return required_b(table, a, L_budget) - (a - gap_delta);
            };
            double lo = kFitTol, hi = a_ub;
            for (int it = 0; it < 200; ++it) {
                const double m1 = lo + (hi - lo) / 3.0;
                const double m2 = hi - (hi - lo) / 3.0;
                if (f(m1) <= f(m2)) hi = m2; else lo = m1;
            }
            const double a_min = 0.5 * (lo + hi);
            if (f(a_min) > 0.0) return std::nullopt;
            double a_star;
            if (f(a_ub) <= 0.0) {
                a_star = a_ub;
            } else {
                double flo = a_min, fhi = a_ub;  // f(flo) <= 0 < f(fhi)
                for (int it = 0; it < 100; ++it) {
                    const double mid = 0.5 * (flo + fhi);
                    if (f(mid) <= 0.0) flo = mid; else fhi = mid;
                }
                a_star = flo;  // feasible endpoint
            }
            if (!(a_star > kFitTol)) return std::nullopt;
            const double b = required_b(table, a_star, L_budget);
            return finish_fit(table, concept_kind, a_star, b);
        }
    }
    return std::nullopt;
}

Classification classify_table(const GrowthTable& table, Concept concept_kind,
                              const std::vector<int>& schedule, double epsilon,
                              double L_budget, double gap_delta) {
    if (schedule.size() < 3)
        throw std::invalid_argument("horizon schedule needs at least 3 entries");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i] < 1 || (i > 0 && schedule[i] <= schedule[i - 1]))
            throw std::invalid_argument("horizon schedule must be increasing");
    }
    if (schedule.back() > table.M)
        throw std::invalid_argument("growth table does not cover the schedule");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");

    Classification cls;
    cls.concept_kind = concept_kind;
    cls.schedule = schedule;
    cls.epsilon = epsilon;
    cls.L_budget = L_budget;
    cls.gap_delta = gap_delta;

    if (subtable(table, schedule.back()).has_singular()) {
        // An instability lower bound cannot hold through a singular product.
        cls.verdict = Verdict::Rejected;
        cls.slope = pos_inf;
        cls.fallback_rate = true;
        cls.offsets.assign(schedule.size(), pos_inf);
        return cls;
    }

    const auto fit =
        fit_certificate(subtable(table, schedule.front()), concept_kind, L_budget,
                        gap_delta);
    if (fit) {
        cls.rate = fit->a;
        cls.b = fit->b;
    } else {
        cls.fallback_rate = true;
        cls.rate = epsilon + gap_delta;  // nominal positive rate
        cls.b = 0.0;
    }

    for (int M : schedule)
        cls.offsets.push_back(required_offset(table, cls.rate, cls.b, M));

    // Least-squares slope of L* over the last three windows.
    {
        const std::size_t k = cls.offsets.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = k - 3; i < k; ++i) {
            const double x = schedule[i], y = cls.offsets[i];
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        cls.slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    }

    const std::size_t k = cls.offsets.size();
    const double inc1 = cls.offsets[k - 1] - cls.offsets[k - 2];
    const double inc2 = cls.offsets[k - 2] - cls.offsets[k - 3];
    if (!cls.fallback_rate && inc1 <= epsilon && inc2 <= epsilon)
        cls.verdict = Verdict::Certified;
    else if (cls.slope >= epsilon)
        cls.verdict = Verdict::Rejected;
    else
        cls.verdict = Verdict::Inconclusive;
    return cls;
}

Classification classify(const OperatorSeq& system, Concept concept_kind,
                        const std::vector<int>& schedule, double epsilon,
                        double L_budget, double gap_delta, Norm norm) {
    if (schedule.size() < 3)
        throw std::invalid_argument("horizon schedule needs at least 3 entries");
    TransitionCache cache(system);
    const GrowthTable table =
        growth_table(cache, *std::max_element(schedule.begin(), schedule.end()),
                     norm);
    return classify_table(table, concept_kind, schedule, epsilon, L_budget, gap_delta);
}

VerifyReport verify_certificate(const OperatorSeq& system,
                                const Certificate& cert, int sample_count,
                                std::uint64_t seed, Norm norm) {
    VerifyReport report;
    report.worst_margin = pos_inf;
    const int M = cert.window;
    SplitMix64 rng(seed);

    auto check = [&](int m, int n, int p, const LogVector& x) {
        const auto norms = propagate_log_norms(system, m, p, x, norm);
        const double log_np = norms[static_cast<std::size_t>(n - p)];
        const double log_mp = norms[static_cast<std::size_t>(m - p)];
        double margin;
        if (log_np == neg_inf)
            margin = pos_inf;  // left side vanishes, inequality trivially holds
        else if (log_mp == neg_inf)
            margin = neg_inf;
        else
            margin = cert.L - cert.a * (m - n) + cert.b * n + log_mp - log_np;
        ++report.samples;
        if (margin < report.worst_margin) {
            report.worst_margin = margin;
            report.worst_m = m; report.worst_n = n; report.worst_p = p;
        }
    };

    auto vectors_for = [&](int which) {
        if (system.kind == Kind::Dense && which % 2 == 1) {
            Eigen::VectorXd v(system.dim);
            for (int i = 0; i < system.dim; ++i) v[i] = rng.normal();
            if (v.cwiseAbs().maxCoeff() == 0.0) v[0] = 1.0;
            LogVector x = LogVector::dense_vec(v);
            x.normalize(norm);
            return x;
        }
        return LogVector::basis(system.kind, system.dim,
                                which % std::max(1, system.dim));
    };

    // Corner triplets first, then seeded random ones.
    const int corners[][3] = {{M, M, 0}, {M, 0, 0}, {M, M / 2, 0}, {M, M / 2, M / 4}};
    int which = 0;
    for (const auto& c : corners)
        check(c[0], c[1], c[2], vectors_for(which++));
    while (report.samples < sample_count) {
        const int m = static_cast<int>(rng.next() % static_cast<std::uint64_t>(M + 1));
        const int n = static_cast<int>(rng.next() % static_cast<std::uint64_t>(m + 1));
        const int p = static_cast<int>(rng.next() % static_cast<std::uint64_t>(n + 1));
        check(m, n, p, vectors_for(which++));
    }
    report.pass = report.worst_margin >= -1e-9;
    return report;
}

}  // namespace instab

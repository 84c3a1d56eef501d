#include "instab/przyluski.hpp"

#include "instab/logsum.hpp"
#include "instab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace instab {

namespace {

constexpr double kLog2 = 0.6931471805599453094172321214581766;
constexpr double kStrictGap = 1e-9;  // stand-in for the strict c < d

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::THM2: return "THM2";
        case Variant::PROP3: return "PROP3";
        case Variant::COR4: return "COR4";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "thm2" || s == "THM2") return Variant::THM2;
    if (s == "prop3" || s == "PROP3") return Variant::PROP3;
    if (s == "cor4" || s == "COR4") return Variant::COR4;
    throw std::invalid_argument("unknown criterion variant: " + s);
}

double weighted_sum(const OperatorSeq& system, int m, int n, const LogVector& x,
                    double d, Norm norm) {
    if (n < 0 || m < n) throw std::domain_error("weighted_sum requires m >= n >= 0");
    if (!(d > 0.0)) throw std::invalid_argument("weighted_sum requires d > 0");
    LogVector unit = x;
    unit.normalize(norm);
    const std::vector<double> nu = propagate_log_norms(system, m, n, unit, norm);
    const double logd = std::log(d);
    std::vector<double> terms(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const int k = n + static_cast<int>(i);
        terms[i] = nu[i] == neg_inf ? neg_inf : (m - k) * logd + nu[i];
    }
    return log_sum_exp(terms);
}

std::vector<double> default_d_grid(const OperatorSeq& system, int M, Norm norm) {
    double max_gain = neg_inf;
    for (int n = 0; n <= M; ++n)
        max_gain = std::max(max_gain, system.coeff_at(n).log_max_gain(norm));
    double upper = 2.0 * kLog2 + max_gain;  // log(4 * max step gain)
    if (!(upper > 0.0) || !std::isfinite(upper)) upper = 2.0 * kLog2;
    std::vector<double> grid;
    for (int i = 1; i <= 17; ++i) grid.push_back(std::exp(upper * i / 17.0));
    return grid;
}

namespace {

// Test vectors for the for-all-x quantifier: exact via basis vectors for
// scalar/diagonal, basis plus seeded random unit vectors for dense.
std::vector<LogVector> test_vectors(const OperatorSeq& system, Norm norm,
                                    std::uint64_t seed, int random_x,
                                    bool* sampled) {
    std::vector<LogVector> xs;
    for (int i = 0; i < system.dim; ++i)
        xs.push_back(LogVector::basis(system.kind, system.dim, i));
    *sampled = false;
    if (system.kind == Kind::Dense) {
        *sampled = true;
        SplitMix64 rng(seed);
        for (int j = 0; j < random_x; ++j) {
            Eigen::VectorXd v(system.dim);
            for (int i = 0; i < system.dim; ++i) v[i] = rng.normal();
            if (v.cwiseAbs().maxCoeff() == 0.0) v[0] = 1.0;
            LogVector x = LogVector::dense_vec(v);
            x.normalize(norm);
            xs.push_back(std::move(x));
        }
    }
    for (auto& x : xs) x.normalize(norm);
    return xs;
}

struct Constraint {
    int m;
    double r;  // log S - log ||A_m^n x||; +inf when the product annihilates x
};

// One constraint per (m, n, x): logD + m logc >= r. The propagated norms are
// independent of d, so they are computed once and reused across the grid.
std::vector<std::vector<double>> propagate_all(const OperatorSeq& system, int M,
                                               const std::vector<LogVector>& xs,
                                               Norm norm) {
    std::vector<std::vector<double>> nus;
    for (int n = 0; n <= M; ++n)
        for (const auto& x : xs)
            nus.push_back(propagate_log_norms(system, M, n, x, norm));
    return nus;
}

std::vector<Constraint> constraints_for_d(
    const std::vector<std::vector<double>>& nus, int M, double logd) {
    std::vector<Constraint> cs;
    std::size_t idx = 0;
    const std::size_t per_n = nus.size() / static_cast<std::size_t>(M + 1);
    for (int n = 0; n <= M; ++n) {
        for (std::size_t j = 0; j < per_n; ++j, ++idx) {
            const auto& nu = nus[idx];
            double log_s = nu[0];
            cs.push_back({n, nu[0] == neg_inf ? pos_inf : log_s - nu[0]});
            for (int m = n + 1; m <= M; ++m) {
                const double nu_m = nu[static_cast<std::size_t>(m - n)];
                log_s = log_add_exp(logd + log_s, nu_m);
                cs.push_back({m, nu_m == neg_inf ? pos_inf : log_s - nu_m});
            }
        }
    }
    return cs;
}

}  // namespace

std::optional<CriterionFit> fit_criterion(const OperatorSeq& system, int M,
                                          Variant variant,
                                          const std::vector<double>& d_grid,
                                          double logD_budget, Norm norm,
                                          std::uint64_t seed, int random_x) {
    if (d_grid.empty()) throw std::invalid_argument("d grid must be nonempty");
    for (double d : d_grid)
        if (!(d > 1.0)) throw std::invalid_argument("every grid d must exceed 1");
    if (M < 0) throw std::invalid_argument("window must be nonnegative");

    bool sampled = false;
    const auto xs = test_vectors(system, norm, seed, random_x, &sampled);
    const auto nus = propagate_all(system, M, xs, norm);

    std::optional<CriterionFit> best;
    for (double d : d_grid) {
        const double logd = std::log(d);
        double logc_max = 0.0;
        switch (variant) {
            case Variant::THM2: logc_max = logd - kStrictGap; break;
            case Variant::PROP3: logc_max = logd - kLog2 - kStrictGap; break;
            case Variant::COR4: logc_max = 0.0; break;
        }
        if (logc_max < 0.0) continue;

        const auto cs = constraints_for_d(nus, M, logd);
        double v_star = 0.0;
        bool impossible = false;
        for (const auto& c : cs) {
            if (c.r == pos_inf) { impossible = true; break; }
            v_star = std::max(v_star, c.r - c.m * logc_max);
        }
        if (impossible || v_star > logD_budget) continue;

        double logc = 0.0;
        for (const auto& c : cs)
            if (c.m >= 1) logc = std::max(logc, (c.r - v_star) / c.m);
        logc = std::clamp(logc, 0.0, logc_max);

        double t_max = -pos_inf;
        for (const auto& c : cs) t_max = std::max(t_max, c.r - c.m * logc);
        CriterionFit fit;
        fit.variant = variant;
        fit.logd = logd;
        fit.logc = logc;
        fit.logD = std::max(0.0, t_max);
        fit.slack = fit.logD - t_max;
        fit.window = M;
        fit.x_sampled = sampled;

        if (!best || fit.logd > best->logd ||
            (fit.logd == best->logd && fit.logD < best->logD))
            best = fit;
    }
    return best;
}

CriterionFit certificate_to_criterion(const Certificate& cert, double kappa) {
    if (!(kappa > 1.0)) throw std::invalid_argument("kappa must exceed 1");
    if (!(cert.a > 0.0) || !(cert.slack >= 0.0))
        throw std::invalid_argument(
            "conversion needs a certificate with positive rate and nonnegative slack");
    const double log_kappa = std::log(kappa);
    CriterionFit fit;
    fit.logd = log_kappa + cert.b + cert.a;
    fit.logc = log_kappa + cert.b;
    fit.logD = cert.L + std::log(kappa / (kappa - 1.0));
    fit.window = cert.window;
    fit.slack = cert.slack;
    if (fit.logc == 0.0)
        fit.variant = Variant::COR4;
    else if (kLog2 + fit.logc < fit.logd)
        fit.variant = Variant::PROP3;
    else
        fit.variant = Variant::THM2;
    return fit;
}

ConvertedCertificate criterion_to_certificate(const CriterionFit& fit) {
    ConvertedCertificate out;
    out.cert.L = fit.logD;
    out.cert.a = fit.logd - fit.logc;
    out.cert.b = fit.logc;
    out.cert.window = fit.window;
    out.cert.slack = fit.slack;  // inherited lower bound from the source fit
    switch (fit.variant) {
        case Variant::THM2: out.cert.concept_kind = Concept::PIS; break;
        case Variant::COR4: out.cert.concept_kind = Concept::UPIS; break;
        case Variant::PROP3:
            // 2c < d does not force s < 1/r (that needs c^2 < d); downgrade
            // rather than silently patching the constant.
            if (fit.logc >= out.cert.a) {
                out.cert.concept_kind = Concept::PIS;
                out.downgraded = true;
            } else {
                out.cert.concept_kind = Concept::SPIS;
            }
            break;
    }
    return out;
}

CriterionCheck check_criterion(const OperatorSeq& system,
                               const CriterionFit& fit, int M, Norm norm,
                               std::uint64_t seed, int random_x) {
    bool sampled = false;
    const auto xs = test_vectors(system, norm, seed, random_x, &sampled);
    const auto nus = propagate_all(system, M, xs, norm);
    const auto cs = constraints_for_d(nus, M, fit.logd);
    CriterionCheck check;
    check.worst_margin = pos_inf;
    for (const auto& c : cs) {
        const double margin =
            c.r == pos_inf ? neg_inf : fit.logD + c.m * fit.logc - c.r;
        check.worst_margin = std::min(check.worst_margin, margin);
        ++check.constraints;
    }
    check.pass = check.worst_margin >= -1e-9;
    return check;
}

std::vector<EquivalenceReport> check_equivalence(
    const OperatorSeq& system, int M, Variant variant, std::uint64_t seed,
    double L_budget, double gap_delta, double kappa, double logD_budget,
    Norm norm) {
    std::vector<EquivalenceReport> reports;
    Concept concept_kind = Concept::PIS;
    if (variant == Variant::PROP3) concept_kind = Concept::SPIS;
    if (variant == Variant::COR4) concept_kind = Concept::UPIS;

    TransitionCache cache(system);
    const GrowthTable table = growth_table(cache, M, norm);

    EquivalenceReport fwd;
    fwd.system_label = system.label;
    fwd.variant = variant;
    fwd.direction = "definition->criterion";
    const auto cert = fit_certificate(table, concept_kind, L_budget, gap_delta);
    if (cert) {
        fwd.source_feasible = true;
        fwd.cert = *cert;
        fwd.fit = certificate_to_criterion(*cert, kappa);
        const auto check = check_criterion(system, *fwd.fit, M, norm, seed);
        fwd.margin = check.worst_margin;
        fwd.pass = check.pass;
    } else {
        fwd.note = "no certificate on this window";
        fwd.pass = true;  // nothing to convert; consistency judged below
    }
    reports.push_back(fwd);

    EquivalenceReport bwd;
    bwd.system_label = system.label;
    bwd.variant = variant;
    bwd.direction = "criterion->definition";
    const auto fit = fit_criterion(system, M, variant,
                                   default_d_grid(system, M, norm), logD_budget,
                                   norm, seed);
    if (fit) {
        bwd.source_feasible = true;
        bwd.fit = *fit;
        const auto converted = criterion_to_certificate(*fit);
        bwd.cert = converted.cert;
        if (converted.downgraded)
            bwd.note = "PROP3 constants violate s < 1/r; certificate downgraded to PIS";
        const auto report =
            verify_certificate(system, converted.cert, 1000, seed, norm);
        bwd.margin = report.worst_margin;
        bwd.pass = report.pass;
    } else {
        bwd.note = "no criterion fit on this window";
        bwd.pass = true;
    }
    reports.push_back(bwd);

    if (!fwd.source_feasible && !bwd.source_feasible) {
        reports[0].note += "; both directions infeasible (consistent)";
        reports[1].note += "; both directions infeasible (consistent)";
    } else if (fwd.source_feasible != bwd.source_feasible) {
        reports[0].pass = reports[0].pass && reports[0].source_feasible;
        reports[1].pass = reports[1].pass && reports[1].source_feasible;
        const std::string warn = "; directions disagree on feasibility";
        reports[0].note += warn;
        reports[1].note += warn;
    }
    return reports;
}

}  // namespace instab

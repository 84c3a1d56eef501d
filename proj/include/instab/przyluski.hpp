#ifndef INSTAB_PRZYLUSKI_HPP
#define INSTAB_PRZYLUSKI_HPP

#include "instab/certify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace instab {

enum class Variant { THM2, PROP3, COR4 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

// Witness for the weighted-summation criterion
//   sum_{k=n}^m d^{m-k} ||A_k^n x|| <= D c^m ||A_m^n x||
// in log domain: logD >= 0, logd > 0, logc >= 0. THM2 requires c < d,
// PROP3 requires 2c < d, COR4 drops the c^m factor (logc = 0).
struct CriterionFit {
    Variant variant = Variant::THM2;
    double logD = 0.0;
    double logd = 0.0;
    double logc = 0.0;
    int window = 0;
    double slack = 0.0;
    bool x_sampled = false;  // dense: x quantifier covered by samples only
};

// log of sum_{k=n}^m d^{m-k} ||A_k^n x||, evaluated by log-sum-exp.
// x is normalized to unit length in the given norm first.
double weighted_sum(const OperatorSeq& system, int m, int n, const LogVector& x,
                    double d, Norm norm = Norm::Two);

// 17 log-uniform points spanning (1, 4 * max step gain].
std::vector<double> default_d_grid(const OperatorSeq& system, int M,
                                   Norm norm = Norm::Two);

// For each grid d, minimize logD subject to the criterion constraints over
// all window pairs and test vectors, then shrink logc at the optimum. Returns
// the feasible fit with maximal logd (ties: minimal logD), or nullopt when no
// grid point fits within the logD budget.
std::optional<CriterionFit> fit_criterion(const OperatorSeq& system, int M,
                                          Variant variant,
                                          const std::vector<double>& d_grid,
                                          double logD_budget = 10.0,
                                          Norm norm = Norm::Two,
                                          std::uint64_t seed = 0,
                                          int random_x = 4);

// Constructive direction certificate -> criterion: d = kappa*s/r, c = kappa*s,
// D = N * kappa/(kappa-1). The kappa/(kappa-1) factor is the geometric series
// sum_{k} (s/(dr))^k, so the constructed fit genuinely satisfies the
// summation inequality.
CriterionFit certificate_to_criterion(const Certificate& cert,
                                      double kappa = 2.0);

struct ConvertedCertificate {
    Certificate cert;
    bool downgraded = false;  // PROP3 source with logc >= logd - logc
};

// Constructive direction criterion -> certificate: N = D, r = c/d, s = c.
// A PROP3 fit whose constants violate s < 1/r is downgraded to PIS.
ConvertedCertificate criterion_to_certificate(const CriterionFit& fit);

struct CriterionCheck {
    bool pass = false;
    double worst_margin = 0.0;
    int constraints = 0;
};

// Re-evaluates the summation inequality for a concrete fit over the window.
CriterionCheck check_criterion(const OperatorSeq& system,
                               const CriterionFit& fit, int M,
                               Norm norm = Norm::Two, std::uint64_t seed = 0,
                               int random_x = 4);

struct EquivalenceReport {
    std::string system_label;
    Variant variant = Variant::THM2;
    std::string direction;
    bool source_feasible = false;
    std::optional<Certificate> cert;
    std::optional<CriterionFit> fit;
    double margin = 0.0;
    bool pass = false;
    std::string note;
};

// Runs both constructive directions of the equivalence on one system.
std::vector<EquivalenceReport> check_equivalence(
    const OperatorSeq& system, int M, Variant variant, std::uint64_t seed = 0,
    double L_budget = 0.0, double gap_delta = 1e-6, double kappa = 2.0,
    double logD_budget = 10.0, Norm norm = Norm::Two);

}  // namespace instab

#endif

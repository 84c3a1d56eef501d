#ifndef INSTAB_CERTIFY_HPP
#define INSTAB_CERTIFY_HPP

#include "instab/transition.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace instab {

enum class Concept { UPIS, PIS, SPIS };
enum class Verdict { Certified, Rejected, Inconclusive };

std::string to_string(Concept c);
std::string to_string(Verdict v);
Concept parse_concept(const std::string& s);

// Witness for one instability concept_kind on the window [0, M], in log domain:
// L = log N, a = log(1/r), b = log s. UPIS forces b = 0; SPIS requires
// b < a (up to the configured gap).
struct Certificate {
    Concept concept_kind = Concept::PIS;
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
    int window = 0;
    double slack = 0.0;  // min over pairs of g(m,n) - [a(m-n) - b*n - L]
};

// Smallest log N making g(m,n) >= a(m-n) - b*n - L hold on the window
// (restricted to m <= m_limit when m_limit >= 0). +inf if any entry in the
// window is -inf.
double required_offset(const GrowthTable& table, double a, double b,
                       int m_limit = -1);

// Maximize a subject to a(m-n) - b*n - L <= g(m,n) on the whole window,
// 0 <= L <= L_budget and the concept_kind's b-constraint; ties broken by minimal
// b, then minimal L. Exact up to 1e-9 on a (UPIS/PIS admit closed-form
// maxima; SPIS reduces to the rightmost root of a convex piecewise-linear
// function of a). Returns nullopt when no a > 0 is feasible.
std::optional<Certificate> fit_certificate(const GrowthTable& table,
                                           Concept concept_kind, double L_budget,
                                           double gap_delta = 1e-6);

// Prefix of a table: entries with m <= M.
GrowthTable subtable(const GrowthTable& table, int M);

struct Classification {
    Concept concept_kind = Concept::PIS;
    Verdict verdict = Verdict::Inconclusive;
    double rate = 0.0;     // frozen a
    double b = 0.0;        // frozen b
    bool fallback_rate = false;  // no feasible fit on the first window
    double slope = 0.0;    // least-squares slope of L* over the last 3 windows
    std::vector<int> schedule;
    std::vector<double> offsets;  // L*(M_k)
    double epsilon = 1e-6;
    double L_budget = 0.0;
    double gap_delta = 1e-6;
};

// Window-robust verdict: fit (a, b) on the smallest window, then track the
// required offset L*(M_k) across the schedule. Bounded increments certify,
// persistent linear growth rejects, anything else is inconclusive.
Classification classify(const OperatorSeq& system, Concept concept_kind,
                        const std::vector<int>& schedule, double epsilon = 1e-6,
                        double L_budget = 0.0, double gap_delta = 1e-6,
                        Norm norm = Norm::Two);

// Same, against a prebuilt table covering schedule.back().
Classification classify_table(const GrowthTable& table, Concept concept_kind,
                              const std::vector<int>& schedule, double epsilon,
                              double L_budget, double gap_delta);

struct VerifyReport {
    bool pass = false;
    double worst_margin = 0.0;
    int samples = 0;
    int worst_m = -1, worst_n = -1, worst_p = -1;
};

// Pointwise check of the defining inequality over sampled triplets
// m >= n >= p on the certificate's window, with basis vectors (plus seeded
// random unit vectors for dense systems). 1e-9 slack.
VerifyReport verify_certificate(const OperatorSeq& system,
                                const Certificate& cert, int sample_count,
                                std::uint64_t seed, Norm norm = Norm::Two);

}  // namespace instab

#endif

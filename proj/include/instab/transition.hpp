#ifndef INSTAB_TRANSITION_HPP
#define INSTAB_TRANSITION_HPP

#include "instab/systems.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace instab {

// Transition operators A_m^n = A(m) * ... * A(n+1) (identity for m = n),
// accumulated strictly left-to-right from index n with per-step scale
// extraction. Rows cache partial products at checkpoint strides so a query
// recomputes at most stride-1 steps. Results are independent of query order.
class TransitionCache {
public:
    explicit TransitionCache(OperatorSeq system, int stride = 32);

    const OperatorSeq& system() const { return system_; }

    // A_m^n in scale-normalized form; requires m >= n >= 0.
    StepOperator transition(int m, int n) const;

    // log gamma(m, n), gamma = inf over unit x of ||A_m^n x||.
    // -inf when the product is singular. Dense systems support only the
    // two-norm; scalar/diagonal gains coincide across the three norms.
    double min_gain(int m, int n, Norm norm) const;

private:
    const StepOperator& step(int n) const;
    StepOperator compose(const StepOperator& left, const StepOperator& right) const;

    OperatorSeq system_;
    int stride_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::vector<StepOperator>> rows_;  // n -> checkpoints
    mutable std::map<int, StepOperator> steps_;
};

// Triangular grid of g(m, n) = log gamma(m, n) for 0 <= n <= m <= M.
struct GrowthTable {
    int M = 0;
    Norm norm = Norm::Two;
    std::vector<double> g;  // index m*(m+1)/2 + n

    double at(int m, int n) const { return g[static_cast<std::size_t>(m) * (m + 1) / 2 + n]; }
    bool has_singular() const;
};

GrowthTable growth_table(const TransitionCache& cache, int M, Norm norm);

// CSV export: header "m,n,g", lexicographic (m, n), 17 significant digits,
// literal -inf for singular products.
std::string growth_table_csv(const GrowthTable& table);

// Closed form for the alternating fixture: log |A_m^n| =
// (m-n) log c + log a_mn with a_mn = 1 / 2^{-n-1} / 2^{m+1} / 2^{m-n}
// by the parities of (m, n).
double paper_example_closed_form(double c, int m, int n);

// A state vector carried through the system in scale-normalized form.
struct LogVector {
    Kind kind = Kind::Scalar;
    int dim = 1;
    std::vector<double> log_mags;           // scalar/diagonal entries
    std::vector<std::uint8_t> zero_flags;
    Eigen::VectorXd vec;                    // dense, max abs entry 1
    double log_scale = 0.0;
    bool zero_vec = false;

    static LogVector basis(Kind kind, int dim, int index);
    static LogVector dense_vec(const Eigen::VectorXd& raw);

    double log_norm(Norm norm) const;
    // Scales the vector so log_norm(norm) == 0 (no-op on the zero vector).
    void normalize(Norm norm);
};

// v <- A(k) v for k = n+1 .. m, returning log ||A_k^n x|| for every
// k in [n, m]. Output has size m - n + 1.
std::vector<double> propagate_log_norms(const OperatorSeq& system, int m, int n,
                                        const LogVector& x, Norm norm);

}  // namespace instab

#endif

#ifndef INSTAB_SYSTEMS_HPP
#define INSTAB_SYSTEMS_HPP

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace instab {

// File-level failures (missing path, unwritable directory). Kept distinct
// from std::invalid_argument so the CLI can map them to a separate exit code.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Kind { Scalar, Diagonal, Dense };
enum class Norm { One, Two, Infinity };

std::string to_string(Kind k);
std::string to_string(Norm n);
Norm parse_norm(const std::string& s);

// One coefficient A(n), stored so that magnitudes never leave the log domain.
//
// Scalar / diagonal entries are (log-magnitude, zero-flag) pairs; a flagged
// entry is exactly 0 and its log field is meaningless. Dense operators are a
// scale-normalized matrix (max absolute entry in [0.5, 1]) plus a log scale
// factor, so the represented operator is exp(log_scale) * mat.
struct StepOperator {
    Kind kind = Kind::Scalar;
    int dim = 1;

    // scalar: size 1; diagonal: size dim
    std::vector<double> log_mags;
    std::vector<std::uint8_t> zero_flags;

    // dense
    Eigen::MatrixXd mat;
    double log_scale = 0.0;
    bool zero_op = false;  // dense all-zero

    static StepOperator scalar(double log_mag, bool zero = false);
    static StepOperator diagonal(std::vector<double> log_mags,
                                 std::vector<std::uint8_t> zero_flags = {});
    static StepOperator dense(const Eigen::MatrixXd& raw);
    static StepOperator identity(Kind kind, int dim);

    // log of the operator norm sup ||Ax||/||x|| in the given vector norm.
    double log_max_gain(Norm norm) const;

    bool equals(const StepOperator& other) const;
};

// A coefficient sequence A: N -> B(R^dim). Immutable; coeff_at is total on
// n >= 0 and deterministic.
struct OperatorSeq {
    Kind kind = Kind::Scalar;
    int dim = 1;
    std::string label;
    std::function<StepOperator(int)> coeff_at;
};

// The alternating fixture: A(n) = c * a_n with a_n = 2^{-n} (n even),
// 2^{n+1} (n odd). Everything is evaluated in the log domain; the raw
// coefficients overflow doubles near n ~ 1000.
OperatorSeq make_paper_example(double c);

OperatorSeq make_constant(const StepOperator& op, int dim);

// Per-entry log gains drawn uniformly from [range_lo, range_hi], one
// independent deterministic stream per (seed, n).
OperatorSeq make_random_diagonal(int dim, std::uint64_t seed,
                                 double range_lo, double range_hi);

// Parses a system-description document (JSON). Supported kinds:
// "paper-example", "constant", "random-diagonal", "explicit".
OperatorSeq load_system(const std::string& json_text);
OperatorSeq load_system_file(const std::string& path);

}  // namespace instab

#endif

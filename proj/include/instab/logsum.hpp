#ifndef INSTAB_LOGSUM_HPP
#define INSTAB_LOGSUM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace instab {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without forming the raw exponentials.
inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// log(sum_i exp(args[i])); -inf on an empty or all -inf input.
inline double log_sum_exp(std::span<const double> args) {
    double max_arg = neg_inf;
    for (double a : args) max_arg = std::max(max_arg, a);
    if (max_arg == neg_inf) return neg_inf;
    double sum = 0.0;
    for (double a : args) sum += std::exp(a - max_arg);
    return max_arg + std::log(sum);
}

}  // namespace instab

#endif

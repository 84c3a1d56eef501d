#include "instab/transition.hpp"

#include "instab/logsum.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace instab {

TransitionCache::TransitionCache(OperatorSeq system, int stride)
    : system_(std::move(system)), stride_(stride) {
    if (stride_ < 1) throw std::invalid_argument("stride must be positive");
}

const StepOperator& TransitionCache::step(int n) const {
    auto it = steps_.find(n);
    if (it == steps_.end())
        it = steps_.emplace(n, system_.coeff_at(n)).first;
    return it->second;
}

StepOperator TransitionCache::compose(const StepOperator& left,
                                      const StepOperator& right) const {
    StepOperator out;
    out.kind = left.kind;
    out.dim = left.dim;
    switch (left.kind) {
        case Kind::Scalar:
        case Kind::Diagonal: {
            out.log_mags.resize(left.log_mags.size());
            out.zero_flags.resize(left.log_mags.size());
            for (std::size_t i = 0; i < left.log_mags.size(); ++i) {
                const bool zero = left.zero_flags[i] || right.zero_flags[i];
                out.zero_flags[i] = zero ? 1 : 0;
                out.log_mags[i] = zero ? 0.0 : left.log_mags[i] + right.log_mags[i];
            }
            break;
        }
        case Kind::Dense: {
            if (left.zero_op || right.zero_op) {
                out.zero_op = true;
                out.mat = Eigen::MatrixXd::Zero(left.dim, left.dim);
                break;
            }
            Eigen::MatrixXd m = left.mat * right.mat;
            const double scale = m.cwiseAbs().maxCoeff();
            if (scale == 0.0) {
                out.zero_op = true;
                out.mat = Eigen::MatrixXd::Zero(left.dim, left.dim);
            } else {
                out.mat = m / scale;
                out.log_scale = left.log_scale + right.log_scale + std::log(scale);
            }
            break;
        }
    }
    return out;
}

StepOperator TransitionCache::transition(int m, int n) const {
    if (n < 0 || m < n)
        throw std::domain_error("transition requires m >= n >= 0");
    if (m == n) return StepOperator::identity(system_.kind, system_.dim);

    std::lock_guard<std::mutex> lock(mutex_);
    auto& row = rows_[n];
    if (row.empty()) row.push_back(StepOperator::identity(system_.kind, system_.dim));

    const int want = (m - n) / stride_;
    while (static_cast<int>(row.size()) - 1 < want) {
        const int j = static_cast<int>(row.size()) - 1;
        StepOperator p = row.back();
        for (int i = n + j * stride_ + 1; i <= n + (j + 1) * stride_; ++i)
            p = compose(step(i), p);
        row.push_back(std::move(p));
    }

    StepOperator p = row[static_cast<std::size_t>(want)];
    for (int i = n + want * stride_ + 1; i <= m; ++i) p = compose(step(i), p);
    return p;
}

double TransitionCache::min_gain(int m, int n, Norm norm) const {
    const StepOperator t = transition(m, n);
    switch (t.kind) {
        case Kind::Scalar:
            return t.zero_flags[0] ? neg_inf : t.log_mags[0];
        case Kind::Diagonal: {
            double worst = pos_inf;
            for (int i = 0; i < t.dim; ++i) {
                if (t.zero_flags[i]) return neg_inf;
                worst = std::min(worst, t.log_mags[i]);
            }
            return worst;
        }
        case Kind::Dense: {
            if (norm != Norm::Two)
                throw std::invalid_argument(
                    "minimum gain of a dense system is only computed in the two-norm");
            if (t.zero_op) return neg_inf;
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.mat);
            const double sigma = svd.singularValues().minCoeff();
            return sigma == 0.0 ? neg_inf : t.log_scale + std::log(sigma);
        }
    }
    return neg_inf;
}

bool GrowthTable::has_singular() const {
    for (double v : g)
        if (v == neg_inf) return true;
    return false;
}

GrowthTable growth_table(const TransitionCache& cache, int M, Norm norm) {
    if (M < 0) throw std::invalid_argument("horizon must be nonnegative");
    GrowthTable table;
    table.M = M;
    table.norm = norm;
    table.g.resize(static_cast<std::size_t>(M + 1) * (M + 2) / 2);
    for (int m = 0; m <= M; ++m)
        for (int n = 0; n <= m; ++n)
            table.g[static_cast<std::size_t>(m) * (m + 1) / 2 + n] =
                (m == n) ? 0.0 : cache.min_gain(m, n, norm);
    return table;
}

std::string growth_table_csv(const GrowthTable& table) {
    std::ostringstream out;
    out << "m,n,g\n";
    char buf[64];
    for (int m = 0; m <= table.M; ++m) {
        for (int n = 0; n <= m; ++n) {
            const double g = table.at(m, n);
            if (g == neg_inf) {
                out << m << ',' << n << ",-inf\n";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", g);
                out << m << ',' << n << ',' << buf << '\n';
            }
        }
    }
    return out.str();
}

double paper_example_closed_form(double c, int m, int n) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("closed form requires finite c > 0");
    if (n < 0 || m < n)
        throw std::domain_error("closed form requires m >= n >= 0");
    if (m == n) return 0.0;
    constexpr double kLog2 = 0.6931471805599453094172321214581766;
    const bool m_even = m % 2 == 0;
    const bool n_even = n % 2 == 0;
    double log_a;
    if (m_even)
        log_a = n_even ? 0.0 : -(n + 1) * kLog2;
    else
        log_a = n_even ? (m + 1) * kLog2 : (m - n) * kLog2;
    return (m - n) * std::log(c) + log_a;
}

LogVector LogVector::basis(Kind kind, int dim, int index) {
    if (index < 0 || index >= dim) throw std::invalid_argument("basis index");
    LogVector v;
    v.kind = kind;
    v.dim = dim;
    switch (kind) {
        case Kind::Scalar:
            v.log_mags = {0.0};
            v.zero_flags = {0};
            break;
        case Kind::Diagonal:
            v.log_mags.assign(static_cast<std::size_t>(dim), 0.0);
            v.zero_flags.assign(static_cast<std::size_t>(dim), 1);
            v.zero_flags[static_cast<std::size_t>(index)] = 0;
            break;
        case Kind::Dense:
            v.vec = Eigen::VectorXd::Unit(dim, index);
            break;
    }
    return v;
}

LogVector LogVector::dense_vec(const Eigen::VectorXd& raw) {
    LogVector v;
    v.kind = Kind::Dense;
    v.dim = static_cast<int>(raw.size());
    const double scale = raw.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        v.zero_vec = true;
        v.vec = Eigen::VectorXd::Zero(raw.size());
    } else {
        v.vec = raw / scale;
        v.log_scale = std::log(scale);
    }
    return v;
}

double LogVector::log_norm(Norm norm) const {
    switch (kind) {
        case Kind::Scalar:
            return zero_flags[0] ? neg_inf : log_mags[0];
        case Kind::Diagonal: {
            std::vector<double> live;
            for (std::size_t i = 0; i < log_mags.size(); ++i)
                if (!zero_flags[i]) live.push_back(log_mags[i]);
            if (live.empty()) return neg_inf;
            switch (norm) {
                case Norm::One:
                    return log_sum_exp(live);
                case Norm::Two:
                    for (auto& x : live) x *= 2.0;
                    return 0.5 * log_sum_exp(live);
                case Norm::Infinity:
                    return *std::max_element(live.begin(), live.end());
            }
            return neg_inf;
        }
        case Kind::Dense: {
            if (zero_vec) return neg_inf;
            double n2 = 0.0;
            switch (norm) {
                case Norm::One: n2 = vec.lpNorm<1>(); break;
                case Norm::Two: n2 = vec.norm(); break;
                case Norm::Infinity: n2 = vec.lpNorm<Eigen::Infinity>(); break;
            }
            return n2 == 0.0 ? neg_inf : log_scale + std::log(n2);
        }
    }
    return neg_inf;
}

void LogVector::normalize(Norm norm) {
    const double c = log_norm(norm);
    if (c == neg_inf) return;
    switch (kind) {
        case Kind::Scalar:
        case Kind::Diagonal:
            for (std::size_t i = 0; i < log_mags.size(); ++i)
                if (!zero_flags[i]) log_mags[i] -= c;
            break;
        case Kind::Dense:
            log_scale -= c;
            break;
    }
}

namespace {

void apply_step(LogVector& v, const StepOperator& a) {
    switch (v.kind) {
        case Kind::Scalar:
        case Kind::Diagonal:
            for (std::size_t i = 0; i < v.log_mags.size(); ++i) {
                if (a.zero_flags[i]) {
                    v.zero_flags[i] = 1;
                    v.log_mags[i] = 0.0;
                } else if (!v.zero_flags[i]) {
                    v.log_mags[i] += a.log_mags[i];
                }
            }
            break;
        case Kind::Dense: {
            if (v.zero_vec) return;
            if (a.zero_op) {
                v.zero_vec = true;
                v.vec.setZero();
                return;
            }
            Eigen::VectorXd w = a.mat * v.vec;
            const double scale = w.cwiseAbs().maxCoeff();
            if (scale == 0.0) {
                v.zero_vec = true;
                v.vec.setZero();
            } else {
                v.vec = w / scale;
                v.log_scale += a.log_scale + std::log(scale);
            }
            break;
        }
    }
}

}  // namespace

std::vector<double> propagate_log_norms(const OperatorSeq& system, int m, int n,
                                        const LogVector& x, Norm norm) {
    if (n < 0 || m < n)
        throw std::domain_error("propagation requires m >= n >= 0");
    if (x.kind != system.kind || x.dim != system.dim)
        throw std::invalid_argument("vector does not match system");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m - n + 1));
    LogVector v = x;
    out.push_back(v.log_norm(norm));
    for (int k = n + 1; k <= m; ++k) {
        apply_step(v, system.coeff_at(k));
        out.push_back(v.log_norm(norm));
    }
    return out;
}

}  // namespace instab

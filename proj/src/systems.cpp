#include "instab/systems.hpp"

#include "instab/logsum.hpp"
#include "instab/rng.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <sstream>

namespace instab {

namespace {

constexpr double kLog2 = 0.6931471805599453094172321214581766;

using nlohmann::json;

}  // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::Scalar: return "scalar";
        case Kind::Diagonal: return "diagonal";
        case Kind::Dense: return "dense";
    }
    return "?";
}

std::string to_string(Norm n) {
    switch (n) {
        case Norm::One: return "one";
        case Norm::Two: return "two";
        case Norm::Infinity: return "infinity";
    }
    return "?";
}

Norm parse_norm(const std::string& s) {
    if (s == "one" || s == "1") return Norm::One;
    if (s == "two" || s == "2") return Norm::Two;
    if (s == "infinity" || s == "inf") return Norm::Infinity;
    throw std::invalid_argument("unknown norm: " + s);
}

StepOperator StepOperator::scalar(double log_mag, bool zero) {
    StepOperator op;
    op.kind = Kind::Scalar;
    op.dim = 1;
    op.log_mags = {zero ? 0.0 : log_mag};
    op.zero_flags = {zero ? std::uint8_t{1} : std::uint8_t{0}};
    return op;
}

StepOperator StepOperator::diagonal(std::vector<double> log_mags,
                                    std::vector<std::uint8_t> zero_flags) {
    if (log_mags.empty())
        throw std::invalid_argument("diagonal operator needs at least one entry");
    StepOperator op;
    op.kind = Kind::Diagonal;
    op.dim = static_cast<int>(log_mags.size());
    op.log_mags = std::move(log_mags);
    if (zero_flags.empty()) zero_flags.assign(op.log_mags.size(), 0);
    if (zero_flags.size() != op.log_mags.size())
        throw std::invalid_argument("zero_flags size mismatch");
    op.zero_flags = std::move(zero_flags);
    for (std::size_t i = 0; i < op.log_mags.size(); ++i)
        if (op.zero_flags[i]) op.log_mags[i] = 0.0;
    return op;
}

StepOperator StepOperator::dense(const Eigen::MatrixXd& raw) {
    if (raw.rows() != raw.cols() || raw.rows() < 1)
        throw std::invalid_argument("dense operator must be square");
    StepOperator op;
    op.kind = Kind::Dense;
    op.dim = static_cast<int>(raw.rows());
    const double scale = raw.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        op.zero_op = true;
        op.mat = Eigen::MatrixXd::Zero(op.dim, op.dim);
        op.log_scale = 0.0;
    } else {
        op.mat = raw / scale;
        op.log_scale = std::log(scale);
    }
    return op;
}

StepOperator StepOperator::identity(Kind kind, int dim) {
    switch (kind) {
        case Kind::Scalar:
            return scalar(0.0);
        case Kind::Diagonal:
            return diagonal(std::vector<double>(dim, 0.0));
        case Kind::Dense: {
            StepOperator op;
            op.kind = Kind::Dense;
            op.dim = dim;
            op.mat = Eigen::MatrixXd::Identity(dim, dim);
            op.log_scale = 0.0;
            return op;
        }
    }
    throw std::invalid_argument("bad kind");
}

double StepOperator::log_max_gain(Norm norm) const {
    switch (kind) {
        case Kind::Scalar:
            return zero_flags[0] ? neg_inf : log_mags[0];
        case Kind::Diagonal: {
            double best = neg_inf;
            for (int i = 0; i < dim; ++i)
                if (!zero_flags[i]) best = std::max(best, log_mags[i]);
            return best;
        }
        case Kind::Dense: {
            if (zero_op) return neg_inf;
            double g = 0.0;
            switch (norm) {
                case Norm::One:
                    g = mat.cwiseAbs().colwise().sum().maxCoeff();
                    break;
                case Norm::Infinity:
                    g = mat.cwiseAbs().rowwise().sum().maxCoeff();
                    break;
                case Norm::Two: {
                    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
                    g = svd.singularValues().maxCoeff();
                    break;
                }
            }
            return g == 0.0 ? neg_inf : log_scale + std::log(g);
        }
    }
    return neg_inf;
}

bool StepOperator::equals(const StepOperator& other) const {
    if (kind != other.kind || dim != other.dim) return false;
    switch (kind) {
        case Kind::Scalar:
        case Kind::Diagonal:
            return log_mags == other.log_mags && zero_flags == other.zero_flags;
        case Kind::Dense:
            return zero_op == other.zero_op && log_scale == other.log_scale &&
                   mat == other.mat;
    }
    return false;
}

OperatorSeq make_paper_example(double c) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("paper example requires finite c > 0");
    const double log_c = std::log(c);
    OperatorSeq seq;
    seq.kind = Kind::Scalar;
    seq.dim = 1;
    {
        std::ostringstream os;
        os << "paper-example(c=" << c << ")";
        seq.label = os.str();
    }
    seq.coeff_at = [log_c](int n) {
        if (n < 0) throw std::domain_error("negative index");
        const double lm = (n % 2 == 0) ? log_c - n * kLog2 : log_c + (n + 1) * kLog2;
        return StepOperator::scalar(lm);
    };
    return seq;
}

OperatorSeq make_constant(const StepOperator& op, int dim) {
    if (op.dim != dim)
        throw std::invalid_argument("constant system: operator dim mismatch");
    OperatorSeq seq;
    seq.kind = op.kind;
    seq.dim = dim;
    seq.label = "constant(" + to_string(op.kind) + ")";
    seq.coeff_at = [op](int n) {
        if (n < 0) throw std::domain_error("negative index");
        return op;
    };
    return seq;
}

OperatorSeq make_random_diagonal(int dim, std::uint64_t seed,
                                 double range_lo, double range_hi) {
    if (dim < 1) throw std::invalid_argument("dim must be positive");
    if (!(range_lo <= range_hi) || !std::isfinite(range_lo) ||
        !std::isfinite(range_hi))
        throw std::invalid_argument("log gain range must be nonempty and bounded");
    OperatorSeq seq;
    seq.kind = Kind::Diagonal;
    seq.dim = dim;
    {
        std::ostringstream os;
        os << "random-diagonal(dim=" << dim << ",seed=" << seed << ")";
        seq.label = os.str();
    }
    seq.coeff_at = [dim, seed, range_lo, range_hi](int n) {
        if (n < 0) throw std::domain_error("negative index");
        SplitMix64 g(derive_seed(seed, static_cast<std::uint64_t>(n)));
        std::vector<double> lm(static_cast<std::size_t>(dim));
        for (auto& v : lm) v = g.uniform(range_lo, range_hi);
        return StepOperator::diagonal(std::move(lm));
    };
    return seq;
}

namespace {

StepOperator step_from_json_value(const json& v) {
    if (v.is_number()) {
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite coefficient");
        return StepOperator::scalar(std::log(std::abs(x)), x == 0.0);
    }
    if (v.is_array() && !v.empty() && v[0].is_number()) {
        std::vector<double> lm;
        std::vector<std::uint8_t> zero;
        for (const auto& e : v) {
            const double x = e.get<double>();
            if (!std::isfinite(x))
                throw std::invalid_argument("non-finite coefficient");
            zero.push_back(x == 0.0 ? 1 : 0);
            lm.push_back(x == 0.0 ? 0.0 : std::log(std::abs(x)));
        }
        return StepOperator::diagonal(std::move(lm), std::move(zero));
    }
    if (v.is_array() && !v.empty() && v[0].is_array()) {
        const auto rows = v.size();
        Eigen::MatrixXd m(rows, rows);
        for (std::size_t i = 0; i < rows; ++i) {
            if (v[i].size() != rows)
                throw std::invalid_argument("dense coefficient must be square");
            for (std::size_t j = 0; j < rows; ++j)
                m(static_cast<int>(i), static_cast<int>(j)) = v[i][j].get<double>();
        }
        if (!m.allFinite()) throw std::invalid_argument("non-finite coefficient");
        return StepOperator::dense(m);
    }
    throw std::invalid_argument("coefficient must be a number, vector, or matrix");
}

OperatorSeq load_explicit(const json& doc) {
    if (!doc.contains("coeffs") || !doc["coeffs"].is_array() ||
        doc["coeffs"].empty())
        throw std::invalid_argument("explicit system needs a nonempty coeffs list");
    std::vector<StepOperator> ops;
    for (const auto& v : doc["coeffs"]) ops.push_back(step_from_json_value(v));
    for (const auto& op : ops)
        if (op.kind != ops[0].kind || op.dim != ops[0].dim)
            throw std::invalid_argument("explicit coeffs must share kind and dim");

    enum class Ext { None, Periodic, ConstantTail };
    Ext ext = Ext::None;
    if (doc.contains("extension")) {
        const std::string e = doc["extension"].get<std::string>();
        if (e == "periodic") ext = Ext::Periodic;
        else if (e == "constant-tail") ext = Ext::ConstantTail;
        else throw std::invalid_argument("unknown extension rule: " + e);
    }

    OperatorSeq seq;
    seq.kind = ops[0].kind;
    seq.dim = ops[0].dim;
    seq.label = "explicit";
    const auto count = static_cast<int>(ops.size());
    seq.coeff_at = [ops = std::move(ops), count, ext](int n) {
        if (n < 0) throw std::domain_error("negative index");
        if (n < count) return ops[static_cast<std::size_t>(n)];
        switch (ext) {
            case Ext::Periodic:
                return ops[static_cast<std::size_t>(n % count)];
            case Ext::ConstantTail:
                return ops.back();
            case Ext::None:
                throw std::out_of_range(
                    "explicit coefficient list exhausted at index " +
                    std::to_string(n) + " and no extension rule declared");
        }
        throw std::out_of_range("unreachable");
    };
    return seq;
}

}  // namespace

OperatorSeq load_system(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("system document parse error: ") +
                                    e.what());
    }
    if (!doc.is_object() || !doc.contains("kind"))
        throw std::invalid_argument("system document must be an object with a 'kind'");
    const std::string kind = doc["kind"].get<std::string>();

    OperatorSeq seq;
    if (kind == "paper-example") {
        seq = make_paper_example(doc.value("c", 1.0));
    } else if (kind == "constant") {
        if (!doc.contains("value"))
            throw std::invalid_argument("constant system needs 'value'");
        StepOperator op = step_from_json_value(doc["value"]);
        int dim = doc.value("dim", op.dim);
        seq = make_constant(op, dim);
    } else if (kind == "random-diagonal") {
        if (!doc.contains("log_gain_range") || doc["log_gain_range"].size() != 2)
            throw std::invalid_argument(
                "random-diagonal system needs log_gain_range = [lo, hi]");
        seq = make_random_diagonal(doc.value("dim", 1),
                                   doc.value("seed", std::uint64_t{0}),
                                   doc["log_gain_range"][0].get<double>(),
                                   doc["log_gain_range"][1].get<double>());
    } else if (kind == "explicit") {
        seq = load_explicit(doc);
    } else {
        throw std::invalid_argument("unsupported system kind: " + kind);
    }
    if (doc.contains("label")) seq.label = doc["label"].get<std::string>();
    return seq;
}

OperatorSeq load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open system file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_system(buf.str());
}

}  // namespace instab

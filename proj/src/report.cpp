#include "instab/report.hpp"

#include "instab/logsum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace instab {

namespace {

using nlohmann::json;

// JSON has no +-inf; keep them readable and deterministic.
json num(double x) {
    if (x == pos_inf) return "inf";
    if (x == neg_inf) return "-inf";
    return x;
}

json certificate_json(const Certificate& cert) {
    return json{{"concept", to_string(cert.concept_kind)},
                {"L", num(cert.L)},
                {"a", num(cert.a)},
                {"b", num(cert.b)},
                {"N", num(std::exp(cert.L))},
                {"r", num(std::exp(-cert.a))},
                {"s", num(std::exp(cert.b))},
                {"window", cert.window},
                {"slack", num(cert.slack)}};
}

json classification_json(const Classification& cls) {
    json evidence = json::array();
    for (std::size_t i = 0; i < cls.schedule.size(); ++i)
        evidence.push_back(json{{"M", cls.schedule[i]},
                                {"L_star", num(cls.offsets[i])}});
    return json{{"concept", to_string(cls.concept_kind)},
                {"verdict", to_string(cls.verdict)},
                {"rate", num(cls.rate)},
                {"b", num(cls.b)},
                {"slope", num(cls.slope)},
                {"fallback_rate", cls.fallback_rate},
                {"evidence", evidence},
                {"epsilon", cls.epsilon},
                {"L_budget", cls.L_budget},
                {"gap_delta", cls.gap_delta}};
}

json criterion_fit_json(const CriterionFit& fit) {
    return json{{"variant", to_string(fit.variant)},
                {"logD", num(fit.logD)},
                {"logd", num(fit.logd)},
                {"logc", num(fit.logc)},
                {"D", num(std::exp(fit.logD))},
                {"d", num(std::exp(fit.logd))},
                {"c", num(std::exp(fit.logc))},
                {"window", fit.window},
                {"slack", num(fit.slack)},
                {"x_coverage", fit.x_sampled ? "sampled" : "exact"}};
}

json equivalence_json(const EquivalenceReport& rep) {
    json j{{"system", rep.system_label},
           {"variant", to_string(rep.variant)},
           {"direction", rep.direction},
           {"source_feasible", rep.source_feasible},
           {"margin", num(rep.margin)},
           {"pass", rep.pass},
           {"note", rep.note}};
    if (rep.cert) j["certificate"] = certificate_json(*rep.cert);
    if (rep.fit) j["criterion_fit"] = criterion_fit_json(*rep.fit);
    return j;
}

bool has_section(const AnalysisConfig& config, const std::string& name) {
    return std::find(config.sections.begin(), config.sections.end(), name) !=
           config.sections.end();
}

std::string iso_timestamp() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int verdict_rank(Verdict v) {
    switch (v) {
        case Verdict::Rejected: return 0;
        case Verdict::Inconclusive: return 1;
        case Verdict::Certified: return 2;
    }
    return 0;
}

}  // namespace

void AnalysisConfig::validate() const {
    if (system_file.empty() && system != "paper-example" &&
        system != "constant" && system != "random-diagonal")
        throw std::invalid_argument("system: unknown built-in '" + system + "'");
    if (system == "paper-example" && !(c > 0.0))
        throw std::invalid_argument("c: must be positive");
    if (dim < 1) throw std::invalid_argument("dim: must be positive");
    if (!(range_lo <= range_hi))
        throw std::invalid_argument("range: must be nonempty");
    if (schedule.size() < 3)
        throw std::invalid_argument("schedule: needs at least 3 horizons");
    for (std::size_t i = 0; i < schedule.size(); ++i)
        if (schedule[i] < 1 || (i > 0 && schedule[i] <= schedule[i - 1]))
            throw std::invalid_argument("schedule: must be increasing and positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon: must be > 0");
    if (!(L_budget >= 0.0)) throw std::invalid_argument("l-budget: must be >= 0");
    if (!(gap_delta > 0.0)) throw std::invalid_argument("gap-delta: must be > 0");
    for (double d : d_grid)
        if (!(d > 1.0)) throw std::invalid_argument("d-grid: entries must exceed 1");
    if (!(logD_budget >= 0.0))
        throw std::invalid_argument("logD-budget: must be >= 0");
    if (!(kappa > 1.0)) throw std::invalid_argument("kappa: must exceed 1");
    parse_norm(norm);
    if (format != "json" && format != "csv" && format != "both")
        throw std::invalid_argument("format: one of json, csv, both");
    for (const auto& c2 : concepts) parse_concept(c2);
    for (const auto& v : variants) parse_variant(v);
    parse_concept(sweep_concept);
    if (sweep_param != "c" && sweep_param != "value")
        throw std::invalid_argument("sweep parameter: only 'c' and 'value'");
    if (bisect && !(bisect_width > 0.0))
        throw std::invalid_argument("bisect width: must be > 0");
    if (bisect && !(bisect_lo < bisect_hi))
        throw std::invalid_argument("bisect range: lo must be < hi");
}

json config_to_json(const AnalysisConfig& c) {
    return json{{"system", c.system},
                {"system_file", c.system_file},
                {"c", c.c},
                {"dim", c.dim},
                {"seed", c.seed},
                {"range_lo", c.range_lo},
                {"range_hi", c.range_hi},
                {"sections", c.sections},
                {"concepts", c.concepts},
                {"variants", c.variants},
                {"schedule", c.schedule},
                {"epsilon", c.epsilon},
                {"L_budget", c.L_budget},
                {"gap_delta", c.gap_delta},
                {"d_grid", c.d_grid},
                {"logD_budget", c.logD_budget},
                {"kappa", c.kappa},
                {"norm", c.norm},
                {"format", c.format},
                {"no_timestamp", c.no_timestamp},
                {"output_dir", c.output_dir},
                {"sweep_param", c.sweep_param},
                {"sweep_concept", c.sweep_concept},
                {"sweep_grid", c.sweep_grid},
                {"bisect", c.bisect},
                {"bisect_lo", c.bisect_lo},
                {"bisect_hi", c.bisect_hi},
                {"bisect_width", c.bisect_width}};
}

AnalysisConfig config_from_json(const json& doc) {
    AnalysisConfig c;
    if (!doc.is_object())
        throw std::invalid_argument("config document must be a JSON object");
    c.system = doc.value("system", c.system);
    c.system_file = doc.value("system_file", c.system_file);
    c.c = doc.value("c", c.c);
    c.dim = doc.value("dim", c.dim);
    c.seed = doc.value("seed", c.seed);
    c.range_lo = doc.value("range_lo", c.range_lo);
    c.range_hi = doc.value("range_hi", c.range_hi);
    c.sections = doc.value("sections", c.sections);
    c.concepts = doc.value("concepts", c.concepts);
    c.variants = doc.value("variants", c.variants);
    c.schedule = doc.value("schedule", c.schedule);
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.L_budget = doc.value("L_budget", c.L_budget);
    c.gap_delta = doc.value("gap_delta", c.gap_delta);
    c.d_grid = doc.value("d_grid", c.d_grid);
    c.logD_budget = doc.value("logD_budget", c.logD_budget);
    c.kappa = doc.value("kappa", c.kappa);
    c.norm = doc.value("norm", c.norm);
    c.format = doc.value("format", c.format);
    c.no_timestamp = doc.value("no_timestamp", c.no_timestamp);
    c.output_dir = doc.value("output_dir", c.output_dir);
    c.sweep_param = doc.value("sweep_param", c.sweep_param);
    c.sweep_concept = doc.value("sweep_concept", c.sweep_concept);
    c.sweep_grid = doc.value("sweep_grid", c.sweep_grid);
    c.bisect = doc.value("bisect", c.bisect);
    c.bisect_lo = doc.value("bisect_lo", c.bisect_lo);
    c.bisect_hi = doc.value("bisect_hi", c.bisect_hi);
    c.bisect_width = doc.value("bisect_width", c.bisect_width);
    c.validate();
    return c;
}

OperatorSeq build_system(const AnalysisConfig& config) {
    if (!config.system_file.empty()) return load_system_file(config.system_file);
    if (config.system == "paper-example") return make_paper_example(config.c);
    if (config.system == "constant")
        return make_constant(
            StepOperator::scalar(std::log(std::abs(config.c)), config.c == 0.0), 1);
    if (config.system == "random-diagonal")
        return make_random_diagonal(config.dim, config.seed, config.range_lo,
                                    config.range_hi);
    throw std::invalid_argument("unknown system: " + config.system);
}

AnalysisResult run_analyze(const AnalysisConfig& config) {
    config.validate();
    const Norm norm = parse_norm(config.norm);
    const OperatorSeq system = build_system(config);
    const int M_max = config.schedule.back();
    const int M_fit = config.schedule.front();

    TransitionCache cache(system);
    const GrowthTable table = growth_table(cache, M_max, norm);

    AnalysisResult result;
    json& report = result.report;
    report["config"] = config_to_json(config);
    report["system"] = json{{"label", system.label},
                            {"kind", to_string(system.kind)},
                            {"dim", system.dim}};
    if (!config.no_timestamp) report["timestamp"] = iso_timestamp();
    report["certificates"] = json::array();
    report["classifications"] = json::array();
    report["criterion_fits"] = json::array();
    report["equivalence"] = json::array();
    report["sweep"] = nullptr;

    if (has_section(config, "growth")) {
        double g_min = pos_inf, g_max = neg_inf;
        int singular = 0;
        for (double g : table.g) {
            if (g == neg_inf) { ++singular; continue; }
            g_min = std::min(g_min, g);
            g_max = std::max(g_max, g);
        }
        report["growth_summary"] = json{{"M", table.M},
                                        {"norm", to_string(table.norm)},
                                        {"entries", table.g.size()},
                                        {"g_min", num(g_min)},
                                        {"g_max", num(g_max)},
                                        {"singular_pairs", singular}};
        result.csv_files["growth.csv"] = growth_table_csv(table);
    } else {
        report["growth_summary"] = nullptr;
    }

    if (has_section(config, "certify")) {
        for (const auto& name : config.concepts) {
            const Concept concept_kind = parse_concept(name);
            const auto cert = fit_certificate(subtable(table, M_fit), concept_kind,
                                              config.L_budget, config.gap_delta);
            json entry{{"concept", to_string(concept_kind)},
                       {"feasible", cert.has_value()}};
            if (cert) {
                entry["certificate"] = certificate_json(*cert);
                const auto verify =
                    verify_certificate(system, *cert, 1000, config.seed, norm);
                entry["verify"] = json{{"pass", verify.pass},
                                       {"worst_margin", num(verify.worst_margin)},
                                       {"samples", verify.samples}};
            }
            report["certificates"].push_back(entry);
            report["classifications"].push_back(classification_json(
                classify_table(table, concept_kind, config.schedule, config.epsilon,
                               config.L_budget, config.gap_delta)));
        }
    }

    if (has_section(config, "criterion")) {
        const auto grid = config.d_grid.empty()
                              ? default_d_grid(system, M_fit, norm)
                              : config.d_grid;
        for (const auto& name : config.variants) {
            const Variant variant = parse_variant(name);
            const auto fit =
                fit_criterion(system, M_fit, variant, grid, config.logD_budget,
                              norm, config.seed);
            json entry{{"variant", to_string(variant)},
                       {"feasible", fit.has_value()}};
            if (fit) entry["fit"] = criterion_fit_json(*fit);
            report["criterion_fits"].push_back(entry);
        }
    }

    if (has_section(config, "equivalence")) {
        for (const auto& name : config.variants) {
            const auto reports = check_equivalence(
                system, M_fit, parse_variant(name), config.seed, config.L_budget,
                config.gap_delta, config.kappa, config.logD_budget, norm);
            for (const auto& rep : reports)
                report["equivalence"].push_back(equivalence_json(rep));
        }
    }
    return result;
}

namespace {

Classification classify_at(const AnalysisConfig& config, double value) {
    AnalysisConfig local = config;
    local.c = value;
    const OperatorSeq system = build_system(local);
    return classify(system, parse_concept(config.sweep_concept), config.schedule,
                    config.epsilon, config.L_budget, config.gap_delta,
                    parse_norm(config.norm));
}

}  // namespace

AnalysisResult run_sweep(const AnalysisConfig& config) {
    config.validate();
    if (!config.system_file.empty() ||
        (config.system != "paper-example" && config.system != "constant"))
        throw std::invalid_argument(
            "sweep supports the paper-example c and the constant value");

    AnalysisResult result;
    json& report = result.report;
    report["config"] = config_to_json(config);
    report["system"] = config.system;
    if (!config.no_timestamp) report["timestamp"] = iso_timestamp();

    json sweep;
    sweep["parameter"] = config.sweep_param;
    sweep["concept"] = config.sweep_concept;
    const Concept concept_kind = parse_concept(config.sweep_concept);
    if (concept_kind == Concept::PIS)
        sweep["paper_claimed_threshold"] = 1.0;
    else if (concept_kind == Concept::SPIS)
        sweep["paper_claimed_threshold"] = std::exp(1.0);
    else
        sweep["paper_claimed_threshold"] = nullptr;

    std::ostringstream csv;
    csv << "value,verdict,rate,slope\n";
    bool monotone = true;
    if (!config.sweep_grid.empty()) {
        json points = json::array();
        int prev_rank = -1;
        for (double v : config.sweep_grid) {
            const Classification cls = classify_at(config, v);
            points.push_back(json{{"value", v},
                                  {"classification", classification_json(cls)}});
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            csv << buf << ',' << to_string(cls.verdict) << ',' << cls.rate << ','
                << cls.slope << '\n';
            const int rank = verdict_rank(cls.verdict);
            if (rank < prev_rank) monotone = false;
            prev_rank = rank;
        }
        sweep["grid"] = points;
        sweep["monotone"] = monotone;
    }

    if (config.bisect) {
        if (!monotone) {
            sweep["bisection"] = json{{"refused", true},
                                      {"note", "grid verdicts are not monotone"}};
        } else {
            double lo = config.bisect_lo, hi = config.bisect_hi;
            const bool lo_cert =
                classify_at(config, lo).verdict == Verdict::Certified;
            const bool hi_cert =
                classify_at(config, hi).verdict == Verdict::Certified;
            json bisection;
            bisection["requested_width"] = config.bisect_width;
            if (lo_cert) {
                bisection["interval"] = json::array({lo, lo});
                bisection["note"] = "already certified at the lower endpoint";
            } else if (!hi_cert) {
                bisection["interval"] = json::array({hi, hi});
                bisection["note"] = "no verdict change within the range";
            } else {
                while (hi - lo > config.bisect_width) {
                    const double mid = 0.5 * (lo + hi);
                    if (classify_at(config, mid).verdict == Verdict::Certified)
                        hi = mid;
                    else
                        lo = mid;
                }
                bisection["interval"] = json::array({lo, hi});
                bisection["note"] = "verdict changes inside the interval";
            }
            bisection["width"] =
                bisection["interval"][1].get<double>() -
                bisection["interval"][0].get<double>();
            sweep["bisection"] = bisection;
        }
    }
    report["sweep"] = sweep;
    result.csv_files["sweep.csv"] = csv.str();
    return result;
}

void write_result(const AnalysisConfig& config, const AnalysisResult& result) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + config.output_dir);

    auto write_file = [&](const std::string& name, const std::string& content) {
        const fs::path path = fs::path(config.output_dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << content;
        if (!out) throw IoError("write failed for " + path.string());
    };

    if (config.format == "json" || config.format == "both")
        write_file("report.json", result.report.dump(2) + "\n");
    if (config.format == "csv" || config.format == "both")
        for (const auto& [name, content] : result.csv_files)
            write_file(name, content);
}

}  // namespace instab

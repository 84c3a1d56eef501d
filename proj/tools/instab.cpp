// Command-line front end: pick or load a system, run the analyses, write
// deterministic JSON/CSV reports.

#include "instab/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using instab::AnalysisConfig;
using instab::AnalysisResult;

void add_common_options(CLI::App* app, AnalysisConfig& config,
                        std::string& config_path) {
    app->add_option("--config", config_path, "JSON config file; flags override");
    app->add_option("--system", config.system,
                    "built-in system: paper-example, constant, random-diagonal");
    app->add_option("--system-file", config.system_file,
                    "system description document (JSON)");
    app->add_option("--c", config.c, "paper-example c / constant value");
    app->add_option("--dim", config.dim, "dimension (random-diagonal)");
    app->add_option("--seed", config.seed, "seed for all sampled quantities");
    app->add_option("--range-lo", config.range_lo, "random-diagonal log gain lower bound");
    app->add_option("--range-hi", config.range_hi, "random-diagonal log gain upper bound");
    app->add_option("--concept", config.concepts, "concepts: upis, pis, spis");
    app->add_option("--variant", config.variants, "criterion variants: thm2, prop3, cor4");
    app->add_option("--schedule", config.schedule, "horizon schedule (>= 3 entries)");
    app->add_option("--epsilon", config.epsilon, "classification tolerance");
    app->add_option("--l-budget", config.L_budget, "log N budget for fits");
    app->add_option("--gap-delta", config.gap_delta, "margin encoding s < 1/r");
    app->add_option("--d-grid", config.d_grid, "explicit d grid (default: automatic)");
    app->add_option("--logd-budget", config.logD_budget, "log D budget for criterion fits");
    app->add_option("--kappa", config.kappa, "certificate->criterion d = kappa*s/r");
    app->add_option("--norm", config.norm, "vector norm: one, two, infinity");
    app->add_option("--format", config.format, "output format: json, csv, both");
    app->add_flag("--no-timestamp", config.no_timestamp, "omit the timestamp field");
    app->add_option("--output-dir", config.output_dir, "output directory");
}

AnalysisConfig load_config(const std::string& config_path,
                           const AnalysisConfig& overrides, CLI::App* app) {
    if (config_path.empty()) {
        overrides.validate();
        return overrides;
    }
    std::ifstream in(config_path);
    if (!in) throw instab::IoError("cannot open config file: " + config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    // Flags given on the command line win over the file.
    nlohmann::json merged = doc;
    const nlohmann::json cli_values = instab::config_to_json(overrides);
    for (const auto& [key, value] : cli_values.items()) {
        std::string flag = "--" + key;
        for (auto& ch : flag)
            if (ch == '_') ch = '-';
        if (key == "L_budget") flag = "--l-budget";
        if (key == "logD_budget") flag = "--logd-budget";
        if (key == "concepts") flag = "--concept";
        if (key == "variants") flag = "--variant";
        const CLI::Option* opt = app->get_option_no_throw(flag);
        if (opt != nullptr && opt->count() > 0) merged[key] = value;
    }
    return instab::config_from_json(merged);
}

int run(const AnalysisConfig& config, bool sweep) {
    const AnalysisResult result =
        sweep ? instab::run_sweep(config) : instab::run_analyze(config);
    instab::write_result(config, result);
    std::cout << "report written to " << config.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instability certification toolkit for x_{n+1} = A(n) x_n"};
    app.require_subcommand(1);

    AnalysisConfig config;
    std::string config_path;

    struct Sub {
        CLI::App* app;
        std::vector<std::string> sections;
        bool sweep = false;
    };
    std::vector<Sub> subs;
    subs.push_back({app.add_subcommand("analyze", "full analysis"),
                    {"growth", "certify", "criterion", "equivalence"}});
    subs.push_back({app.add_subcommand("growth", "growth table only"), {"growth"}});
    subs.push_back({app.add_subcommand("certify", "certificates and classifications"),
                    {"certify"}});
    subs.push_back({app.add_subcommand("criterion", "summation criterion fits"),
                    {"criterion"}});
    subs.push_back({app.add_subcommand("equivalence", "both constructive directions"),
                    {"equivalence"}});
    Sub sweep{app.add_subcommand("sweep", "parameter sweep / boundary bisection"),
              {},
              true};
    sweep.app->add_option("--param", config.sweep_param, "swept parameter: c or value");
    sweep.app->add_option("--sweep-concept", config.sweep_concept,
                          "concept classified at each value");
    sweep.app->add_option("--grid", config.sweep_grid, "parameter grid");
    sweep.app->add_flag("--bisect", config.bisect, "bisect the verdict boundary");
    sweep.app->add_option("--lo", config.bisect_lo, "bisection lower endpoint");
    sweep.app->add_option("--hi", config.bisect_hi, "bisection upper endpoint");
    sweep.app->add_option("--width", config.bisect_width, "bisection target width");
    subs.push_back(sweep);

    for (auto& sub : subs) add_common_options(sub.app, config, config_path);

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& sub : subs) {
            if (!sub.app->parsed()) continue;
            AnalysisConfig final_config = load_config(config_path, config, sub.app);
            if (!sub.sweep) final_config.sections = sub.sections;
            return run(final_config, sub.sweep);
        }
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const instab::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#ifndef INSTAB_REPORT_HPP
#define INSTAB_REPORT_HPP

#include "instab/przyluski.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace instab {

// Everything one run needs, validated up front. Serializes to/from JSON so a
// report can embed the exact configuration that produced it.
struct AnalysisConfig {
    // system selection: a built-in kind or a description file
    std::string system = "paper-example";  // paper-example | constant | random-diagonal
    std::string system_file;               // wins over `system` when nonempty
    double c = 2.0;                        // paper-example c / constant scalar value
    int dim = 1;
    std::uint64_t seed = 0;
    double range_lo = 0.0, range_hi = 1.0;

    std::vector<std::string> sections = {"growth", "certify", "criterion",
                                         "equivalence"};
    std::vector<std::string> concepts = {"UPIS", "PIS", "SPIS"};
    std::vector<std::string> variants = {"THM2", "PROP3", "COR4"};
    std::vector<int> schedule = {32, 64, 128, 256};
    double epsilon = 1e-6;
    double L_budget = 0.0;
    double gap_delta = 1e-6;
    std::vector<double> d_grid;  // empty -> default grid
    double logD_budget = 10.0;
    double kappa = 2.0;
    std::string norm = "two";

    std::string format = "both";  // json | csv | both
    bool no_timestamp = false;
    std::string output_dir = "./out";

    // sweep
    std::string sweep_param = "c";
    std::string sweep_concept = "PIS";
    std::vector<double> sweep_grid;
    bool bisect = false;
    double bisect_lo = 1.5, bisect_hi = 4.0, bisect_width = 0.05;

    void validate() const;  // throws std::invalid_argument
};

nlohmann::json config_to_json(const AnalysisConfig& config);
AnalysisConfig config_from_json(const nlohmann::json& doc);

OperatorSeq build_system(const AnalysisConfig& config);

struct AnalysisResult {
    nlohmann::json report;
    std::map<std::string, std::string> csv_files;  // filename -> content
};

// Composes the growth / certify / criterion / equivalence sections requested
// by the config. Deterministic given the config (timestamp aside).
AnalysisResult run_analyze(const AnalysisConfig& config);

// Classifies across a parameter grid and/or bisects the verdict boundary.
AnalysisResult run_sweep(const AnalysisConfig& config);

// Writes report.json and the CSV sidecars into config.output_dir.
void write_result(const AnalysisConfig& config, const AnalysisResult& result);

}  // namespace instab

#endif

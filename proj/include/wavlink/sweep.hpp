#pragma once

#include "wavlink/trainer.hpp"

#include <string>
#include <vector>

namespace wavlink {

struct SweepEntry {
    std::string config_id;
    RunConfig cfg;
};

// The 2x2x3x2 design grid (text encoder x loss x regime x scope) over a
// shared base config.
std::vector<SweepEntry> full_grid(const RunConfig& base);

std::string sweep_config_id(const RunConfig& cfg);

struct SweepRow {
    std::string config_id;
    std::string text_style;
    std::string loss;
    std::string regime;
    std::string scope;
    double short_t2a_r1{0.0};
    double short_a2t_r1{0.0};
    double long_t2a_r1{0.0};
    double long_a2t_r1{0.0};
    double mean_r1{0.0};
    double wall_time_s{0.0};
    bool failed{false};
    std::string error;
    bool from_cache{false};
};

struct SweepReport {
    std::vector<SweepRow> rows; // sorted by mean R@1 descending
};

// Trains and evaluates every grid entry with an identical seed and budget.
// Completed configs are skipped through a per-config result cache in
// cache_dir keyed by config hash; per-config failures are recorded and the
// sweep continues.
SweepReport run_sweep(const std::vector<SweepEntry>& grid, const Dataset& data,
                      const std::string& cache_dir, const LogFn& log = nullptr);

std::string sweep_report_csv(const SweepReport& report);
std::string sweep_report_markdown(const SweepReport& report);
// csv without the timing column, for determinism comparisons
std::string sweep_report_values_csv(const SweepReport& report);

struct EvalRow {
    std::string benchmark;
    std::string direction; // t2a | a2t | -
    int k{1};
    int dim_level{1};
    double value{0.0};
    double delta_vs_full{0.0};
};

// Retrieval at every ladder level on both pools plus zero-shot and MCQ
// accuracy on the probe set.
std::vector<EvalRow> evaluate_model(const Model& m, const Dataset& data,
                                    const std::vector<int>& ladder,
                                    const std::vector<int>& ks,
                                    int zsc_classes = 8,
                                    const std::string& prompt_template = "the sound of {label}");

std::string eval_report_csv(const std::vector<EvalRow>& rows);
std::string eval_report_markdown(const std::vector<EvalRow>& rows,
                                 const std::vector<int>& ladder);
std::vector<EvalRow> parse_eval_csv(const std::string& text);

} // namespace wavlink

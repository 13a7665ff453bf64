#pragma once

// Repeated-seed grid experiments over (R, lambda) and the rank statistics
// computed from their summaries. Backs the `istsk run` and `istsk stats`
// commands.

#include "istsk/dataset.hpp"
#include "istsk/engine.hpp"
#include "istsk/metrics.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace istsk {

/// Invalid experiment description or unusable input/output paths (exit code 1).
class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Algorithm { is_tsk_fc_0, is_tsk_fc_1, fcm };

Algorithm parse_algorithm(const std::string& s);
std::string to_string(Algorithm a);

inline constexpr long kMaxExpandedDims = 2000;

struct ExperimentSpec {
    std::vector<std::string> data;
    LabelColumn label_column;
    std::vector<Algorithm> algorithms{Algorithm::is_tsk_fc_1};
    std::optional<int> clusters;  // defaults to the number of classes
    std::vector<int> rules{2};
    std::vector<double> lambdas{1.0};
    double h = 1.0;
    int repeats = 10;
    std::uint64_t seed = 0;
    int max_updates = 50;
    int max_style_iters = 30;
    double theta = 1e-3;
    Standardization standardization = Standardization::zscore;
    std::string out_dir;
    int jobs = 1;
    bool force = false;
    bool write_traces = true;

    void validate() const;
};

struct RunRecord {
    std::string dataset;
    Algorithm algorithm = Algorithm::is_tsk_fc_1;
    int rules = 0;        // 0 for the FCM baseline
    double lambda = 0.0;  // 0 for the FCM baseline
    int repeat = 0;
    std::uint64_t seed = 0;
    RunConfig config;
    bool ok = false;
    std::string error;
    std::optional<EvalResult> eval;
    int rounds = 0;
    std::string terminated_by;
    int style_divergences = 0;
    double wall_time = 0.0;
    std::vector<double> objective_trace;
    std::vector<int> labels;
    Eigen::MatrixXd decision_values;
};

struct CellSummary {
    std::string dataset;
    Algorithm algorithm = Algorithm::is_tsk_fc_1;
    int rules = 0;
    double lambda = 0.0;
    int runs = 0;
    int errors = 0;
    bool has_metrics = false;
    double acc_mean = 0.0, acc_std = 0.0;
    double nmi_mean = 0.0, nmi_std = 0.0;
};

/// "2..15" or "2,3,5".
std::vector<int> parse_int_list(const std::string& s);
/// Comma-separated reals, or "1e-5..1e5" for every power of ten in range.
std::vector<double> parse_real_list(const std::string& s);

/// Every (algorithm, R, lambda) cell for one dataset in execution order; the
/// FCM baseline contributes a single cell with R = 0, lambda = 0.
struct GridCell {
    Algorithm algorithm;
    int rules;
    double lambda;
};
std::vector<GridCell> enumerate_grid(const ExperimentSpec& spec);

/// Runs every cell and repeat for one dataset. Engine failures are recorded
/// per run rather than thrown. Repeat i uses seed spec.seed + i.
std::vector<RunRecord> execute(const ExperimentSpec& spec, const Dataset& ds);

/// Mean and sample standard deviation per cell, in grid order.
std::vector<CellSummary> summarize(const std::vector<RunRecord>& records);

/// Highest mean of the chosen metric per (dataset, algorithm).
std::vector<CellSummary> best_cells(const std::vector<CellSummary>& cells, bool by_nmi = false);

std::string format_percent_cell(double mean, double std);
std::string summary_csv(const std::vector<CellSummary>& cells);
std::string run_json(const RunRecord& record, const std::string& standardization);

struct ExperimentOutcome {
    std::vector<RunRecord> records;
    std::vector<CellSummary> cells;
    int failed_runs = 0;
};

/// Loads every dataset, runs the grid, and writes summary.csv, table_acc.csv,
/// table_nmi.csv, runs/*.json and traces/*.csv under spec.out_dir.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

/// Datasets x algorithms score table read from summary.csv files (best cell
/// per pair) or a wide table whose cells are numbers or "mean±std".
struct ScoreTable {
    std::vector<std::string> datasets;
    std::vector<std::string> algorithms;
    Eigen::MatrixXd scores;
};

ScoreTable read_score_table(const std::vector<std::string>& paths, const std::string& metric);

struct StatsOutcome {
    ScoreTable table;
    Eigen::MatrixXd ranks;
    FriedmanResult friedman;
};

StatsOutcome compute_stats(const ScoreTable& table, double q_alpha,
                           const FriedmanOptions& options = {});
std::string stats_json(const StatsOutcome& stats, const std::string& metric, double q_alpha);

}  // namespace istsk

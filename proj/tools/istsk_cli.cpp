// istsk: command-line front end for style TSK fuzzy clustering experiments.
//
//   istsk run   --data wine.csv --label-col class --algo is-tsk-fc-1 --rules 2..15 \
//               --lambda 1e-5..1e5 --repeats 10 --out results/
//   istsk stats --summary results/summary.csv --metric acc

#include "istsk/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

istsk::LabelColumn parse_label_column(const std::string& s) {
    if (s.empty()) return {};
    if (s.find_first_not_of("0123456789") == std::string::npos)
        return static_cast<std::size_t>(std::stoul(s));
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Style TSK fuzzy clustering: runs, grid search, baselines and rank statistics"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "cluster datasets over an (R, lambda) grid");
    run_cmd->set_help_flag("--help", "Print this help message and exit");
    std::vector<std::string> data;
    std::string label_col;
    std::vector<std::string> algos{"is-tsk-fc-1"};
    int clusters = 0;
    std::string rules = "2";
    std::string lambdas = "1";
    istsk::ExperimentSpec spec;
    std::string standardize = "zscore";
    std::string traces = "all";
    run_cmd->add_option("--data", data, "dataset CSV path (repeatable)")->required();
    run_cmd->add_option("--label-col", label_col, "label column name or 0-based index");
    run_cmd->add_option("--algo", algos, "is-tsk-fc-0, is-tsk-fc-1 or fcm (repeatable)");
    run_cmd->add_option("--clusters", clusters, "K (defaults to the number of classes)");
    run_cmd->add_option("--rules", rules, "rule counts, e.g. 2..15 or 2,4,8");
    run_cmd->add_option("--lambda", lambdas, "lambda values, e.g. 1e-5..1e5 (decades) or 0.1,1");
    run_cmd->add_option("--h", spec.h, "antecedent width scale");
    run_cmd->add_option("--repeats", spec.repeats, "runs per grid cell");
    run_cmd->add_option("--seed", spec.seed, "base seed; repeat i uses seed + i");
    run_cmd->add_option("--max-updates", spec.max_updates, "H, max alternating updates");
    run_cmd->add_option("--max-style-iters", spec.max_style_iters, "T, max style iterations");
    run_cmd->add_option("--theta", spec.theta, "style convergence threshold");
    run_cmd->add_option("--standardize", standardize, "zscore, minmax or none");
    run_cmd->add_option("--out", spec.out_dir, "output directory")->required();
    run_cmd->add_option("--jobs", spec.jobs, "worker threads");
    run_cmd->add_option("--traces", traces, "all or none");
    run_cmd->add_flag("--force", spec.force, "allow expanded dimension above 2000");

    auto* stats_cmd = app.add_subcommand("stats", "Friedman test and Bonferroni-Dunn CD");
    std::vector<std::string> summaries;
    std::string metric = "acc";
    double q_alpha = 2.724;
    int rank_decimals = -1;
    std::string stats_out;
    stats_cmd->add_option("--summary", summaries, "summary.csv or wide score table (repeatable)")
        ->required();
    stats_cmd->add_option("--metric", metric, "acc or nmi");
    stats_cmd->add_option("--q-alpha", q_alpha, "Bonferroni-Dunn critical value");
    stats_cmd->add_option("--rank-decimals", rank_decimals,
                          "round average ranks to this many decimals before the test");
    stats_cmd->add_option("--out", stats_out, "JSON output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            spec.data = data;
            spec.label_column = parse_label_column(label_col);
            spec.algorithms.clear();
            for (const auto& a : algos) spec.algorithms.push_back(istsk::parse_algorithm(a));
            if (clusters > 0) spec.clusters = clusters;
            spec.rules = istsk::parse_int_list(rules);
            spec.lambdas = istsk::parse_real_list(lambdas);
            try {
                spec.standardization = istsk::parse_standardization(standardize);
            } catch (const std::invalid_argument& e) {
                throw istsk::SpecError(e.what());
            }
            if (traces != "all" && traces != "none") throw istsk::SpecError("--traces must be all or none");
            spec.write_traces = traces == "all";

            const auto outcome = istsk::run_experiment(spec);
            std::cout << istsk::summary_csv(outcome.cells);
            if (outcome.failed_runs > 0) {
                std::cerr << outcome.failed_runs << " of " << outcome.records.size()
                          << " runs failed; see runs/*.json\n";
                return 2;
            }
            return 0;
        }

        istsk::FriedmanOptions options;
        if (rank_decimals >= 0) options.rank_decimals = rank_decimals;
        const auto table = istsk::read_score_table(summaries, metric);
        const auto stats = istsk::compute_stats(table, q_alpha, options);
        const std::string json = istsk::stats_json(stats, metric, q_alpha);
        if (stats_out.empty()) {
            std::cout << json;
        } else {
            std::ofstream out(stats_out);
            if (!out) throw istsk::SpecError("cannot write " + stats_out);
            out << json;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

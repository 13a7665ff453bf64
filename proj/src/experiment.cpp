#include "istsk/experiment.hpp"

#include "istsk/fcm.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace istsk {

namespace fs = std::filesystem;

Algorithm parse_algorithm(const std::string& s) {
    if (s == "is-tsk-fc-0") return Algorithm::is_tsk_fc_0;
    if (s == "is-tsk-fc-1") return Algorithm::is_tsk_fc_1;
    if (s == "fcm") return Algorithm::fcm;
    throw SpecError("unknown algorithm: " + s);
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::is_tsk_fc_0: return "is-tsk-fc-0";
        case Algorithm::is_tsk_fc_1: return "is-tsk-fc-1";
        case Algorithm::fcm: return "fcm";
    }
    return "fcm";
}

void ExperimentSpec::validate() const {
    if (data.empty()) throw SpecError("no dataset given");
    if (algorithms.empty()) throw SpecError("no algorithm given");
    if (repeats < 1) throw SpecError("repeats must be >= 1");
    if (rules.empty() || lambdas.empty()) throw SpecError("parameter grids must be non-empty");
    for (int r : rules)
        if (r < 1) throw SpecError("rule counts must be >= 1");
    for (double l : lambdas)
        if (!(l > 0.0)) throw SpecError("lambda values must be positive");
    if (clusters && *clusters < 2) throw SpecError("clusters must be >= 2");
    if (!(h > 0.0)) throw SpecError("h must be positive");
    if (max_updates < 1 || max_style_iters < 1) throw SpecError("iteration limits must be >= 1");
    if (!(theta > 0.0)) throw SpecError("theta must be positive");
    if (jobs < 1) throw SpecError("jobs must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw SpecError("not a number: '" + s + "'");
    return v;
}

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string run_id(const RunRecord& r) {
    std::string id = r.dataset + "_" + to_string(r.algorithm);
    if (r.algorithm != Algorithm::fcm) id += "_R" + std::to_string(r.rules) + "_L" + compact(r.lambda);
    return id + "_rep" + std::to_string(r.repeat);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write " + path.string());
    out << content;
    if (!out) throw SpecError("write failed: " + path.string());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunRecord execute_one(const ExperimentSpec& spec, const Dataset& ds, const GridCell& cell,
                      int repeat, int clusters) {
    RunRecord rec;
    rec.dataset = ds.name;
    rec.algorithm = cell.algorithm;
    rec.rules = cell.rules;
    rec.lambda = cell.lambda;
    rec.repeat = repeat;
    rec.seed = spec.seed + static_cast<std::uint64_t>(repeat);

    RunConfig& cfg = rec.config;
    cfg.order = cell.algorithm == Algorithm::is_tsk_fc_0 ? Order::zero : Order::first;
    cfg.rules = std::max(cell.rules, 1);
    cfg.clusters = clusters;
    cfg.lambda = cell.algorithm == Algorithm::fcm ? 1.0 : cell.lambda;
    cfg.h = spec.h;
    cfg.max_updates = spec.max_updates;
    cfg.max_style_iters = spec.max_style_iters;
    cfg.theta = spec.theta;
    cfg.seed = rec.seed;
    cfg.standardization = spec.standardization;

    try {
        if (cell.algorithm == Algorithm::fcm) {
            const auto start = std::chrono::steady_clock::now();
            const Eigen::MatrixXd x = standardize(ds.features, spec.standardization);
            FcmOptions opt;
            opt.clusters = clusters;
            opt.seed = rec.seed;
            opt.fuzzifier = cfg.fcm_fuzzifier;
            opt.max_iter = cfg.fcm_max_iter;
            opt.tol = cfg.fcm_tol;
            const FcmResult res = fcm_fit(x, opt);
            rec.labels = hard_labels(res);
            rec.objective_trace = res.objective_trace;
            rec.rounds = res.iterations;
            rec.terminated_by = res.iterations < opt.max_iter ? "converged" : "max_iter";
            rec.decision_values = res.memberships;
            rec.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        } else {
            const RunReport report = run(ds.features, cfg);
            rec.labels = report.final_labels;
            rec.objective_trace = report.objective_trace;
            rec.rounds = report.rounds;
            rec.terminated_by = to_string(report.terminated_by);
            for (int d : report.style_divergences) rec.style_divergences += d;
            rec.decision_values = report.decision_values;
            rec.wall_time = report.wall_time;
        }
        if (ds.labels) rec.eval = evaluate(*ds.labels, rec.labels);
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& part : split(s, ',')) {
        if (part.empty()) throw SpecError("empty item in list '" + s + "'");
        const auto dots = part.find("..");
        if (dots != std::string::npos) {
            const int lo = static_cast<int>(to_double(part.substr(0, dots)));
            const int hi = static_cast<int>(to_double(part.substr(dots + 2)));
            if (hi < lo) throw SpecError("empty range '" + part + "'");
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            const double v = to_double(part);
            if (v != std::floor(v)) throw SpecError("not an integer: '" + part + "'");
            out.push_back(static_cast<int>(v));
        }
    }
    if (out.empty()) throw SpecError("empty list");
    return out;
}

std::vector<double> parse_real_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) {
        if (part.empty()) throw SpecError("empty item in list '" + s + "'");
        const auto dots = part.find("..");
        if (dots != std::string::npos) {
            const double lo = to_double(part.substr(0, dots));
            const double hi = to_double(part.substr(dots + 2));
            if (!(lo > 0.0) || hi < lo) throw SpecError("bad decade range '" + part + "'");
            const int e_lo = static_cast<int>(std::lround(std::log10(lo)));
            const int e_hi = static_cast<int>(std::lround(std::log10(hi)));
            for (int e = e_lo; e <= e_hi; ++e) out.push_back(std::pow(10.0, e));
        } else {
            out.push_back(to_double(part));
        }
    }
    if (out.empty()) throw SpecError("empty list");
    return out;
}

std::vector<GridCell> enumerate_grid(const ExperimentSpec& spec) {
    std::vector<GridCell> cells;
    for (Algorithm a : spec.algorithms) {
        if (a == Algorithm::fcm) {
            cells.push_back({a, 0, 0.0});
            continue;
        }
        for (int r : spec.rules)
            for (double l : spec.lambdas) cells.push_back({a, r, l});
    }
    return cells;
}

std::vector<RunRecord> execute(const ExperimentSpec& spec, const Dataset& ds) {
    spec.validate();
    int clusters = 0;
    if (spec.clusters)
        clusters = *spec.clusters;
    else if (ds.labels)
        clusters = ds.class_count();
    else
        throw SpecError(ds.name + ": --clusters is required for unlabeled data");
    if (clusters < 2) throw SpecError(ds.name + ": need at least 2 clusters");

    const auto cells = enumerate_grid(spec);
    if (!spec.force) {
        for (const auto& c : cells) {
            if (c.algorithm == Algorithm::fcm) continue;
            const long dims = c.algorithm == Algorithm::is_tsk_fc_1
                                  ? static_cast<long>(c.rules) * (1 + static_cast<long>(ds.dims()))
                                  : static_cast<long>(c.rules);
            if (dims > kMaxExpandedDims)
                throw SpecError(ds.name + ": R=" + std::to_string(c.rules) + " gives D=" +
                                std::to_string(dims) + " > " + std::to_string(kMaxExpandedDims) +
                                " (use --force)");
        }
    }

    const std::size_t total = cells.size() * static_cast<std::size_t>(spec.repeats);
    std::vector<RunRecord> records(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const auto& cell = cells[i / static_cast<std::size_t>(spec.repeats)];
            const int repeat = static_cast<int>(i % static_cast<std::size_t>(spec.repeats));
            records[i] = execute_one(spec, ds, cell, repeat, clusters);
        }
    };
    const int threads = std::min<int>(spec.jobs, static_cast<int>(total));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return records;
}

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records) {
    std::vector<CellSummary> cells;
    std::size_t i = 0;
    while (i < records.size()) {
        const auto& head = records[i];
        std::size_t end = i;
        std::vector<double> accs, nmis;
        CellSummary cell;
        cell.dataset = head.dataset;
        cell.algorithm = head.algorithm;
        cell.rules = head.rules;
        cell.lambda = head.lambda;
        while (end < records.size() && records[end].dataset == head.dataset &&
               records[end].algorithm == head.algorithm && records[end].rules == head.rules &&
               records[end].lambda == head.lambda) {
            const auto& r = records[end];
            ++cell.runs;
            if (!r.ok) ++cell.errors;
            if (r.ok && r.eval) {
                accs.push_back(r.eval->acc);
                nmis.push_back(r.eval->nmi);
            }
            ++end;
        }
        cell.has_metrics = !accs.empty();
        std::tie(cell.acc_mean, cell.acc_std) = mean_std(accs);
        std::tie(cell.nmi_mean, cell.nmi_std) = mean_std(nmis);
        cells.push_back(cell);
        i = end;
    }
    return cells;
}

std::vector<CellSummary> best_cells(const std::vector<CellSummary>& cells, bool by_nmi) {
    std::vector<CellSummary> best;
    for (const auto& c : cells) {
        if (!c.has_metrics) continue;
        auto it = std::find_if(best.begin(), best.end(), [&](const CellSummary& b) {
            return b.dataset == c.dataset && b.algorithm == c.algorithm;
        });
        const double score = by_nmi ? c.nmi_mean : c.acc_mean;
        if (it == best.end())
            best.push_back(c);
        else if (score > (by_nmi ? it->nmi_mean : it->acc_mean))
            *it = c;
    }
    return best;
}

std::string format_percent_cell(double mean, double std) {
    return fixed(100.0 * mean, 2) + "\xC2\xB1" + fixed(100.0 * std, 2);
}

std::string summary_csv(const std::vector<CellSummary>& cells) {
    std::ostringstream os;
    os << "dataset,algorithm,rules,lambda,runs,errors,acc_mean,acc_std,nmi_mean,nmi_std,acc,nmi\n";
    for (const auto& c : cells) {
        os << c.dataset << ',' << to_string(c.algorithm) << ',';
        if (c.algorithm == Algorithm::fcm)
            os << ",,";
        else
            os << c.rules << ',' << compact(c.lambda) << ',';
        os << c.runs << ',' << c.errors << ',';
        if (c.has_metrics)
            os << fixed(c.acc_mean) << ',' << fixed(c.acc_std) << ',' << fixed(c.nmi_mean) << ','
               << fixed(c.nmi_std) << ',' << format_percent_cell(c.acc_mean, c.acc_std) << ','
               << format_percent_cell(c.nmi_mean, c.nmi_std);
        else
            os << ",,,,,";
        os << '\n';
    }
    return os.str();
}

namespace {

std::string wide_table(const std::vector<CellSummary>& best, bool nmi_metric) {
    std::vector<std::string> datasets;
    std::vector<Algorithm> algos;
    for (const auto& c : best) {
        if (std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end())
            datasets.push_back(c.dataset);
        if (std::find(algos.begin(), algos.end(), c.algorithm) == algos.end()) algos.push_back(c.algorithm);
    }
    std::ostringstream os;
    os << "dataset";
    for (auto a : algos) os << ',' << to_string(a);
    os << '\n';
    for (const auto& d : datasets) {
        os << d;
        for (auto a : algos) {
            os << ',';
            for (const auto& c : best)
                if (c.dataset == d && c.algorithm == a)
                    os << (nmi_metric ? format_percent_cell(c.nmi_mean, c.nmi_std)
                                      : format_percent_cell(c.acc_mean, c.acc_std));
        }
        os << '\n';
    }
    return os.str();
}

nlohmann::json config_json(const RunConfig& cfg) {
    return {{"order", static_cast<int>(cfg.order)},
            {"rules", cfg.rules},
            {"clusters", cfg.clusters},
            {"lambda", cfg.lambda},
            {"h", cfg.h},
            {"max_updates", cfg.max_updates},
            {"max_style_iters", cfg.max_style_iters},
            {"theta", cfg.theta},
            {"seed", cfg.seed},
            {"standardization", to_string(cfg.standardization)},
            {"style_updates", cfg.style_updates},
            {"fcm_fuzzifier", cfg.fcm_fuzzifier},
            {"fcm_max_iter", cfg.fcm_max_iter},
            {"fcm_tol", cfg.fcm_tol}};
}

}  // namespace

std::string run_json(const RunRecord& r, const std::string& standardization) {
    nlohmann::json j;
    j["dataset"] = r.dataset;
    j["algorithm"] = to_string(r.algorithm);
    j["repeat"] = r.repeat;
    j["seed"] = r.seed;
    j["standardization"] = standardization;
    j["config"] = config_json(r.config);
    j["ok"] = r.ok;
    if (!r.ok) j["error"] = r.error;
    j["rounds"] = r.rounds;
    j["terminated_by"] = r.terminated_by;
    j["style_divergences"] = r.style_divergences;
    j["wall_time"] = r.wall_time;
    j["objective_trace"] = r.objective_trace;
    j["labels"] = r.labels;
    if (r.eval) j["metrics"] = {{"acc", r.eval->acc}, {"nmi", r.eval->nmi}, {"matching", r.eval->matching}};
    return j.dump(2) + "\n";
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<Dataset> datasets;
    for (const auto& path : spec.data) {
        try {
            datasets.push_back(load_csv(path, spec.label_column));
        } catch (const DatasetError& e) {
            throw SpecError(e.what());
        }
    }

    const fs::path out = spec.out_dir.empty() ? fs::path(".") : fs::path(spec.out_dir);
    std::error_code ec;
    fs::create_directories(out / "runs", ec);
    if (!ec && spec.write_traces) fs::create_directories(out / "traces", ec);
    if (ec) throw SpecError("cannot create output directory " + out.string() + ": " + ec.message());

    ExperimentOutcome outcome;
    for (const auto& ds : datasets) {
        auto records = execute(spec, ds);
        for (auto& r : records) outcome.records.push_back(std::move(r));
    }
    outcome.cells = summarize(outcome.records);

    for (const auto& r : outcome.records) {
        if (!r.ok) ++outcome.failed_runs;
        const std::string id = run_id(r);
        write_file(out / "runs" / (id + ".json"), run_json(r, to_string(spec.standardization)));
        if (!spec.write_traces) continue;
        std::ostringstream obj;
        obj << "round,objective\n";
        for (std::size_t t = 0; t < r.objective_trace.size(); ++t)
            obj << t + 1 << ',' << compact(r.objective_trace[t]) << '\n';
        write_file(out / "traces" / (id + "_objective.csv"), obj.str());
        if (r.decision_values.size() > 0) {
            std::ostringstream dv;
            dv << "sample,label";
            for (Eigen::Index k = 0; k < r.decision_values.cols(); ++k) dv << ",c" << k;
            dv << '\n';
            for (Eigen::Index i = 0; i < r.decision_values.rows(); ++i) {
                dv << i << ',' << r.labels[static_cast<std::size_t>(i)];
                for (Eigen::Index k = 0; k < r.decision_values.cols(); ++k)
                    dv << ',' << compact(r.decision_values(i, k));
                dv << '\n';
            }
            write_file(out / "traces" / (id + "_decision.csv"), dv.str());
        }
    }
    if (spec.write_traces) {
        for (const auto& ds : datasets)
            for (Algorithm a : spec.algorithms) {
                if (a == Algorithm::fcm || !ds.labels) continue;
                std::ostringstream surf;
                surf << "rules,lambda,acc_mean,nmi_mean\n";
                for (const auto& c : outcome.cells)
                    if (c.dataset == ds.name && c.algorithm == a && c.has_metrics)
                        surf << c.rules << ',' << compact(c.lambda) << ',' << fixed(c.acc_mean) << ','
                             << fixed(c.nmi_mean) << '\n';
                write_file(out / "traces" / ("surface_" + ds.name + "_" + to_string(a) + ".csv"),
                           surf.str());
            }
    }
    write_file(out / "summary.csv", summary_csv(outcome.cells));
    write_file(out / "table_acc.csv", wide_table(best_cells(outcome.cells, false), false));
    write_file(out / "table_nmi.csv", wide_table(best_cells(outcome.cells, true), true));
    return outcome;
}

ScoreTable read_score_table(const std::vector<std::string>& paths, const std::string& metric) {
    if (metric != "acc" && metric != "nmi") throw SpecError("metric must be acc or nmi");
    std::map<std::pair<std::string, std::string>, double> cells;
    ScoreTable table;
    auto note = [&](const std::string& d, const std::string& a, double v, bool keep_max) {
        if (std::find(table.datasets.begin(), table.datasets.end(), d) == table.datasets.end())
            table.datasets.push_back(d);
        if (std::find(table.algorithms.begin(), table.algorithms.end(), a) == table.algorithms.end())
            table.algorithms.push_back(a);
        auto [it, inserted] = cells.emplace(std::make_pair(d, a), v);
        if (!inserted && keep_max) it->second = std::max(it->second, v);
    };

    for (const auto& path : paths) {
        std::istringstream in(read_file(path));
        std::string line;
        if (!std::getline(in, line)) throw SpecError(path + ": empty file");
        const char sep = line.find('\t') != std::string::npos && line.find(',') == std::string::npos
                             ? '\t'
                             : ',';
        const auto header = split(trim(line), sep);
        const auto col = std::find(header.begin(), header.end(), metric + "_mean");
        if (col != header.end()) {
            const auto mcol = static_cast<std::size_t>(col - header.begin());
            while (std::getline(in, line)) {
                if (trim(line).empty()) continue;
                const auto row = split(trim(line), sep);
                if (row.size() <= mcol || row[mcol].empty()) continue;
                note(row[0], row[1], to_double(row[mcol]), true);
            }
        } else {
            while (std::getline(in, line)) {
                if (trim(line).empty()) continue;
                const auto row = split(trim(line), sep);
                for (std::size_t c = 1; c < row.size() && c < header.size(); ++c) {
                    std::string cell = row[c];
                    const auto pm = cell.find("\xC2\xB1");
                    if (pm != std::string::npos) cell = cell.substr(0, pm);
                    if (cell.empty()) continue;
                    if (cell == "--") cell = "0";
                    note(row[0], header[c], to_double(cell), false);
                }
            }
        }
    }
    table.scores.resize(static_cast<Eigen::Index>(table.datasets.size()),
                        static_cast<Eigen::Index>(table.algorithms.size()));
    for (std::size_t i = 0; i < table.datasets.size(); ++i)
        for (std::size_t j = 0; j < table.algorithms.size(); ++j) {
            auto it = cells.find({table.datasets[i], table.algorithms[j]});
            if (it == cells.end())
                throw SpecError("missing score for dataset '" + table.datasets[i] + "', algorithm '" +
                                table.algorithms[j] + "'");
            table.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
        }
    return table;
}

StatsOutcome compute_stats(const ScoreTable& table, double q_alpha, const FriedmanOptions& options) {
    if (table.algorithms.size() < 2) throw SpecError("stats: need at least 2 algorithms");
    if (table.datasets.size() < 2) throw SpecError("stats: need at least 2 datasets");
    StatsOutcome out;
    out.table = table;
    out.ranks = rank_rows(table.scores, true);
    out.friedman = friedman(out.ranks, q_alpha, options);
    return out;
}

std::string stats_json(const StatsOutcome& s, const std::string& metric, double q_alpha) {
    nlohmann::json j;
    j["metric"] = metric;
    j["algorithms"] = s.table.algorithms;
    j["datasets"] = s.table.datasets;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.ranks.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index k = 0; k < s.ranks.cols(); ++k) row.push_back(s.ranks(i, k));
        rows.push_back(row);
    }
    j["ranks"] = rows;
    j["avg_ranks"] = std::vector<double>(s.friedman.avg_ranks.data(),
                                         s.friedman.avg_ranks.data() + s.friedman.avg_ranks.size());
    j["chi_sq"] = s.friedman.chi_sq;
    j["f_f"] = s.friedman.f_f;
    j["q_alpha"] = q_alpha;
    j["cd"] = s.friedman.cd;
    j["n_algorithms"] = s.friedman.algorithms;
    j["n_datasets"] = s.friedman.datasets;
    return j.dump(2) + "\n";
}

}  // namespace istsk

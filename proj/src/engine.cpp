#include "istsk/engine.hpp"

#include "istsk/fcm.hpp"

#include <chrono>
#include <cmath>
#include <set>

namespace istsk {

void RunConfig::validate() const {
    if (rules < 1) throw std::invalid_argument("rules must be >= 1");
    if (clusters < 2) throw std::invalid_argument("clusters must be >= 2");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
    if (max_updates < 1) throw std::invalid_argument("max updates must be >= 1");
    if (max_style_iters < 1) throw std::invalid_argument("max style iterations must be >= 1");
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
}

std::string to_string(Termination t) {
    return t == Termination::repeat ? "repeat" : "max_rounds";
}

std::vector<int> assign_labels(const Eigen::MatrixXd& decision_values) {
    std::vector<int> labels(static_cast<std::size_t>(decision_values.rows()));
    for (Eigen::Index i = 0; i < decision_values.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < decision_values.cols(); ++k)
            if (std::abs(decision_values(i, k)) < std::abs(decision_values(i, best))) best = k;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

Assignment assign(const AntecedentMatrixD& am, const ClusterModelD& cm) {
    Assignment out;
    out.decision_values = decision_values(cm, am.xg);
    out.labels = assign_labels(out.decision_values);
    return out;
}

std::uint64_t hash_labels(const std::vector<int>& labels) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : labels) {
        auto u = static_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) {
            h ^= (u >> (8 * b)) & 0xFFu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

int repair_empty_clusters(std::vector<int>& labels, int clusters, const Eigen::MatrixXd& fit) {
    int repairs = 0;
    std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (int k = 0; k < clusters; ++k) {
        if (counts[static_cast<std::size_t>(k)] > 0) continue;
        Eigen::Index worst = -1;
        double worst_fit = -1.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int own = labels[i];
            if (counts[static_cast<std::size_t>(own)] < 2) continue;
            const double f = fit(static_cast<Eigen::Index>(i), own);
            if (f > worst_fit) {
                worst_fit = f;
                worst = static_cast<Eigen::Index>(i);
            }
        }
        if (worst < 0) throw EngineError("cannot repair empty cluster: too few samples");
        --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(worst)])];
        labels[static_cast<std::size_t>(worst)] = k;
        ++counts[static_cast<std::size_t>(k)];
        ++repairs;
    }
    return repairs;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    return out;
}

}  // namespace

RunReport run(const Eigen::MatrixXd& raw, const RunConfig& cfg) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    const Eigen::MatrixXd x = standardize(raw, cfg.standardization);
    const Eigen::Index n = x.rows();
    if (n < cfg.clusters) throw EngineError("fewer samples than clusters");
    if (n < cfg.rules) throw EngineError("fewer samples than rules");
    const int k_count = cfg.clusters;

    RunReport report;

    // Initial labels from FCM with K clusters.
    FcmOptions label_fcm{k_count, cfg.fcm_fuzzifier, cfg.fcm_max_iter, cfg.fcm_tol, cfg.seed, {}};
    const FcmResult init = fcm_fit(x, label_fcm);
    std::vector<int> labels = hard_labels(init);
    repair_empty_clusters(labels, k_count, (1.0 - init.memberships.array()).matrix());

    // Antecedents from FCM with R clusters, built once.
    FcmOptions rule_fcm{cfg.rules, cfg.fcm_fuzzifier, cfg.fcm_max_iter, cfg.fcm_tol, cfg.seed, {}};
    const FcmResult rule_clusters = fcm_fit(x, rule_fcm);
    report.antecedents = estimate_antecedents(x, rule_clusters, cfg.rules, cfg.h, cfg.order);
    const AntecedentMatrixD am = build_antecedent_matrix(report.antecedents, x);
    const Eigen::Index dims = am.xg.cols();

    ClusterModelD model;
    model.lambda = cfg.lambda;
    model.consequents.assign(static_cast<std::size_t>(k_count), Eigen::VectorXd::Zero(dims));
    model.biases.assign(static_cast<std::size_t>(k_count), 0.0);
    model.styles.assign(static_cast<std::size_t>(k_count), Eigen::MatrixXd::Identity(dims, dims));

    std::set<std::vector<int>> seen{labels};
    report.assignment_history.push_back(hash_labels(labels));
    report.label_history.push_back(labels);

    Eigen::MatrixXd decisions;
    for (int round = 1; round <= cfg.max_updates; ++round) {
        double objective = 0.0;
        int diverged = 0;
        for (int k = 0; k < k_count; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const Eigen::MatrixXd xk = gather_rows(am.xg, labels, k);
            const auto cons = solve_consequent(xk, model.styles[ks]);
            model.consequents[ks] = cons.p;
            model.biases[ks] = cons.q;
            if (cfg.style_updates) {
                try {
                    auto style = solve_style(xk, cons.p, cons.q, cfg.lambda, cfg.max_style_iters,
                                             cfg.theta);
                    if (style.stats.style_diverged) ++diverged;
                    model.styles[ks] = std::move(style.s);
                } catch (const NumericalError& e) {
                    throw EngineError("round " + std::to_string(round) + ", cluster " +
                                      std::to_string(k) + ": " + e.what());
                }
            }
            objective += style_objective(xk, model.styles[ks], model.consequents[ks],
                                         model.biases[ks], cfg.lambda);
        }
        report.objective_trace.push_back(objective);
        report.style_divergences.push_back(diverged);
        report.rounds = round;

        Assignment next = assign(am, model);
        decisions = next.decision_values;
        const int repairs =
            repair_empty_clusters(next.labels, k_count, next.decision_values.cwiseAbs());
        report.empty_cluster_repairs.push_back(repairs);
        labels = std::move(next.labels);
        report.assignment_history.push_back(hash_labels(labels));
        report.label_history.push_back(labels);
        if (!seen.insert(labels).second) {
            report.terminated_by = Termination::repeat;
            break;
        }
    }

    report.final_labels = labels;
    report.cluster_model = std::move(model);
    report.decision_values = std::move(decisions);
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace istsk

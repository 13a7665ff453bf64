#pragma once

#include "istsk/antecedent.hpp"
#include "istsk/dataset.hpp"
#include "istsk/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace istsk {

class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    Order order = Order::first;
    int rules = 2;              // R
    int clusters = 2;           // K
    double lambda = 1.0;
    double h = 1.0;             // antecedent width scale
    int max_updates = 50;       // H
    int max_style_iters = 30;   // T
    double theta = 1e-3;
    std::uint64_t seed = 0;
    Standardization standardization = Standardization::zscore;
    /// false keeps every S_k = I (the plain TSK fuzzy clustering reduction).
    bool style_updates = true;
    double fcm_fuzzifier = 2.0;
    int fcm_max_iter = 300;
    double fcm_tol = 1e-6;

    void validate() const;
};

enum class Termination { repeat, max_rounds };

std::string to_string(Termination t);

struct RunReport {
    std::vector<int> final_labels;
    ClusterModelD cluster_model;
    std::vector<std::uint64_t> assignment_history;  // hashes, initial labels first
    std::vector<std::vector<int>> label_history;    // same order as assignment_history
    std::vector<double> objective_trace;            // summed objective per round
    std::vector<int> style_divergences;             // clusters hitting the guard, per round
    std::vector<int> empty_cluster_repairs;         // per round
    int rounds = 0;
    Termination terminated_by = Termination::max_rounds;
    double wall_time = 0.0;
    Eigen::MatrixXd decision_values;  // N x K, final model on the final antecedent matrix
    AntecedentModelD antecedents;
};

struct Assignment {
    std::vector<int> labels;
    Eigen::MatrixXd decision_values;  // signed, N x K
};

/// label_i = argmin_k |P_k^T S_k x_i + q_k|, ties to the lowest k.
Assignment assign(const AntecedentMatrixD& am, const ClusterModelD& cm);
std::vector<int> assign_labels(const Eigen::MatrixXd& decision_values);

/// FNV-1a over the label values.
std::uint64_t hash_labels(const std::vector<int>& labels);

/// Moves the worst-fitting sample (largest |decision value| in its own
/// cluster, taken from a cluster with more than one member) into each empty
/// cluster. `fit` is N x K where larger means worse. Returns repairs made.
int repair_empty_clusters(std::vector<int>& labels, int clusters, const Eigen::MatrixXd& fit);

/// Runs the full alternating procedure on raw features; the features are
/// standardized per cfg.standardization first.
RunReport run(const Eigen::MatrixXd& features, const RunConfig& cfg);
inline RunReport run(const Dataset& ds, const RunConfig& cfg) { return run(ds.features, cfg); }

}  // namespace istsk

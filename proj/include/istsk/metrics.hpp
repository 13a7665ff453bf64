#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace istsk {

struct EvalResult {
    double acc = 0.0;
    double nmi = 0.0;
    std::vector<int> matching;  // predicted cluster -> class, -1 when unmatched
};

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method).
/// Returns the column assigned to each row.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Rows are true classes, columns predicted clusters.
Eigen::MatrixXi confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred);

/// Best agreement fraction over injective cluster-to-class maps.
double accuracy(const std::vector<int>& truth, const std::vector<int>& pred);

/// I(U;V) / sqrt(H(U) H(V)), natural logs; 0 when either side has one cluster.
double nmi(const std::vector<int>& truth, const std::vector<int>& pred);

EvalResult evaluate(const std::vector<int>& truth, const std::vector<int>& pred);

struct FriedmanResult {
    Eigen::VectorXd avg_ranks;
    double chi_sq = 0.0;
    double f_f = 0.0;
    double cd = 0.0;
    int algorithms = 0;  // N_c
    int datasets = 0;    // N_d
};

struct FriedmanOptions {
    /// Round average ranks half away from zero to this many decimals before
    /// computing the statistic, as printed rank tables do.
    std::optional<int> rank_decimals;
};

/// Friedman chi-square, the Iman-Davenport F_F statistic, and the
/// Bonferroni-Dunn critical difference q_alpha * sqrt(N_c (N_c + 1) / (6 N_d))
/// for a datasets x algorithms rank table.
FriedmanResult friedman(const Eigen::MatrixXd& rank_table, double q_alpha,
                        const FriedmanOptions& options = {});

/// Ranks each row (1 = best), averaging ranks over ties.
Eigen::MatrixXd rank_rows(const Eigen::MatrixXd& scores, bool higher_is_better = true);

}  // namespace istsk

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace istsk {

struct FcmOptions {
    int clusters = 2;
    double fuzzifier = 2.0;
    int max_iter = 300;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    /// Overrides the seeded choice of initial centers (C x d).
    std::optional<Eigen::MatrixXd> initial_centers;
};

struct FcmResult {
    Eigen::MatrixXd memberships;  // N x C, rows sum to 1
    Eigen::MatrixXd centers;      // C x d
    std::vector<double> objective_trace;
    int iterations = 0;
};

/// Memberships of every sample for fixed centers. A sample at zero distance
/// from one or more centers splits membership 1 uniformly over those centers.
Eigen::MatrixXd fcm_memberships(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers,
                                double fuzzifier);

/// sum_j sum_r u_jr^m ||x_j - c_r||^2
double fcm_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& memberships,
                     const Eigen::MatrixXd& centers, double fuzzifier);

/// Standard fuzzy c-means. Starts from `clusters` distinct samples drawn by
/// the seeded RNG and stops once no center moves more than `tol`.
FcmResult fcm_fit(const Eigen::MatrixXd& x, const FcmOptions& options);

/// argmax membership per row, ties to the lowest index.
std::vector<int> hard_labels(const Eigen::MatrixXd& memberships);
inline std::vector<int> hard_labels(const FcmResult& res) { return hard_labels(res.memberships); }

}  // namespace istsk

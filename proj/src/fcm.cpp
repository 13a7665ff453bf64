#include "istsk/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace istsk {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers) {
    Eigen::MatrixXd d2(x.rows(), centers.rows());
    for (Eigen::Index r = 0; r < centers.rows(); ++r)
        d2.col(r) = (x.rowwise() - centers.row(r)).rowwise().squaredNorm();
    return d2;
}

Eigen::MatrixXd weighted_centers(const Eigen::MatrixXd& x, const Eigen::MatrixXd& memberships,
                                 double fuzzifier) {
    const Eigen::MatrixXd w = memberships.array().pow(fuzzifier).matrix();
    Eigen::MatrixXd centers = w.transpose() * x;
    for (Eigen::Index r = 0; r < centers.rows(); ++r) {
        const double total = w.col(r).sum();
        if (total > 0.0) centers.row(r) /= total;
    }
    return centers;
}

// Partial Fisher-Yates over sample indices with a fixed-width draw, so the
// chosen centers depend only on the seed and N.
std::vector<Eigen::Index> pick_distinct(Eigen::Index n, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (int i = 0; i < count; ++i) {
        const auto remaining = static_cast<std::uint64_t>(n - i);
        const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % remaining);
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

}  // namespace

Eigen::MatrixXd fcm_memberships(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers,
                                double fuzzifier) {
    const Eigen::MatrixXd d2 = squared_distances(x, centers);
    const double power = 1.0 / (fuzzifier - 1.0);
    Eigen::MatrixXd u(x.rows(), centers.rows());
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        const auto row = d2.row(j);
        const auto zeros = (row.array() == 0.0).count();
        if (zeros > 0) {
            for (Eigen::Index r = 0; r < row.size(); ++r)
                u(j, r) = row(r) == 0.0 ? 1.0 / static_cast<double>(zeros) : 0.0;
            continue;
        }
        // u_jr = 1 / sum_s (d_jr / d_js)^(1/(m-1)); scaled by the row minimum
        // so tiny and huge distances stay representable.
        const double dmin = row.minCoeff();
        Eigen::ArrayXd inv = (row.array() / dmin).pow(-power).transpose();
        u.row(j) = (inv / inv.sum()).transpose();
    }
    return u;
}

double fcm_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& memberships,
                     const Eigen::MatrixXd& centers, double fuzzifier) {
    return (memberships.array().pow(fuzzifier) * squared_distances(x, centers).array()).sum();
}

FcmResult fcm_fit(const Eigen::MatrixXd& x, const FcmOptions& opt) {
    const auto n = x.rows();
    if (opt.clusters < 1) throw std::invalid_argument("fcm: cluster count must be >= 1");
    if (opt.clusters > n) throw std::invalid_argument("fcm: more clusters than samples");
    if (!(opt.fuzzifier > 1.0)) throw std::invalid_argument("fcm: fuzzifier must exceed 1");
    if (!(opt.tol > 0.0)) throw std::invalid_argument("fcm: tolerance must be positive");

    FcmResult res;
    if (opt.initial_centers) {
        if (opt.initial_centers->rows() != opt.clusters || opt.initial_centers->cols() != x.cols())
            throw std::invalid_argument("fcm: initial centers have the wrong shape");
        res.centers = *opt.initial_centers;
    } else {
        res.centers.resize(opt.clusters, x.cols());
        const auto picks = pick_distinct(n, opt.clusters, opt.seed);
        for (int r = 0; r < opt.clusters; ++r) res.centers.row(r) = x.row(picks[static_cast<std::size_t>(r)]);
    }

    res.memberships = fcm_memberships(x, res.centers, opt.fuzzifier);
    for (int it = 0; it < opt.max_iter; ++it) {
        res.objective_trace.push_back(fcm_objective(x, res.memberships, res.centers, opt.fuzzifier));
        Eigen::MatrixXd next = weighted_centers(x, res.memberships, opt.fuzzifier);
        const double shift = (next - res.centers).cwiseAbs().maxCoeff();
        res.centers = std::move(next);
        res.memberships = fcm_memberships(x, res.centers, opt.fuzzifier);
        res.iterations = it + 1;
        if (shift < opt.tol) break;
    }
    res.objective_trace.push_back(fcm_objective(x, res.memberships, res.centers, opt.fuzzifier));
    return res;
}

std::vector<int> hard_labels(const Eigen::MatrixXd& memberships) {
    std::vector<int> labels(static_cast<std::size_t>(memberships.rows()));
    for (Eigen::Index j = 0; j < memberships.rows(); ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < memberships.cols(); ++r)
            if (memberships(j, r) > memberships(j, best)) best = r;
        labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
    return labels;
}

}  // namespace istsk

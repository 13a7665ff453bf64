#include "istsk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace istsk {

namespace {

void check_labels(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("label vectors differ in length");
    if (truth.empty()) throw std::invalid_argument("empty label vectors");
    auto negative = [](int v) { return v < 0; };
    if (std::any_of(truth.begin(), truth.end(), negative) ||
        std::any_of(pred.begin(), pred.end(), negative))
        throw std::invalid_argument("labels must be non-negative");
}

double entropy(const Eigen::VectorXd& counts, double n) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i)
        if (counts(i) > 0) h -= counts(i) / n * std::log(counts(i) / n);
    return h;
}

}  // namespace

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    // Shortest augmenting path formulation with row/column potentials, O(n^3).
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw std::invalid_argument("assignment needs a square cost matrix");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
    return row_to_col;
}

Eigen::MatrixXi confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred) {
    check_labels(truth, pred);
    const int classes = *std::max_element(truth.begin(), truth.end()) + 1;
    const int clusters = *std::max_element(pred.begin(), pred.end()) + 1;
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(classes, clusters);
    for (std::size_t i = 0; i < truth.size(); ++i) ++m(truth[i], pred[i]);
    return m;
}

EvalResult evaluate(const std::vector<int>& truth, const std::vector<int>& pred) {
    const Eigen::MatrixXi conf = confusion_matrix(truth, pred);
    const auto n = static_cast<double>(truth.size());
    EvalResult out;

    // Pad to square; maximize matches by minimizing negated counts.
    const Eigen::Index side = std::max(conf.rows(), conf.cols());
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(side, side);
    cost.topLeftCorner(conf.rows(), conf.cols()) = -conf.cast<double>();
    const auto cluster_to_class = min_cost_assignment(cost.transpose());
    double matched = 0.0;
    out.matching.assign(static_cast<std::size_t>(conf.cols()), -1);
    for (Eigen::Index c = 0; c < conf.cols(); ++c) {
        const int cls = cluster_to_class[static_cast<std::size_t>(c)];
        if (cls < conf.rows()) {
            out.matching[static_cast<std::size_t>(c)] = cls;
            matched += conf(cls, c);
        }
    }
    out.acc = matched / n;

    const Eigen::VectorXd row_totals = conf.cast<double>().rowwise().sum();
    const Eigen::VectorXd col_totals = conf.cast<double>().colwise().sum().transpose();
    const double hu = entropy(row_totals, n);
    const double hv = entropy(col_totals, n);
    if (hu <= 0.0 || hv <= 0.0) {
        out.nmi = 0.0;
    } else {
        double mi = 0.0;
        for (Eigen::Index r = 0; r < conf.rows(); ++r)
            for (Eigen::Index c = 0; c < conf.cols(); ++c) {
                if (conf(r, c) == 0) continue;
                const double pij = conf(r, c) / n;
                mi += pij * std::log(pij * n * n / (row_totals(r) * col_totals(c)));
            }
        out.nmi = std::clamp(mi / std::sqrt(hu * hv), 0.0, 1.0);
    }
    return out;
}

double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    return evaluate(truth, pred).acc;
}

double nmi(const std::vector<int>& truth, const std::vector<int>& pred) {
    return evaluate(truth, pred).nmi;
}

FriedmanResult friedman(const Eigen::MatrixXd& ranks, double q_alpha, const FriedmanOptions& options) {
    const auto nd = static_cast<double>(ranks.rows());
    const auto nc = static_cast<double>(ranks.cols());
    if (ranks.rows() < 2) throw std::invalid_argument("friedman: need at least 2 datasets");
    if (ranks.cols() < 2) throw std::invalid_argument("friedman: need at least 2 algorithms");
    const double row_sum = nc * (nc + 1.0) / 2.0;
    for (Eigen::Index i = 0; i < ranks.rows(); ++i) {
        if (!ranks.row(i).allFinite() || ranks.row(i).minCoeff() < 1.0 ||
            ranks.row(i).maxCoeff() > nc || std::abs(ranks.row(i).sum() - row_sum) > 1e-6)
            throw std::invalid_argument("friedman: row " + std::to_string(i) +
                                        " is not a ranking of 1..N_c");
    }

    FriedmanResult out;
    out.datasets = static_cast<int>(ranks.rows());
    out.algorithms = static_cast<int>(ranks.cols());
    out.avg_ranks = ranks.colwise().mean().transpose();
    if (options.rank_decimals) {
        const double scale = std::pow(10.0, *options.rank_decimals);
        for (Eigen::Index j = 0; j < out.avg_ranks.size(); ++j)
            out.avg_ranks(j) = std::round(out.avg_ranks(j) * scale) / scale;
    }
    out.chi_sq = 12.0 * nd / (nc * (nc + 1.0)) *
                 (out.avg_ranks.squaredNorm() - nc * (nc + 1.0) * (nc + 1.0) / 4.0);
    const double denom = nd * (nc - 1.0) - out.chi_sq;
    out.f_f = denom > 0.0 ? (nd - 1.0) * out.chi_sq / denom : std::numeric_limits<double>::infinity();
    out.cd = q_alpha * std::sqrt(nc * (nc + 1.0) / (6.0 * nd));
    return out;
}

Eigen::MatrixXd rank_rows(const Eigen::MatrixXd& scores, bool higher_is_better) {
    Eigen::MatrixXd ranks(scores.rows(), scores.cols());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.cols()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return higher_is_better ? scores(i, a) > scores(i, b) : scores(i, a) < scores(i, b);
        });
        std::size_t pos = 0;
        while (pos < order.size()) {
            std::size_t end = pos + 1;
            while (end < order.size() && scores(i, order[end]) == scores(i, order[pos])) ++end;
            const double avg = (static_cast<double>(pos + 1) + static_cast<double>(end)) / 2.0;
            for (std::size_t t = pos; t < end; ++t) ranks(i, order[t]) = avg;
            pos = end;
        }
    }
    return ranks;
}

}  // namespace istsk

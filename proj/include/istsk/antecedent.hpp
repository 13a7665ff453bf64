#pragma once

// Rule antecedents: Gaussian memberships estimated from fuzzy c-means,
// normalized firing strengths, and the antecedent matrix every cluster
// subproblem is posed in.

#include "istsk/fcm.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace istsk {

enum class Order { zero = 0, first = 1 };

inline constexpr double kWidthFloor = 1e-4;

template <typename Scalar>
struct AntecedentModel {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix centers;  // R x d
    Matrix widths;   // R x d, all >= kWidthFloor
    Order order = Order::first;
    Scalar scale_h = Scalar(1);

    Eigen::Index rule_count() const { return centers.rows(); }
    Eigen::Index input_dims() const { return centers.cols(); }
    /// Columns of the antecedent matrix: R(1+d) for first order, R for zero order.
    Eigen::Index expanded_dims() const {
        return order == Order::first ? rule_count() * (1 + input_dims()) : rule_count();
    }
};

template <typename Scalar>
struct AntecedentMatrix {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix xg;                  // N x D
    Matrix normalized_firings;  // N x R, rows sum to 1
};

template <typename Scalar>
struct FiringStrengths {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Vector log_raw;     // sum over features of log memberships
    Vector raw;         // exp(log_raw), may underflow to 0
    Vector normalized;  // sums to 1
};

using AntecedentModelD = AntecedentModel<double>;
using AntecedentMatrixD = AntecedentMatrix<double>;

/// Gaussian membership exp(-((x - c) / delta)^2 / 2).
template <typename Scalar>
Scalar membership(Scalar x, Scalar c, Scalar delta) {
    const Scalar z = (x - c) / delta;
    return std::exp(Scalar(-0.5) * z * z);
}

/// Centers are membership-weighted means; widths are h times the
/// membership-weighted standard deviation, floored at kWidthFloor.
template <typename DerivedX, typename DerivedU>
AntecedentModel<typename DerivedX::Scalar> estimate_antecedents(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& memberships,
    typename DerivedX::Scalar h, Order order) {
    using Scalar = typename DerivedX::Scalar;
    if (!(h > Scalar(0))) throw std::invalid_argument("antecedent: scale h must be positive");
    if (memberships.rows() != x.rows())
        throw std::invalid_argument("antecedent: membership rows do not match samples");

    const Eigen::Index rules = memberships.cols();
    AntecedentModel<Scalar> model;
    model.order = order;
    model.scale_h = h;
    model.centers.resize(rules, x.cols());
    model.widths.resize(rules, x.cols());
    for (Eigen::Index r = 0; r < rules; ++r) {
        const auto w = memberships.col(r).template cast<Scalar>();
        const Scalar total = w.sum();
        if (!(total > Scalar(0)))
            throw std::runtime_error("antecedent: rule " + std::to_string(r) +
                                     " has zero total membership");
        model.centers.row(r) = (w.transpose() * x) / total;
        for (Eigen::Index i = 0; i < x.cols(); ++i) {
            const Scalar var =
                (w.array() * (x.col(i).array() - model.centers(r, i)).square()).sum() / total;
            model.widths(r, i) = std::max(h * std::sqrt(var), Scalar(kWidthFloor));
        }
    }
    return model;
}

inline AntecedentModelD estimate_antecedents(const Eigen::MatrixXd& x, const FcmResult& fcm,
                                             Eigen::Index rules, double h, Order order) {
    if (fcm.memberships.cols() != rules)
        throw std::invalid_argument("antecedent: rule count differs from FCM cluster count");
    return estimate_antecedents(x, fcm.memberships, h, order);
}

/// Firing strength of every rule for one sample. Products of memberships are
/// accumulated as log sums and shifted by their maximum before exponentiating.
template <typename Scalar, typename DerivedV>
FiringStrengths<Scalar> firing_strengths(const AntecedentModel<Scalar>& model,
                                         const Eigen::MatrixBase<DerivedV>& x) {
    using Vector = typename FiringStrengths<Scalar>::Vector;
    const Eigen::Index rules = model.rule_count();
    FiringStrengths<Scalar> out;
    out.log_raw.resize(rules);
    for (Eigen::Index r = 0; r < rules; ++r) {
        const auto z = (x.transpose().template cast<Scalar>().array() - model.centers.row(r).array()) /
                       model.widths.row(r).array();
        out.log_raw(r) = Scalar(-0.5) * z.square().sum();
    }
    // Scalar exp: the vectorized one clamps large negative arguments above zero.
    const auto exp = [](Scalar v) { return std::exp(v); };
    out.raw = out.log_raw.unaryExpr(exp);

    const Scalar top = out.log_raw.maxCoeff();
    if (!std::isfinite(top)) {
        out.normalized = Vector::Constant(rules, Scalar(1) / static_cast<Scalar>(rules));
        return out;
    }
    out.normalized = (out.log_raw.array() - top).matrix().unaryExpr(exp);
    out.normalized /= out.normalized.sum();
    return out;
}

/// Row j of xg is the concatenation over rules of firing_r(x_j) * [1, x_j]
/// (first order) or just the normalized firing vector (zero order).
template <typename Scalar, typename DerivedX>
AntecedentMatrix<Scalar> build_antecedent_matrix(const AntecedentModel<Scalar>& model,
                                                 const Eigen::MatrixBase<DerivedX>& x) {
    if (x.cols() != model.input_dims())
        throw std::invalid_argument("antecedent: data dimension differs from model");
    const Eigen::Index n = x.rows();
    const Eigen::Index rules = model.rule_count();
    const Eigen::Index d = model.input_dims();
    const Eigen::Index block = model.order == Order::first ? 1 + d : 1;

    AntecedentMatrix<Scalar> out;
    out.normalized_firings.resize(n, rules);
    out.xg.resize(n, rules * block);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto fs = firing_strengths(model, x.row(j).transpose());
        out.normalized_firings.row(j) = fs.normalized.transpose();
        for (Eigen::Index r = 0; r < rules; ++r) {
            out.xg(j, r * block) = fs.normalized(r);
            if (model.order == Order::first)
                out.xg.row(j).segment(r * block + 1, d) =
                    fs.normalized(r) * x.row(j).template cast<Scalar>();
        }
    }
    return out;
}

/// Least-squares combined consequent vector for a supervised target, used to
/// validate the antecedent pipeline. Rank-deficient inputs fall back to a
/// 1e-8 ridge on the normal equations.
template <typename DerivedX, typename DerivedY>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> supervised_ls_oracle(
    const Eigen::MatrixBase<DerivedX>& xg, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Matrix a = xg;
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    if (qr.rank() == a.cols()) return qr.solve(y.template cast<Scalar>());
    Matrix gram = a.transpose() * a;
    gram.diagonal().array() += Scalar(1e-8);
    return gram.ldlt().solve(a.transpose() * y.template cast<Scalar>());
}

}  // namespace istsk

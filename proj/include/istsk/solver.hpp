#pragma once

// Per-cluster subproblems of the style TSK objective
//
//   min_{P,q,S} ||X S P + q e||^2 + lambda ||S - I||_F^2   s.t. ||P|| = 1
//
// solved alternately: (P, q) for fixed S is a smallest-eigenvector problem,
// S for fixed (P, q) is a rank-one fixed-point iteration started from I.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace istsk {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kEigenTieTolerance = 1e-10;
inline constexpr double kStyleDivergenceNorm = 1e6;

template <typename Scalar>
struct SubproblemStats {
    Scalar smallest_eigenvalue = Scalar(0);
    int style_iterations = 0;
    Scalar style_delta = Scalar(0);
    bool style_diverged = false;
};

template <typename Scalar>
struct ConsequentSolution {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p;
    Scalar q = Scalar(0);
    SubproblemStats<Scalar> stats;
};

template <typename Scalar>
struct StyleSolution {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s;
    SubproblemStats<Scalar> stats;
};

template <typename Scalar>
struct ClusterModel {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    std::vector<Vector> consequents;  // P_k, unit norm
    std::vector<Scalar> biases;       // q_k
    std::vector<Matrix> styles;       // S_k, D x D
    Scalar lambda = Scalar(1);

    int clusters() const { return static_cast<int>(consequents.size()); }
};

using ClusterModelD = ClusterModel<double>;

namespace detail {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Flip so the entry of largest magnitude (first on ties) is positive.
template <typename Scalar>
void canonicalize_sign(Vec<Scalar>& p) {
    Eigen::Index top = 0;
    for (Eigen::Index i = 1; i < p.size(); ++i)
        if (std::abs(p(i)) > std::abs(p(top))) top = i;
    if (p(top) < Scalar(0)) p = -p;
}

/// Normalized projection of the first unit basis vector that is not
/// (numerically) orthogonal to span(basis). basis has orthonormal columns.
template <typename Scalar>
Vec<Scalar> first_basis_projection(const Mat<Scalar>& basis) {
    const Eigen::Index dims = basis.rows();
    const Scalar threshold = Scalar(1e-6);
    for (Eigen::Index i = 0; i < dims; ++i) {
        Vec<Scalar> v = basis * basis.row(i).transpose();
        const Scalar norm = v.norm();
        if (norm > threshold) return v / norm;
    }
    return basis.col(0);
}

/// Same as first_basis_projection, for the orthogonal complement of span(basis).
template <typename Scalar>
Vec<Scalar> first_complement_projection(const Mat<Scalar>& basis, Eigen::Index dims) {
    const Scalar threshold = Scalar(1e-6);
    for (Eigen::Index i = 0; i < dims; ++i) {
        Vec<Scalar> v = -(basis * basis.row(i).transpose());
        v(i) += Scalar(1);
        const Scalar norm = v.norm();
        if (norm > threshold) return v / norm;
    }
    return Vec<Scalar>::Unit(dims, 0);
}

}  // namespace detail

/// H = S^T X^T X S - S^T X^T e e^T X S / (e^T e), i.e. the scatter matrix of
/// the rows of X S about their mean. Symmetric by construction.
template <typename DerivedX, typename DerivedS>
detail::Mat<typename DerivedX::Scalar> build_h(const Eigen::MatrixBase<DerivedX>& xk,
                                               const Eigen::MatrixBase<DerivedS>& sk) {
    using Scalar = typename DerivedX::Scalar;
    if (xk.rows() == 0) throw std::invalid_argument("build_h: empty cluster");
    detail::Mat<Scalar> y = xk * sk;
    y.rowwise() -= y.colwise().mean();
    detail::Mat<Scalar> h = y.transpose() * y;
    h = (Scalar(0.5) * (h + h.transpose())).eval();
    return h;
}

/// ||X S P + q e||^2
template <typename DerivedX, typename DerivedS, typename DerivedP>
typename DerivedX::Scalar consequent_objective(const Eigen::MatrixBase<DerivedX>& xk,
                                               const Eigen::MatrixBase<DerivedS>& sk,
                                               const Eigen::MatrixBase<DerivedP>& p,
                                               typename DerivedX::Scalar q) {
    return ((xk * (sk * p)).array() + q).matrix().squaredNorm();
}

/// Bias minimizing the objective for a fixed P: q = -e^T X S P / e^T e.
template <typename DerivedX, typename DerivedS, typename DerivedP>
typename DerivedX::Scalar optimal_bias(const Eigen::MatrixBase<DerivedX>& xk,
                                       const Eigen::MatrixBase<DerivedS>& sk,
                                       const Eigen::MatrixBase<DerivedP>& p) {
    return -(xk * (sk * p)).mean();
}

/// Unit-norm P minimizing ||X S P + q e||^2 with its optimal q: the
/// eigenvector of build_h(X, S) for the smallest eigenvalue. A degenerate
/// smallest eigenspace resolves to the normalized projection of the first
/// unit basis vector onto it; the sign makes the largest entry positive.
///
/// Clusters with fewer rows than columns go through the N_k x N_k Gram
/// matrix of the centered rows instead of the D x D eigenproblem; both
/// routes return the same vector.
template <typename DerivedX, typename DerivedS>
ConsequentSolution<typename DerivedX::Scalar> solve_consequent(
    const Eigen::MatrixBase<DerivedX>& xk, const Eigen::MatrixBase<DerivedS>& sk,
    bool allow_gram_route = true) {
    using Scalar = typename DerivedX::Scalar;
    using Mat = detail::Mat<Scalar>;
    using Vec = detail::Vec<Scalar>;
    if (xk.rows() == 0) throw std::invalid_argument("solve_consequent: empty cluster");
    const Eigen::Index dims = sk.cols();

    ConsequentSolution<Scalar> out;
    if (allow_gram_route && xk.rows() < dims) {
        Mat y = xk * sk;
        y.rowwise() -= y.colwise().mean();
        const Mat gram = y * y.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(gram);
        if (es.info() != Eigen::Success) throw NumericalError("solve_consequent: eigensolver failed");
        const Vec sigma2 = es.eigenvalues().cwiseMax(Scalar(0));
        const Scalar h_norm = std::sqrt(sigma2.squaredNorm());
        const Scalar tol = Scalar(kEigenTieTolerance) * (Scalar(1) + h_norm);
        // Eigenvalues of H are sigma2 plus (dims - rows) exact zeros, so the
        // smallest is 0 and its eigenspace is everything orthogonal to the
        // right singular vectors with sigma2 >= tol.
        Eigen::Index big = 0;
        for (Eigen::Index i = 0; i < sigma2.size(); ++i)
            if (sigma2(i) >= tol) ++big;
        Mat v(dims, big);
        for (Eigen::Index i = 0, c = 0; i < sigma2.size(); ++i) {
            if (sigma2(i) < tol) continue;
            v.col(c++) = y.transpose() * es.eigenvectors().col(i) / std::sqrt(sigma2(i));
        }
        // Re-orthonormalize; the Gram route squares the condition number.
        if (big > 0) {
            Eigen::HouseholderQR<Mat> qr(v);
            v = qr.householderQ() * Mat::Identity(dims, big);
        }
        out.p = detail::first_complement_projection<Scalar>(v, dims);
        out.stats.smallest_eigenvalue = Scalar(0);
    } else {
        const Mat h = build_h(xk, sk);
        Eigen::SelfAdjointEigenSolver<Mat> es(h);
        if (es.info() != Eigen::Success) throw NumericalError("solve_consequent: eigensolver failed");
        const auto& evals = es.eigenvalues();
        const Scalar tol = Scalar(kEigenTieTolerance) * (Scalar(1) + h.norm());
        Eigen::Index degenerate = 1;
        while (degenerate < evals.size() && evals(degenerate) - evals(0) < tol) ++degenerate;
        if (degenerate == 1)
            out.p = es.eigenvectors().col(0);
        else
            out.p = detail::first_basis_projection<Scalar>(es.eigenvectors().leftCols(degenerate));
        out.stats.smallest_eigenvalue = evals(0);
    }
    detail::canonicalize_sign<Scalar>(out.p);
    out.q = optimal_bias(xk, sk, out.p);
    return out;
}

/// a = X S P + q e
template <typename DerivedX, typename DerivedS, typename DerivedP>
detail::Vec<typename DerivedX::Scalar> style_residual(const Eigen::MatrixBase<DerivedX>& xk,
                                                      const Eigen::MatrixBase<DerivedS>& sk,
                                                      const Eigen::MatrixBase<DerivedP>& p,
                                                      typename DerivedX::Scalar q) {
    return ((xk * (sk * p)).array() + q).matrix();
}

/// S = I - (1 / (2 lambda)) X^T a P^T
template <typename DerivedX, typename DerivedA, typename DerivedP>
detail::Mat<typename DerivedX::Scalar> style_step(const Eigen::MatrixBase<DerivedX>& xk,
                                                  const Eigen::MatrixBase<DerivedA>& a,
                                                  const Eigen::MatrixBase<DerivedP>& p,
                                                  typename DerivedX::Scalar lambda) {
    using Scalar = typename DerivedX::Scalar;
    if (!(lambda > Scalar(0))) throw std::invalid_argument("style_step: lambda must be positive");
    const Eigen::Index dims = xk.cols();
    detail::Mat<Scalar> s = detail::Mat<Scalar>::Identity(dims, dims);
    s.noalias() -= (Scalar(0.5) / lambda) * (xk.transpose() * a) * p.transpose();
    return s;
}

/// ||X S P + q e||^2 + lambda ||S - I||_F^2
template <typename DerivedX, typename DerivedS, typename DerivedP>
typename DerivedX::Scalar style_objective(const Eigen::MatrixBase<DerivedX>& xk,
                                          const Eigen::MatrixBase<DerivedS>& sk,
                                          const Eigen::MatrixBase<DerivedP>& p,
                                          typename DerivedX::Scalar q,
                                          typename DerivedX::Scalar lambda) {
    using Scalar = typename DerivedX::Scalar;
    const Eigen::Index dims = sk.rows();
    return consequent_objective(xk, sk, p, q) +
           lambda * (sk - detail::Mat<Scalar>::Identity(dims, dims)).squaredNorm();
}

/// Alternates style_residual and style_step from S = I until two successive
/// iterates differ by less than theta in Frobenius norm or max_iter steps
/// have run. If an iterate's norm exceeds kStyleDivergenceNorm the loop
/// stops and the best iterate seen (lowest style_objective) is returned with
/// stats.style_diverged set. Non-finite iterates throw NumericalError.
template <typename DerivedX, typename DerivedP>
StyleSolution<typename DerivedX::Scalar> solve_style(const Eigen::MatrixBase<DerivedX>& xk,
                                                     const Eigen::MatrixBase<DerivedP>& p,
                                                     typename DerivedX::Scalar q,
                                                     typename DerivedX::Scalar lambda, int max_iter,
                                                     typename DerivedX::Scalar theta) {
    using Scalar = typename DerivedX::Scalar;
    using Mat = detail::Mat<Scalar>;
    if (max_iter < 1) throw std::invalid_argument("solve_style: max_iter must be >= 1");
    if (!(theta > Scalar(0))) throw std::invalid_argument("solve_style: theta must be positive");
    if (!(lambda > Scalar(0))) throw std::invalid_argument("solve_style: lambda must be positive");

    const Eigen::Index dims = xk.cols();
    StyleSolution<Scalar> out;
    out.s = Mat::Identity(dims, dims);
    Mat best = out.s;
    Scalar best_objective = style_objective(xk, out.s, p, q, lambda);

    for (int t = 1; t <= max_iter; ++t) {
        const auto a = style_residual(xk, out.s, p, q);
        Mat next = style_step(xk, a, p, lambda);
        if (!next.allFinite())
            throw NumericalError("solve_style: non-finite style matrix at iteration " +
                                 std::to_string(t) + " (lambda too small for the data scale?)");
        out.stats.style_delta = (next - out.s).norm();
        out.stats.style_iterations = t;
        out.s = std::move(next);
        if (out.s.norm() > Scalar(kStyleDivergenceNorm)) {
            out.stats.style_diverged = true;
            out.s = best;
            break;
        }
        const Scalar objective = style_objective(xk, out.s, p, q, lambda);
        if (objective < best_objective) {
            best_objective = objective;
            best = out.s;
        }
        if (out.stats.style_delta < theta) break;
    }
    return out;
}

/// Signed decision values x^T S_k P_k + q_k for every row x of xg (N x K),
/// the same per-row residual that the cluster fit minimizes.
template <typename Scalar, typename DerivedX>
detail::Mat<Scalar> decision_values(const ClusterModel<Scalar>& model,
                                    const Eigen::MatrixBase<DerivedX>& xg) {
    const int k = model.clusters();
    detail::Mat<Scalar> out(xg.rows(), k);
    for (int c = 0; c < k; ++c) {
        const detail::Vec<Scalar> w = model.styles[c] * model.consequents[c];
        out.col(c) = (xg * w).array() + model.biases[c];
    }
    return out;
}

}  // namespace istsk

#include "istsk/antecedent.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using istsk::AntecedentModelD;
using istsk::Order;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

Eigen::MatrixXd random_memberships(int rows, int cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m.array().colwise() / m.rowwise().sum().array();
}

AntecedentModelD one_dim_model(std::vector<double> centers, std::vector<double> widths, Order order) {
    AntecedentModelD m;
    m.order = order;
    m.centers = Eigen::Map<Eigen::VectorXd>(centers.data(), static_cast<Eigen::Index>(centers.size()));
    m.widths = Eigen::Map<Eigen::VectorXd>(widths.data(), static_cast<Eigen::Index>(widths.size()));
    return m;
}

}  // namespace

TEST_CASE("gaussian membership closed forms") {
    CHECK(istsk::membership(1.5, 1.5, 0.3) == 1.0);
    CHECK(istsk::membership(2.0, 1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(istsk::membership(4.0, 1.0, 1.0) == doctest::Approx(0.011108996538242306).epsilon(1e-12));
    double prev = 1.0;
    for (double dx = 0.1; dx < 5; dx += 0.1) {
        const double m = istsk::membership(dx, 0.0, 0.7);
        CHECK(m < prev);
        CHECK(istsk::membership(-dx, 0.0, 0.7) == m);
        prev = m;
    }
}

TEST_CASE("centers and widths from memberships") {
    SUBCASE("uniform memberships collapse every center to the mean") {
        const auto x = random_matrix(20, 3, 2);
        const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(20, 4, 0.25);
        const auto m = istsk::estimate_antecedents(x, u, 1.0, Order::first);
        for (Eigen::Index r = 0; r < 4; ++r)
            CHECK((m.centers.row(r) - x.colwise().mean()).norm() < 1e-12);
    }
    SUBCASE("two values with equal weight") {
        Eigen::MatrixXd x(2, 1);
        x << 0, 2;
        const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(2, 1, 0.5);
        const auto m = istsk::estimate_antecedents(x, u, 1.0, Order::first);
        CHECK(m.centers(0, 0) == doctest::Approx(1.0));
        CHECK(m.widths(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("widths scale linearly with h") {
        const auto x = random_matrix(30, 2, 3);
        const auto u = random_memberships(30, 3, 4);
        const auto a = istsk::estimate_antecedents(x, u, 1.0, Order::first);
        const auto b = istsk::estimate_antecedents(x, u, 2.0, Order::first);
        CHECK((b.widths - 2.0 * a.widths).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(b.centers == a.centers);
    }
    SUBCASE("constant features hit the floor") {
        const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(5, 2, 3.0);
        const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(5, 1, 1.0);
        const auto m = istsk::estimate_antecedents(x, u, 1.0, Order::zero);
        CHECK((m.widths.array() == istsk::kWidthFloor).all());
    }
    SUBCASE("invalid inputs") {
        const auto x = random_matrix(4, 2, 5);
        Eigen::MatrixXd u = Eigen::MatrixXd::Constant(4, 2, 0.5);
        CHECK_THROWS(istsk::estimate_antecedents(x, u, 0.0, Order::first));
        u.col(1).setZero();
        CHECK_THROWS(istsk::estimate_antecedents(x, u, 1.0, Order::first));
        istsk::FcmResult fcm;
        fcm.memberships = Eigen::MatrixXd::Constant(4, 2, 0.5);
        CHECK_THROWS(istsk::estimate_antecedents(x, fcm, 3, 1.0, Order::first));
        CHECK_NOTHROW(istsk::estimate_antecedents(x, fcm, 2, 1.0, Order::first));
    }
}

TEST_CASE("firing strengths") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    SUBCASE("two rules on a line") {
        const auto m = one_dim_model({0, 2}, {1, 1}, Order::first);
        const auto f = istsk::firing_strengths(m, zero);
        CHECK(f.raw(0) == doctest::Approx(1.0));
        CHECK(f.raw(1) == doctest::Approx(std::exp(-2.0)));
        const double total = 1.0 + std::exp(-2.0);
        CHECK(f.normalized(0) == doctest::Approx(1.0 / total).epsilon(1e-14));
        CHECK(f.normalized(1) == doctest::Approx(std::exp(-2.0) / total).epsilon(1e-14));
        CHECK(f.normalized(0) == doctest::Approx(0.8808).epsilon(1e-4));
    }
    SUBCASE("one rule") {
        const auto m = one_dim_model({3}, {0.5}, Order::first);
        CHECK(istsk::firing_strengths(m, zero).normalized(0) == 1.0);
    }
    SUBCASE("identical rules split evenly") {
        const auto m = one_dim_model({1, 1}, {2, 2}, Order::first);
        const auto f = istsk::firing_strengths(m, Eigen::VectorXd::Constant(1, 40.0));
        CHECK(f.normalized(0) == doctest::Approx(0.5));
        CHECK(f.normalized(1) == doctest::Approx(0.5));
    }
    SUBCASE("far-away samples underflow without NaN") {
        const auto m = one_dim_model({0, 1}, {1e-3, 1e-3}, Order::first);
        const auto f = istsk::firing_strengths(m, Eigen::VectorXd::Constant(1, 50.0));
        CHECK(f.raw.isZero(0.0));
        CHECK(f.normalized.allFinite());
        CHECK(f.normalized.sum() == doctest::Approx(1.0));
        CHECK(f.normalized(1) == doctest::Approx(1.0));
    }
    SUBCASE("high-dimensional products stay normalized") {
        AntecedentModelD m;
        m.centers = random_matrix(3, 200, 6);
        m.widths = Eigen::MatrixXd::Constant(3, 200, 0.3);
        const Eigen::VectorXd x = random_matrix(200, 1, 7);
        const auto f = istsk::firing_strengths(m, x);
        CHECK(f.normalized.allFinite());
        CHECK(std::abs(f.normalized.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("antecedent matrix layout") {
    SUBCASE("order 0 is the normalized firing vector") {
        // Widths chosen so that the normalized strengths at x = 0 are (0.25, 0.75).
        const double shift = std::sqrt(2.0 * std::log(3.0));
        const auto m = one_dim_model({shift, 0}, {1, 1}, Order::zero);
        const auto am = istsk::build_antecedent_matrix(m, Eigen::MatrixXd::Zero(1, 1));
        REQUIRE(am.xg.cols() == 2);
        CHECK(am.xg(0, 0) == doctest::Approx(0.25));
        CHECK(am.xg(0, 1) == doctest::Approx(0.75));
        CHECK(m.expanded_dims() == 2);
    }
    SUBCASE("order 1 stacks firing-weighted [1, x]") {
        const auto m = one_dim_model({1, 3}, {1, 1}, Order::first);
        const auto am = istsk::build_antecedent_matrix(m, Eigen::MatrixXd::Constant(1, 1, 2.0));
        REQUIRE(am.xg.cols() == 4);
        CHECK(am.xg(0, 0) == doctest::Approx(0.5));
        CHECK(am.xg(0, 1) == doctest::Approx(1.0));
        CHECK(am.xg(0, 2) == doctest::Approx(0.5));
        CHECK(am.xg(0, 3) == doctest::Approx(1.0));
        CHECK(m.expanded_dims() == 4);
    }
}

TEST_CASE("combined consequent reproduces the rule-by-rule output") {
    const int d = 3, rules = 4;
    AntecedentModelD m;
    m.centers = random_matrix(rules, d, 8);
    m.widths = random_matrix(rules, d, 9).cwiseAbs().array() + 0.5;
    const auto x = random_matrix(25, d, 10);
    const auto am = istsk::build_antecedent_matrix(m, x);
    const Eigen::VectorXd pg = random_matrix(rules * (d + 1), 1, 11);
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        const auto f = istsk::firing_strengths(m, x.row(j).transpose());
        double explicit_sum = 0;
        for (int r = 0; r < rules; ++r) {
            const auto p = pg.segment(r * (d + 1), d + 1);
            explicit_sum += f.normalized(r) * (p(0) + p.tail(d).dot(x.row(j)));
        }
        CHECK(std::abs(am.xg.row(j).dot(pg) - explicit_sum) < 1e-10);
    }
    CHECK((am.normalized_firings.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("row permutation commutes with the antecedent matrix") {
    AntecedentModelD m;
    m.centers = random_matrix(3, 2, 12);
    m.widths = Eigen::MatrixXd::Ones(3, 2);
    const auto x = random_matrix(15, 2, 13);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(15);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 15, std::mt19937(1));
    const auto a = istsk::build_antecedent_matrix(m, x);
    const auto b = istsk::build_antecedent_matrix(m, Eigen::MatrixXd(perm * x));
    CHECK((b.xg - perm * a.xg).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("least-squares oracle") {
    const auto xg = random_matrix(50, 6, 14);
    SUBCASE("exact recovery") {
        const Eigen::VectorXd p = random_matrix(6, 1, 15);
        const Eigen::VectorXd y = xg * p;
        const auto est = istsk::supervised_ls_oracle(xg, y);
        CHECK((est - p).norm() / p.norm() < 1e-6);
    }
    SUBCASE("zero target") {
        CHECK(istsk::supervised_ls_oracle(xg, Eigen::VectorXd::Zero(50)).isZero(0.0));
    }
    SUBCASE("residual is orthogonal to the columns") {
        const Eigen::VectorXd y = random_matrix(50, 1, 16);
        const auto p = istsk::supervised_ls_oracle(xg, y);
        CHECK((xg.transpose() * (y - xg * p)).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("rank deficiency falls back to the ridge") {
        Eigen::MatrixXd a = xg;
        a.col(5) = a.col(4);
        const Eigen::VectorXd y = random_matrix(50, 1, 17);
        const auto p = istsk::supervised_ls_oracle(a, y);
        CHECK(p.allFinite());
        CHECK((a.transpose() * (y - a * p)).cwiseAbs().maxCoeff() < 1e-5);
    }
}

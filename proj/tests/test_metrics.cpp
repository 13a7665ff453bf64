#include "istsk/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <random>

namespace {

// Brute force over every injective map from predicted clusters to classes.
double brute_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
    const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
    const int m = std::max(kt, kp);
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < truth.size(); ++i)
            if (perm[static_cast<std::size_t>(pred[i])] == truth[i]) ++hit;
        best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(truth.size());
}

double entropy_nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    std::map<int, int> ca, cb;
    std::map<std::pair<int, int>, int> cab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++cab[{a[i], b[i]}];
    }
    if (ca.size() < 2 || cb.size() < 2) return 0;
    double ha = 0, hb = 0, mi = 0;
    for (auto [k, c] : ca) ha -= c / n * std::log(c / n);
    for (auto [k, c] : cb) hb -= c / n * std::log(c / n);
    for (auto [k, c] : cab) mi += c / n * std::log(c * n / (double(ca[k.first]) * cb[k.second]));
    return mi / std::sqrt(ha * hb);
}

std::vector<int> random_labels(std::size_t n, int k, std::mt19937& rng) {
    std::vector<int> out(n);
    for (auto& v : out) v = static_cast<int>(rng() % static_cast<unsigned>(k));
    return out;
}

std::vector<int> relabel(const std::vector<int>& labels, const std::vector<int>& map) {
    std::vector<int> out;
    for (int l : labels) out.push_back(map[static_cast<std::size_t>(l)]);
    return out;
}

}  // namespace

TEST_CASE("accuracy examples") {
    CHECK(istsk::accuracy({0, 1, 2, 1}, {0, 1, 2, 1}) == 1.0);
    CHECK(istsk::accuracy({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
    CHECK(istsk::accuracy({0, 0, 1, 1}, {0, 1, 0, 1}) == 0.5);
    CHECK(istsk::accuracy({0, 0, 1, 1}, {0, 0, 0, 0}) == 0.5);
    CHECK(istsk::accuracy({0, 0, 0, 0}, {0, 1, 2, 3}) == 0.25);
    CHECK_THROWS(istsk::accuracy({0, 1}, {0}));
    CHECK_THROWS(istsk::accuracy({}, {}));
}

TEST_CASE("nmi examples") {
    CHECK(istsk::nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(istsk::nmi({0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}) == doctest::Approx(1.0));
    CHECK(istsk::nmi({0, 0, 1, 1}, {0, 0, 0, 0}) == 0.0);
    CHECK(std::abs(istsk::nmi({0, 0, 1, 1}, {0, 1, 0, 1})) < 1e-15);
    CHECK_THROWS(istsk::nmi({0, 1}, {0, 1, 1}));
}

TEST_CASE("accuracy and nmi agree with brute-force references") {
    std::mt19937 rng(1);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 5 + rng() % 40;
        const int kt = 1 + static_cast<int>(rng() % 4);
        const int kp = 1 + static_cast<int>(rng() % 5);
        auto truth = random_labels(n, kt, rng);
        auto pred = random_labels(n, kp, rng);
        CHECK(istsk::accuracy(truth, pred) == doctest::Approx(brute_accuracy(truth, pred)));
        CHECK(istsk::nmi(truth, pred) == doctest::Approx(entropy_nmi(truth, pred)).epsilon(1e-12));
    }
}

TEST_CASE("metrics are invariant under relabeling") {
    std::mt19937 rng(2);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 10 + rng() % 50;
        const int k = 2 + static_cast<int>(rng() % 5);
        const auto truth = random_labels(n, k, rng);
        const auto pred = random_labels(n, k, rng);
        std::vector<int> map(static_cast<std::size_t>(k));
        std::iota(map.begin(), map.end(), 0);
        std::shuffle(map.begin(), map.end(), rng);
        const auto pred2 = relabel(pred, map);
        std::shuffle(map.begin(), map.end(), rng);
        const auto truth2 = relabel(truth, map);
        CHECK(istsk::accuracy(truth, pred) == istsk::accuracy(truth2, pred2));
        CHECK(istsk::nmi(truth, pred) == doctest::Approx(istsk::nmi(truth2, pred2)).epsilon(1e-12));
        CHECK(istsk::accuracy(pred, pred) == 1.0);
    }
}

TEST_CASE("Hungarian assignment") {
    Eigen::MatrixXd cost(3, 3);
    cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto match = istsk::min_cost_assignment(cost);
    double total = 0;
    for (int r = 0; r < 3; ++r) total += cost(r, match[static_cast<std::size_t>(r)]);
    CHECK(total == 5.0);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 10);
    for (int t = 0; t < 50; ++t) {
        const int n = 1 + t % 6;
        Eigen::MatrixXd c(n, n);
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
        const auto m = istsk::min_cost_assignment(c);
        double got = 0;
        for (int r = 0; r < n; ++r) got += c(r, m[static_cast<std::size_t>(r)]);
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double s = 0;
            for (int r = 0; r < n; ++r) s += c(r, perm[static_cast<std::size_t>(r)]);
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(got == doctest::Approx(best));
    }
}

TEST_CASE("evaluate reports the cluster-to-class matching") {
    const auto r = istsk::evaluate({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1});
    CHECK(r.acc == 1.0);
    CHECK(r.matching == std::vector<int>{1, 2, 0});
    const auto extra = istsk::evaluate({0, 0, 1, 1}, {0, 1, 2, 2});
    CHECK(extra.matching.size() == 3);
    CHECK(std::count(extra.matching.begin(), extra.matching.end(), -1) == 1);
}

TEST_CASE("Friedman statistics") {
    SUBCASE("all ties") {
        const Eigen::MatrixXd ranks = Eigen::MatrixXd::Constant(6, 4, 2.5);
        const auto f = istsk::friedman(ranks, 2.569);
        CHECK(f.chi_sq == doctest::Approx(0.0));
        CHECK(f.f_f == doctest::Approx(0.0));
        CHECK(f.cd == doctest::Approx(2.569 * std::sqrt(4.0 * 5.0 / 36.0)));
    }
    SUBCASE("two algorithms, one always first") {
        Eigen::MatrixXd ranks(7, 2);
        ranks.col(0).setConstant(1);
        ranks.col(1).setConstant(2);
        const auto f = istsk::friedman(ranks, 1.96);
        CHECK(f.chi_sq == doctest::Approx(7.0));
        CHECK(std::isinf(f.f_f));
        CHECK(f.algorithms == 2);
        CHECK(f.datasets == 7);
    }
    SUBCASE("column reordering permutes the average ranks only") {
        std::mt19937 rng(4);
        Eigen::MatrixXd ranks(6, 5);
        for (int r = 0; r < 6; ++r) {
            std::vector<double> row{1, 2, 3, 4, 5};
            std::shuffle(row.begin(), row.end(), rng);
            for (int c = 0; c < 5; ++c) ranks(r, c) = row[static_cast<std::size_t>(c)];
        }
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
        perm.indices() << 3, 0, 4, 1, 2;
        const auto a = istsk::friedman(ranks, 2.498);
        const auto b = istsk::friedman(ranks * perm, 2.498);
        CHECK(a.chi_sq == doctest::Approx(b.chi_sq));
        CHECK(a.f_f == doctest::Approx(b.f_f));
        CHECK((b.avg_ranks.transpose() - a.avg_ranks.transpose() * perm).norm() < 1e-12);
    }
    SUBCASE("malformed rows") {
        Eigen::MatrixXd bad(2, 3);
        bad << 1, 2, 3, 1, 1, 3;
        CHECK_THROWS(istsk::friedman(bad, 2.343));
        bad << 1, 2, 3, 0, 2, 4;
        CHECK_THROWS(istsk::friedman(bad, 2.343));
        CHECK_THROWS(istsk::friedman(Eigen::MatrixXd::Ones(1, 1), 1.0));
    }
}

TEST_CASE("rounded average ranks") {
    Eigen::MatrixXd ranks(8, 2);
    ranks.col(0) << 1, 1, 1, 2, 1, 2, 1, 1;
    ranks.col(1) = (3.0 - ranks.col(0).array()).matrix();
    istsk::FriedmanOptions opt;
    opt.rank_decimals = 1;
    const auto f = istsk::friedman(ranks, 1.96, opt);
    CHECK(f.avg_ranks(0) == doctest::Approx(1.3));
    CHECK(f.avg_ranks(1) == doctest::Approx(1.8));
}

TEST_CASE("ranking rows averages ties") {
    Eigen::MatrixXd scores(3, 4);
    scores << 0.9, 0.5, 0.7, 0.5,  //
        1, 1, 1, 1,                //
        0.1, 0.2, 0.3, 0.4;
    const auto r = istsk::rank_rows(scores);
    Eigen::MatrixXd expected(3, 4);
    expected << 1, 3.5, 2, 3.5, 2.5, 2.5, 2.5, 2.5, 4, 3, 2, 1;
    CHECK((r - expected).norm() == 0.0);
    CHECK((istsk::rank_rows(scores, false).row(2) - expected.row(2).reverse()).norm() == 0.0);
}

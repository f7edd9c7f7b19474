#include <catch2/catch_amalgamated.hpp>

#include "ldt/metrics.hpp"
#include "oracles.hpp"

using namespace ldt;
using Catch::Approx;

TEST_CASE("confusion_matrix counts co-labelings") {
    const auto m = confusion_matrix({0, 0, 1}, {0, 0, 1}, 2);
    CHECK(m.counts == std::vector<std::vector<long>>{{2, 0}, {0, 1}});
    const auto swapped = confusion_matrix({0, 1}, {1, 0}, 2);
    CHECK(swapped.counts == std::vector<std::vector<long>>{{0, 1}, {1, 0}});
    CHECK_THROWS_AS(confusion_matrix({0, 1}, {0}, 2), UsageError);
    CHECK_THROWS_AS(confusion_matrix({0, 2}, {0, 0}, 2), UsageError);
}

TEST_CASE("cluster-shift scenario builds the documented confusion matrix") {
    // initial sizes 10/4/3; from cluster 0: 3 to 1 and 3 to 2; from cluster
    // 1: 2 to 0 and 1 to 2; from cluster 2: 1 to 0 and 1 to 1
    std::vector<int> before, after;
    const auto push = [&](int b, int a, int count) {
        for (int i = 0; i < count; ++i) {
            before.push_back(b);
            after.push_back(a);
        }
    };
    push(0, 0, 4);
    push(0, 1, 3);
    push(0, 2, 3);
    push(1, 0, 2);
    push(1, 1, 1);
    push(1, 2, 1);
    push(2, 0, 1);
    push(2, 1, 1);
    push(2, 2, 1);
    const auto m = confusion_matrix(before, after, 3);
    CHECK(m.counts == std::vector<std::vector<long>>{{4, 3, 3}, {2, 1, 1}, {1, 1, 1}});
    CHECK(m.n == 17);
}

TEST_CASE("permutation accuracy of the 17-county shift matrix is 6/17") {
    ConfusionMatrix m;
    m.counts = {{4, 3, 3}, {2, 1, 1}, {1, 1, 1}};
    m.n = 17;
    const auto acc = permutation_accuracy(m);
    CHECK(acc.accuracy == Approx(6.0 / 17.0));
    CHECK(acc.accuracy == Approx(0.35294).margin(5e-6));
}

TEST_CASE("permutation accuracy saturates on diagonal and anti-diagonal matrices") {
    ConfusionMatrix diag;
    diag.counts = {{5, 0, 0}, {0, 5, 0}, {0, 0, 5}};
    diag.n = 15;
    CHECK(permutation_accuracy(diag).accuracy == 1.0);

    ConfusionMatrix anti;
    anti.counts = {{0, 5}, {5, 0}};
    anti.n = 10;
    const auto acc = permutation_accuracy(anti);
    CHECK(acc.accuracy == 1.0);
    CHECK(acc.permutation == std::vector<int>{1, 0});
}

TEST_CASE("permutation accuracy is invariant under relabelings") {
    Rng rng(88);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(4, 12));
        const int k = static_cast<int>(rng.uniform_int(2, 4));
        std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (auto& v : a) v = static_cast<int>(rng.uniform_int(0, k - 1));
        for (auto& v : b) v = static_cast<int>(rng.uniform_int(0, k - 1));
        // random relabel of b
        std::vector<int> relabel(static_cast<std::size_t>(k));
        std::iota(relabel.begin(), relabel.end(), 0);
        rng.shuffle(relabel);
        auto b2 = b;
        for (auto& v : b2) v = relabel[static_cast<std::size_t>(v)];
        const double acc1 = permutation_accuracy(confusion_matrix(a, b, k)).accuracy;
        const double acc2 = permutation_accuracy(confusion_matrix(a, b2, k)).accuracy;
        CHECK(acc1 == Approx(acc2));
    }
}

TEST_CASE("permutation accuracy: DP path (k > 8) agrees with the exhaustive path") {
    Rng rng(99);
    const int k = 9;
    ConfusionMatrix m;
    m.counts.assign(k, std::vector<long>(k, 0));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            m.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                rng.uniform_int(0, 5);
            m.n += m.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    // exhaustive reference over all 9! permutations
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    long best = -1;
    do {
        long sum = 0;
        for (int i = 0; i < k; ++i)
            sum += m.counts[static_cast<std::size_t>(i)]
                           [static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        best = std::max(best, sum);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(permutation_accuracy(m).accuracy ==
          Approx(static_cast<double>(best) / static_cast<double>(m.n)));
}

TEST_CASE("ARI basics: identity, relabeling, degenerate split") {
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
    CHECK(adjusted_rand_index({0, 0, 0, 0}, {0, 1, 2, 3}) == 0.0);
    CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), UsageError);
}

TEST_CASE("ARI equals the direct pair-agreement brute force") {
    Rng rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 12));
        const int k = static_cast<int>(rng.uniform_int(1, 4));
        std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (auto& v : a) v = static_cast<int>(rng.uniform_int(0, k - 1));
        for (auto& v : b) v = static_cast<int>(rng.uniform_int(0, k - 1));
        const double mine = adjusted_rand_index(a, b);
        const double ref = oracle::ari_bruteforce(a, b);
        INFO("trial " << trial << " n=" << n << " k=" << k);
        CHECK(mine == Approx(ref).margin(1e-12));
    }
}

TEST_CASE("ARI(a, a) = 1 for any partition") {
    Rng rng(161);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 12));
        std::vector<int> a(static_cast<std::size_t>(n));
        for (auto& v : a) v = static_cast<int>(rng.uniform_int(0, 3));
        CHECK(adjusted_rand_index(a, a) == 1.0);
    }
}

TEST_CASE("cluster_stability on the 17-county scenario reports 35.3%") {
    std::map<std::string, int> t1, t2;
    int id = 0;
    const auto push = [&](int b, int a, int count) {
        for (int i = 0; i < count; ++i) {
            const std::string fips = "390" + std::to_string(10 + id);
            t1[fips] = b;
            t2[fips] = a;
            ++id;
        }
    };
    push(0, 0, 4);
    push(0, 1, 3);
    push(0, 2, 3);
    push(1, 0, 2);
    push(1, 1, 1);
    push(1, 2, 1);
    push(2, 0, 1);
    push(2, 1, 1);
    push(2, 2, 1);
    const auto rep = cluster_stability(t1, t2, 3);
    CHECK(rep.n == 17);
    CHECK(rep.accuracy == Approx(6.0 / 17.0));
    // identical labelings are perfectly stable
    const auto self = cluster_stability(t1, t1, 3);
    CHECK(self.accuracy == 1.0);
    CHECK(self.ari == 1.0);
}

TEST_CASE("cluster_stability rejects mismatched entity sets, listing them") {
    std::map<std::string, int> t1{{"39035", 0}, {"39037", 1}};
    std::map<std::string, int> t2{{"39035", 0}, {"39039", 1}};
    try {
        cluster_stability(t1, t2, 2);
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("39037") != std::string::npos);
        CHECK(msg.find("39039") != std::string::npos);
    }
}

TEST_CASE("stable-count error matches the printed table arithmetic") {
    CHECK(stable_count_error(13, 6) == Approx(7.0 / 13.0));
    CHECK(stable_count_error_percent(13, 6) == 54);
    CHECK(stable_count_error_percent(13, 7) == 46);
    CHECK(stable_count_error_percent(17, 10) == 41);
}

TEST_CASE("moving_average: constants, warm-up prefix, short window") {
    CHECK(moving_average({3, 3, 3}, 10) == std::vector<double>{3, 3, 3});
    CHECK(moving_average({0, 10}, 10) == std::vector<double>{0, 5});
    CHECK(moving_average({1, 2, 3}, 2) == std::vector<double>{1, 1.5, 2.5});
    CHECK_THROWS_AS(moving_average({1.0}, 0), ConfigError);
}

TEST_CASE("moving_average of a non-decreasing series is non-decreasing") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> xs{rng.uniform(0.0, 1.0)};
        for (int i = 0; i < 30; ++i) xs.push_back(xs.back() + rng.uniform(0.0, 1.0));
        const auto ma = moving_average(xs, static_cast<int>(rng.uniform_int(1, 12)));
        for (std::size_t i = 1; i < ma.size(); ++i) CHECK(ma[i] >= ma[i - 1] - 1e-12);
    }
}

TEST_CASE("horizon errors: a constant-memorizing model has zero error") {
    // all-zero weights with the constant baked into the output bias
    ModelConfig cfg;
    cfg.hidden_size = 4;
    cfg.input_dim = 2;
    cfg.output_dim = 2;
    auto model = LstmParams::zeros(cfg);
    const double c_inf = 0.02, c_dead = 0.001;
    model.b_out << c_inf, c_dead;

    EntityRecord entity;
    entity.fips = "39035";
    entity.series.infections.assign(70, c_inf);
    entity.series.deaths.assign(70, c_dead);

    const auto curve = horizon_errors(model, entity, 30, 30);
    REQUIRE(curve.rows.size() == 30); // H = test segment -> exactly 30 rows
    CHECK_FALSE(curve.truncated);
    for (const auto& row : curve.rows) {
        CHECK(std::abs(row.rel_err_infections) < 1e-9);
        CHECK(std::abs(row.rel_err_deaths) < 1e-9);
    }
}

TEST_CASE("horizon errors truncate to the test segment with a warning") {
    ModelConfig cfg;
    cfg.hidden_size = 2;
    cfg.input_dim = 2;
    cfg.output_dim = 2;
    const auto model = LstmParams::zeros(cfg);
    EntityRecord entity;
    entity.fips = "39035";
    entity.series.infections.assign(50, 0.1);
    entity.series.deaths.assign(50, 0.0);
    const auto curve = horizon_errors(model, entity, 45, 30);
    CHECK(curve.truncated);
    CHECK(curve.rows.size() == 30);
}

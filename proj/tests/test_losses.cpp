#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "ldt/losses.hpp"
#include "ldt/rng.hpp"

using namespace ldt;
using Catch::Approx;

TEST_CASE("mse_abs on matching sequences is zero") {
    const std::vector<double> p{1, 2}, t{1, 2};
    CHECK(mse_abs(p, t).value == 0.0);
}

TEST_CASE("mse_abs single element") {
    const std::vector<double> p{0}, t{2};
    CHECK(mse_abs(p, t).value == Approx(4.0));
}

TEST_CASE("mse_abs averages over time") {
    const std::vector<double> p{1, 3}, t{2, 2};
    CHECK(mse_abs(p, t).value == Approx(1.0));
}

TEST_CASE("mse_abs rejects mismatched lengths") {
    const std::vector<double> p{1, 2}, t{1};
    CHECK_THROWS_AS(mse_abs(p, t), ShapeError);
}

TEST_CASE("rmse_rel single element matches the relative formula") {
    const std::vector<double> p{2}, t{1};
    LossSpec spec{LossKind::rmse_rel, 1e-8, 100.0};
    CHECK(rmse_rel(p, t, spec).value == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rmse_rel is zero for an exact monotone match") {
    const std::vector<double> p{1, 2}, t{1, 2};
    CHECK(rmse_rel(p, t).value == 0.0);
}

TEST_CASE("rmse_rel hand-evaluated hinge case") {
    // relative term (0 + 0.25)/2 = 0.125; hinge 100 * 0.5 = 50
    const std::vector<double> p{1.0, 0.5}, t{1, 1};
    LossSpec spec{LossKind::rmse_rel, 1e-8, 100.0};
    CHECK(rmse_rel(p, t, spec).value == Approx(50.125).epsilon(1e-9));
}

TEST_CASE("rmse_rel stays finite on zero targets") {
    const std::vector<double> p{0.5, 0.7}, t{0.0, 0.0};
    const auto r = rmse_rel(p, t);
    CHECK(std::isfinite(r.value));
    for (const double g : r.grad) CHECK(std::isfinite(g));
}

TEST_CASE("hinge term vanishes on every non-decreasing prediction") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 12));
        std::vector<double> pred(static_cast<std::size_t>(n));
        std::vector<double> target(static_cast<std::size_t>(n));
        double acc = rng.uniform(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            acc += rng.uniform(0.0, 0.5);
            pred[static_cast<std::size_t>(i)] = acc;
            target[static_cast<std::size_t>(i)] = rng.uniform(0.1, 2.0);
        }
        LossSpec hinge_only{LossKind::rmse_rel, 1e-8, 100.0};
        LossSpec no_hinge{LossKind::rmse_rel, 1e-8, 0.0};
        CHECK(rmse_rel(pred, target, hinge_only).value ==
              Approx(rmse_rel(pred, target, no_hinge).value));
    }
}

TEST_CASE("losses are nonnegative and zero only at the exact target") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 10));
        std::vector<double> pred(static_cast<std::size_t>(n)), target(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            pred[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 3.0);
            target[static_cast<std::size_t>(i)] = rng.uniform(0.0, 3.0);
        }
        CHECK(mse_abs(pred, target).value >= 0.0);
        CHECK(rmse_rel(pred, target).value >= 0.0);
        CHECK(mse_abs(target, target).value == 0.0);
    }
}

TEST_CASE("loss gradients match central differences away from the hinge kink") {
    Rng rng(42);
    LossSpec spec{LossKind::rmse_rel, 1e-8, 100.0};
    for (int trial = 0; trial < 20; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 8));
        std::vector<double> pred(static_cast<std::size_t>(n)), target(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            pred[static_cast<std::size_t>(i)] = rng.uniform(0.5, 3.0);
            target[static_cast<std::size_t>(i)] = rng.uniform(0.5, 3.0);
        }
        for (const bool relative : {false, true}) {
            const auto eval = [&](const std::vector<double>& p) {
                return relative ? rmse_rel(p, target, spec).value : mse_abs(p, target).value;
            };
            const auto grad =
                relative ? rmse_rel(pred, target, spec).grad : mse_abs(pred, target).grad;
            for (int i = 0; i < n; ++i) {
                // skip coordinates within reach of the hinge kink
                const auto idx = static_cast<std::size_t>(i);
                const double h = 1e-6;
                if (relative) {
                    const bool near_kink =
                        (i > 0 && std::abs(pred[idx - 1] - pred[idx]) < 10 * h) ||
                        (i + 1 < n && std::abs(pred[idx] - pred[idx + 1]) < 10 * h);
                    if (near_kink) continue;
                }
                auto perturbed = pred;
                perturbed[idx] = pred[idx] + h;
                const double up = eval(perturbed);
                perturbed[idx] = pred[idx] - h;
                const double down = eval(perturbed);
                const double numeric = (up - down) / (2 * h);
                const double scale = std::max({std::abs(numeric), std::abs(grad[idx]), 1e-9});
                CHECK(std::abs(numeric - grad[idx]) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("joint scaling: mse scales by c^2, relative term is scale-free") {
    Rng rng(99);
    const double c = 10.0;
    LossSpec spec{LossKind::rmse_rel, 1e-12, 0.0};
    for (int trial = 0; trial < 20; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 10));
        std::vector<double> pred(static_cast<std::size_t>(n)), target(static_cast<std::size_t>(n));
        std::vector<double> pred_c(static_cast<std::size_t>(n)), target_c(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            pred[idx] = rng.uniform(0.5, 2.0);
            target[idx] = rng.uniform(0.5, 2.0);
            pred_c[idx] = c * pred[idx];
            target_c[idx] = c * target[idx];
        }
        CHECK(mse_abs(pred_c, target_c).value ==
              Approx(c * c * mse_abs(pred, target).value).epsilon(1e-9));
        CHECK(rmse_rel(pred_c, target_c, spec).value ==
              Approx(rmse_rel(pred, target, spec).value).epsilon(1e-6));
    }
}

TEST_CASE("loss selection by name") {
    CHECK(loss_from_name("mse_abs") == LossKind::mse_abs);
    CHECK(loss_from_name("rmse_rel") == LossKind::rmse_rel);
    CHECK_THROWS_AS(loss_from_name("huber"), ConfigError);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ldt/training.hpp"

using namespace ldt;
using Catch::Approx;

namespace {

CaseSeries logistic_series(int days, double rate, double capacity, double midpoint,
                           const std::string& fips = "39035") {
    CaseSeries s;
    s.fips = fips;
    s.population = 1.0; // already a fraction
    s.normalized = true;
    for (int t = 0; t < days; ++t) {
        const double v = capacity / (1.0 + std::exp(-rate * (t - midpoint)));
        s.infections.push_back(v);
        s.deaths.push_back(0.1 * v);
    }
    return s;
}

EntityRecord logistic_entity(int days = 50) {
    EntityRecord e;
    e.fips = "39035";
    e.series = logistic_series(days, 0.25, 0.3, 20.0);
    return e;
}

TrainRun small_run() {
    TrainRun run;
    run.config.hidden_size = 8;
    run.config.num_layers = 1;
    run.config.input_dim = 2;
    run.config.output_dim = 2;
    run.config.rng_seed = 11;
    run.loss.kind = LossKind::mse_abs;
    run.window.window_len = 7;
    run.window.offsets = {1, 3, 5};
    run.test_days = 30;
    run.budget_epochs = 60;
    return run;
}

} // namespace

TEST_CASE("make_windows sample counts") {
    WindowSpec spec;
    spec.window_len = 30;
    spec.offsets = {1, 3, 5};
    CaseSeries s = logistic_series(40, 0.2, 0.3, 20.0);
    CHECK(make_windows(s, spec).size() == 6); // 40 - 30 - 5 + 1

    WindowSpec spec7;
    spec7.window_len = 7;
    spec7.offsets = {1};
    CaseSeries s12 = logistic_series(12, 0.2, 0.3, 6.0);
    CHECK(make_windows(s12, spec7).size() == 5);
}

TEST_CASE("make_windows rejects short series, stating the minimum length") {
    WindowSpec spec;
    spec.window_len = 30;
    spec.offsets = {1, 3, 5};
    CaseSeries s = logistic_series(10, 0.2, 0.3, 5.0);
    try {
        make_windows(s, spec);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("35") != std::string::npos);
    }
}

TEST_CASE("window inputs and targets index the right days") {
    CaseSeries s;
    s.fips = "x";
    for (int t = 0; t < 12; ++t) {
        s.infections.push_back(t);        // value == day index
        s.deaths.push_back(100.0 + t);
    }
    WindowSpec spec;
    spec.window_len = 4;
    spec.offsets = {3, 1}; // unsorted on purpose
    const auto windows = make_windows(s, spec);
    REQUIRE(windows.size() == static_cast<std::size_t>(12 - 4 - 3 + 1));
    const auto& w = windows[2]; // start = 2
    CHECK(w.start == 2);
    CHECK(w.inputs.front()[0] == Approx(2));
    CHECK(w.inputs.back()[0] == Approx(5));
    REQUIRE(w.targets.size() == 2);        // ascending offsets {1, 3}
    CHECK(w.targets[0][0] == Approx(6.0)); // day 5 + 1
    CHECK(w.targets[1][0] == Approx(8.0)); // day 5 + 3
    CHECK(w.targets[1][1] == Approx(108.0));
    CHECK(w.max_target_index == 8);
}

TEST_CASE("split_train_test withholds the final test buffer") {
    const auto s100 = logistic_series(100, 0.2, 0.3, 40.0);
    const auto split = split_train_test(s100, 30);
    CHECK(split.train.days() == 70);
    CHECK(split.test.days() == 30);
    CHECK(split.test.infections.front() == Approx(s100.infections[70]));
    CHECK(to_day_number(split.test.start_date) == to_day_number(s100.start_date) + 70);

    const auto s31 = logistic_series(31, 0.2, 0.3, 10.0);
    const auto tight = split_train_test(s31, 30);
    CHECK(tight.train.days() == 1);

    const auto s30 = logistic_series(30, 0.2, 0.3, 10.0);
    CHECK_THROWS_AS(split_train_test(s30, 30), DataError);
}

TEST_CASE("no training target reaches into the test buffer") {
    const auto entity = logistic_entity(64);
    auto run = small_run();
    Trainer trainer(entity, run);
    const int train_len = static_cast<int>(entity.series.days()) - run.test_days;
    CHECK(trainer.max_target_index() < train_len);
    CHECK(trainer.max_target_index() <
          static_cast<int>(entity.series.days()) - run.test_days);
}

TEST_CASE("constant-zero series trains to (near) zero loss immediately") {
    EntityRecord e;
    e.fips = "39001";
    e.series.infections.assign(50, 0.0);
    e.series.deaths.assign(50, 0.0);
    auto run = small_run();
    run.budget_epochs = 20;
    const auto model = train_model(e, run);
    REQUIRE_FALSE(model.history.empty());
    CHECK(model.history.back().loss < 1e-10);
}

TEST_CASE("training is deterministic: identical seed, identical history") {
    const auto entity = logistic_entity();
    auto run = small_run();
    run.budget_epochs = 10;
    const auto a = train_model(entity, run);
    const auto b = train_model(entity, run);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i)
        CHECK(a.history[i].loss == b.history[i].loss); // bit-identical
    auto ra = tensor_refs(const_cast<LstmParams&>(a.params));
    auto rb = tensor_refs(const_cast<LstmParams&>(b.params));
    for (std::size_t k = 0; k < ra.size(); ++k)
        for (Eigen::Index i = 0; i < ra[k].size(); ++i)
            CHECK(ra[k].data[i] == rb[k].data[i]);
}

TEST_CASE("logistic baseline: training reduces the loss at least tenfold") {
    const auto entity = logistic_entity(50);
    auto run = small_run();
    run.budget_epochs = 200;
    const auto model = train_model(entity, run);
    REQUIRE(model.history.size() >= 2);
    CHECK_FALSE(model.aborted);
    CHECK(model.history.back().loss < model.history.front().loss / 10.0);
    for (const auto& stats : model.history) CHECK(std::isfinite(stats.loss));
}

TEST_CASE("static seeding participates in training") {
    auto entity = logistic_entity(50);
    entity.statics = Eigen::Vector3d(0.5, -0.25, 1.0);
    auto run = small_run();
    run.config.static_dim = 3;
    run.budget_epochs = 30;
    const auto model = train_model(entity, run);
    CHECK_FALSE(model.aborted);
    // the seed projection moved away from its init
    const auto fresh = init_params(run.config);
    double moved = 0.0;
    for (std::size_t l = 0; l < model.params.layers.size(); ++l)
        moved += (model.params.layers[l].w_seed - fresh.layers[l].w_seed).cwiseAbs().sum();
    CHECK(moved > 0.0);
}

TEST_CASE("a numerically exploding run aborts, retaining finite params") {
    const auto entity = logistic_entity(50);
    auto run = small_run();
    run.adam.lr = 1e300; // force an overflow inside the epoch
    run.budget_epochs = 5;
    run.clip_norm = 1e308;
    const auto model = train_model(entity, run);
    CHECK(model.aborted);
    CHECK_FALSE(model.abort_reason.empty());
    CHECK(model.params.all_finite());
}

TEST_CASE("grid search: 12 arms halve 12 -> 6 -> 3 -> 1") {
    const auto entity = logistic_entity(50);
    auto base = small_run();
    base.budget_epochs = 4;
    GridSpace space;
    space.hidden_sizes = {2, 3, 4, 5, 6, 7};
    space.layer_counts = {1, 2};
    const auto result = grid_search(entity, space, base, 8);
    CHECK(result.rung_sizes == std::vector<std::size_t>{12, 6, 3, 1});
    REQUIRE(result.ranked.size() == 12);
    CHECK(result.ranked.front().eliminated_rung == -1);

    // winner's validation loss at each rung does not exceed any arm
    // eliminated at that rung
    const auto& winner = result.ranked.front();
    for (const auto& arm : result.ranked) {
        if (arm.eliminated_rung < 0) continue;
        const auto r = static_cast<std::size_t>(arm.eliminated_rung);
        REQUIRE(r < winner.rung_val_losses.size());
        CHECK(winner.rung_val_losses[r] <= arm.rung_val_losses.back());
    }
    // and on this fixture the final winner beats every eliminated arm outright
    for (const auto& arm : result.ranked)
        if (arm.eliminated_rung >= 0) CHECK(winner.val_loss <= arm.rung_val_losses.back());
}

TEST_CASE("grid search ranking is deterministic") {
    const auto entity = logistic_entity(50);
    auto base = small_run();
    GridSpace space;
    space.hidden_sizes = {3, 5};
    space.layer_counts = {1, 2};
    const auto a = grid_search(entity, space, base, 8);
    const auto b = grid_search(entity, space, base, 8);
    REQUIRE(a.ranked.size() == b.ranked.size());
    for (std::size_t i = 0; i < a.ranked.size(); ++i) {
        CHECK(a.ranked[i].config.hidden_size == b.ranked[i].config.hidden_size);
        CHECK(a.ranked[i].config.num_layers == b.ranked[i].config.num_layers);
        CHECK(a.ranked[i].val_loss == b.ranked[i].val_loss);
    }
}

TEST_CASE("grid search with one config degenerates to a plain training run") {
    const auto entity = logistic_entity(50);
    auto base = small_run();
    GridSpace space;
    space.hidden_sizes = {6};
    space.layer_counts = {1};
    const auto result = grid_search(entity, space, base, 12);
    CHECK(result.rung_sizes == std::vector<std::size_t>{1});
    REQUIRE(result.ranked.size() == 1);

    TrainRun run = base;
    run.config.hidden_size = 6;
    run.config.num_layers = 1;
    run.config.rng_seed = derive_seed(base.config.rng_seed, "grid_arm", 0);
    run.val_fraction = 0.2;
    run.budget_epochs = 12;
    const auto direct = train_model(entity, run);
    REQUIRE(direct.history.size() == result.ranked[0].model.history.size());
    for (std::size_t i = 0; i < direct.history.size(); ++i)
        CHECK(direct.history[i].loss == result.ranked[0].model.history[i].loss);
}

TEST_CASE("grid search rejects an empty space") {
    const auto entity = logistic_entity(50);
    GridSpace space;
    space.hidden_sizes = {};
    CHECK_THROWS_AS(grid_search(entity, space, small_run(), 8), ConfigError);
}

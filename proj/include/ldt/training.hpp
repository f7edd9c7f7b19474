#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "ldt/adam.hpp"
#include "ldt/data.hpp"
#include "ldt/losses.hpp"
#include "ldt/nn.hpp"
#include "ldt/rng.hpp"

namespace ldt {

/// Sliding-window supervision: inputs cover window_len consecutive days;
/// targets are the values offset days past the window end.
struct WindowSpec {
    int window_len = 14;
    std::vector<int> offsets = {1, 3, 5};

    void validate() const {
        if (window_len < 1) throw ConfigError("window_len must be >= 1");
        if (offsets.empty()) throw ConfigError("offsets must be nonempty");
        for (const int d : offsets)
            if (d < 1) throw ConfigError("offsets must be positive");
    }

    int max_offset() const { return *std::max_element(offsets.begin(), offsets.end()); }

    /// Offsets in ascending order; the loss consumes predictions in this order.
    std::vector<int> sorted_offsets() const {
        auto v = offsets;
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
};

struct WindowSample {
    int start = 0;
    std::vector<Eigen::VectorXd> inputs;  // window_len x [infections, deaths]
    std::vector<Eigen::VectorXd> targets; // one per offset, ascending offset order
    int max_target_index = 0;             // absolute day index of the furthest target
};

/// One sample per valid start index: count = len - window_len - max_offset + 1.
inline std::vector<WindowSample> make_windows(const CaseSeries& series, const WindowSpec& spec) {
    spec.validate();
    const auto offsets = spec.sorted_offsets();
    const int len = static_cast<int>(series.days());
    const int min_len = spec.window_len + spec.max_offset();
    if (len < min_len)
        throw DataError("series too short for windows: need >= " + std::to_string(min_len) +
                        " days, have " + std::to_string(len));
    std::vector<WindowSample> samples;
    for (int start = 0; start + min_len <= len; ++start) {
        WindowSample s;
        s.start = start;
        for (int t = 0; t < spec.window_len; ++t) {
            Eigen::Vector2d x(series.infections[static_cast<std::size_t>(start + t)],
                              series.deaths[static_cast<std::size_t>(start + t)]);
            s.inputs.push_back(x);
        }
        for (const int d : offsets) {
            const int idx = start + spec.window_len - 1 + d;
            Eigen::Vector2d y(series.infections[static_cast<std::size_t>(idx)],
                              series.deaths[static_cast<std::size_t>(idx)]);
            s.targets.push_back(y);
            s.max_target_index = idx;
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

struct TrainTestSplit {
    CaseSeries train;
    CaseSeries test; // the withheld final test_days
};

/// Withhold the final test_days days from all training and window building.
inline TrainTestSplit split_train_test(const CaseSeries& series, int test_days = 30) {
    if (test_days < 1) throw ConfigError("test_days must be >= 1");
    const int len = static_cast<int>(series.days());
    if (len <= test_days)
        throw DataError("series length " + std::to_string(len) +
                        " must exceed test_days " + std::to_string(test_days));
    TrainTestSplit split;
    split.train = series;
    split.train.infections.resize(static_cast<std::size_t>(len - test_days));
    split.train.deaths.resize(static_cast<std::size_t>(len - test_days));
    split.test = series;
    split.test.infections.assign(series.infections.end() - test_days, series.infections.end());
    split.test.deaths.assign(series.deaths.end() - test_days, series.deaths.end());
    split.test.start_date = from_day_number(to_day_number(series.start_date) + len - test_days);
    return split;
}

struct TrainRun {
    ModelConfig config;
    LossSpec loss;
    WindowSpec window;
    int test_days = 30;
    int mini_batches = 3;
    int budget_epochs = 100;
    double early_stop_rel = 1e-6;
    int early_stop_patience = 5;
    double clip_norm = 5.0;
    double val_fraction = 0.0; // chronological tail of training windows held out
    AdamConfig adam;

    void validate() const {
        config.validate();
        loss.validate();
        window.validate();
        if (mini_batches < 1) throw ConfigError("mini_batches must be >= 1");
        if (budget_epochs < 1) throw ConfigError("budget_epochs must be >= 1");
        if (val_fraction < 0.0 || val_fraction >= 1.0)
            throw ConfigError("val_fraction must be in [0, 1)");
    }
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedModel {
    LstmParams params;
    std::vector<EpochStats> history;
    bool aborted = false;
    std::string abort_reason;
};

namespace detail {

/// Forward a window (seeded when the model takes statics), roll out to the
/// furthest offset, and score the offset-ordered prediction sequence per
/// channel. Optionally backpropagates into grads.
inline double window_loss(const LstmParams& params, const Eigen::VectorXd& statics,
                          const WindowSample& sample, const std::vector<int>& offsets,
                          const LossSpec& loss, LstmParams* grads) {
    const auto& cfg = params.config;
    ForwardResult fwd = cfg.static_dim > 0
                            ? lstm_forward_seeded(params, sample.inputs, statics)
                            : lstm_forward(params, sample.inputs, LstmState::zero(cfg));
    const int window_len = static_cast<int>(sample.inputs.size());
    const int max_offset = offsets.back();
    extend_autoregressive(params, fwd, max_offset - 1);

    const int channels = cfg.output_dim;
    std::vector<Eigen::VectorXd> d_out;
    if (grads) d_out.assign(fwd.outputs.size(), Eigen::VectorXd());
    double total = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
        std::vector<double> pred, target;
        for (std::size_t k = 0; k < offsets.size(); ++k) {
            const auto step = static_cast<std::size_t>(window_len - 1 + offsets[k] - 1);
            pred.push_back(fwd.outputs[step][ch]);
            target.push_back(sample.targets[k][ch]);
        }
        const auto r = evaluate_loss(loss, pred, target);
        total += r.value / channels;
        if (grads) {
            for (std::size_t k = 0; k < offsets.size(); ++k) {
                const auto step = static_cast<std::size_t>(window_len - 1 + offsets[k] - 1);
                if (d_out[step].size() == 0) d_out[step] = Eigen::VectorXd::Zero(channels);
                d_out[step][ch] += r.grad[k] / channels;
            }
        }
    }
    if (grads) {
        const auto back = backward(params, fwd.trace, d_out);
        auto acc = tensor_refs(*grads);
        auto add = tensor_refs(const_cast<LstmParams&>(back.grads));
        for (std::size_t k = 0; k < acc.size(); ++k)
            for (Eigen::Index i = 0; i < acc[k].size(); ++i) acc[k].data[i] += add[k].data[i];
    }
    return total;
}

inline void scale_params(LstmParams& p, double factor) {
    for (auto& ref : tensor_refs(p))
        for (Eigen::Index i = 0; i < ref.size(); ++i) ref.data[i] *= factor;
}

} // namespace detail

/// Incremental trainer: owns the model/optimizer state so the grid-search
/// scheduler can continue training an arm across rungs.
class Trainer {
public:
    Trainer(const EntityRecord& entity, const TrainRun& run)
        : run_(run), statics_(entity.statics) {
        run_.validate();
        if (run_.config.static_dim > 0 && statics_.size() != run_.config.static_dim)
            throw ShapeError("entity " + entity.fips + " statics length " +
                             std::to_string(statics_.size()) + " != static_dim " +
                             std::to_string(run_.config.static_dim));
        const int need = run_.window.window_len + run_.window.max_offset() + run_.test_days;
        if (static_cast<int>(entity.series.days()) < need)
            throw DataError("entity " + entity.fips + " has " +
                            std::to_string(entity.series.days()) + " days; needs >= " +
                            std::to_string(need));
        const auto split = split_train_test(entity.series, run_.test_days);
        auto windows = make_windows(split.train, run_.window);
        // never read past the train cut
        for (const auto& w : windows)
            if (w.max_target_index >= static_cast<int>(split.train.days()))
                throw UsageError("window target leaks past the train cut");
        const auto n_val = static_cast<std::size_t>(
            std::floor(run_.val_fraction * static_cast<double>(windows.size())));
        val_windows_.assign(windows.end() - static_cast<std::ptrdiff_t>(n_val), windows.end());
        windows.resize(windows.size() - n_val);
        train_windows_ = std::move(windows);
        if (train_windows_.empty()) throw DataError("no training windows left after split");

        params_ = init_params(run_.config);
        opt_ = AdamState::init(run_.config, run_.adam);
        offsets_ = run_.window.sorted_offsets();
    }

    /// Train for up to extra_epochs more epochs; stops early after
    /// early_stop_patience consecutive epochs of < early_stop_rel relative
    /// improvement. Numeric failures abort, keeping the last good params.
    void run_epochs(int extra_epochs) {
        if (aborted_) return;
        std::vector<std::size_t> order(train_windows_.size());
        std::iota(order.begin(), order.end(), 0);
        for (int e = 0; e < extra_epochs; ++e) {
            Rng rng(derive_seed(run_.config.rng_seed, "epoch", static_cast<std::uint64_t>(epochs_done_)));
            rng.shuffle(order);
            const LstmParams before = params_;
            const AdamState opt_before = opt_;
            double epoch_loss = 0.0;
            long batches = 0;
            try {
                const std::size_t n = order.size();
                const auto b = static_cast<std::size_t>(run_.mini_batches);
                for (std::size_t batch = 0; batch < b; ++batch) {
                    const std::size_t lo = batch * n / b;
                    const std::size_t hi = (batch + 1) * n / b;
                    if (lo == hi) continue;
                    LstmParams grads = LstmParams::zeros(run_.config);
                    double batch_loss = 0.0;
                    for (std::size_t k = lo; k < hi; ++k)
                        batch_loss += detail::window_loss(params_, statics_,
                                                          train_windows_[order[k]], offsets_,
                                                          run_.loss, &grads);
                    const double count = static_cast<double>(hi - lo);
                    detail::scale_params(grads, 1.0 / count);
                    clip_gradients(grads, run_.clip_norm);
                    adam_step(params_, grads, opt_);
                    epoch_loss += batch_loss / count;
                    batches += 1;
                }
            } catch (const TrainingError& err) {
                params_ = before; // retain the last good checkpoint
                opt_ = opt_before;
                aborted_ = true;
                abort_reason_ = err.what();
                return;
            } catch (const DataError& err) {
                // non-finite values escaping the net mid-epoch, same remedy
                params_ = before;
                opt_ = opt_before;
                aborted_ = true;
                abort_reason_ = err.what();
                return;
            }
            epoch_loss /= static_cast<double>(std::max<long>(batches, 1));
            if (!std::isfinite(epoch_loss)) {
                params_ = before;
                opt_ = opt_before;
                aborted_ = true;
                abort_reason_ = "non-finite epoch loss";
                return;
            }
            EpochStats stats;
            stats.epoch = epochs_done_;
            stats.loss = epoch_loss;
            if (!val_windows_.empty()) stats.val_loss = validation_loss();
            history_.push_back(stats);
            epochs_done_ += 1;

            if (have_prev_loss_) {
                const double rel = (prev_loss_ - epoch_loss) / std::max(std::abs(prev_loss_), 1e-30);
                stall_count_ = rel < run_.early_stop_rel ? stall_count_ + 1 : 0;
                if (stall_count_ >= run_.early_stop_patience) {
                    prev_loss_ = epoch_loss;
                    return;
                }
            }
            prev_loss_ = epoch_loss;
            have_prev_loss_ = true;
        }
    }

    /// Mean window loss on the held-out validation windows (training
    /// windows when no validation split was requested).
    double validation_loss() const {
        const auto& set = val_windows_.empty() ? train_windows_ : val_windows_;
        double total = 0.0;
        for (const auto& w : set)
            total += detail::window_loss(params_, statics_, w, offsets_, run_.loss, nullptr);
        return total / static_cast<double>(set.size());
    }

    TrainedModel finish() const {
        TrainedModel m;
        m.params = params_;
        m.history = history_;
        m.aborted = aborted_;
        m.abort_reason = abort_reason_;
        return m;
    }

    const LstmParams& params() const { return params_; }
    int epochs_done() const { return epochs_done_; }
    bool aborted() const { return aborted_; }
    std::size_t train_window_count() const { return train_windows_.size(); }
    std::size_t val_window_count() const { return val_windows_.size(); }

    /// Largest day index any training target touches; must stay below the
    /// train cut (no-leak invariant).
    int max_target_index() const {
        int idx = 0;
        for (const auto& w : train_windows_) idx = std::max(idx, w.max_target_index);
        for (const auto& w : val_windows_) idx = std::max(idx, w.max_target_index);
        return idx;
    }

private:
    TrainRun run_;
    Eigen::VectorXd statics_;
    std::vector<WindowSample> train_windows_;
    std::vector<WindowSample> val_windows_;
    std::vector<int> offsets_;
    LstmParams params_;
    AdamState opt_;
    std::vector<EpochStats> history_;
    int epochs_done_ = 0;
    double prev_loss_ = 0.0;
    bool have_prev_loss_ = false;
    int stall_count_ = 0;
    bool aborted_ = false;
    std::string abort_reason_;
};

/// One full training run within the configured epoch budget.
inline TrainedModel train_model(const EntityRecord& entity, const TrainRun& run) {
    Trainer trainer(entity, run);
    trainer.run_epochs(run.budget_epochs);
    return trainer.finish();
}

/// Hyperparameter grid, by default the full study grid.
struct GridSpace {
    std::vector<int> hidden_sizes = {64, 128, 256, 512};
    std::vector<int> layer_counts = {1, 2, 3};
};

struct GridArm {
    ModelConfig config;
    TrainedModel model;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    int eliminated_rung = -1; // -1 = survivor
    std::vector<double> rung_val_losses;
};

struct GridResult {
    std::vector<GridArm> ranked;     // winner first
    std::vector<std::size_t> rung_sizes; // candidate counts entering each rung, then 1
};

/// Successive halving: every arm trains budget/4 epochs at the first rung;
/// the better half (by held-out validation loss over the last 20% of
/// training windows) continues with a doubled per-rung budget until one
/// survivor remains. Ties prefer fewer parameters.
inline GridResult grid_search(const EntityRecord& entity, const GridSpace& space,
                              const TrainRun& base, int budget_epochs) {
    if (space.hidden_sizes.empty() || space.layer_counts.empty())
        throw ConfigError("grid space is empty");
    if (budget_epochs < 1) throw ConfigError("grid budget must be >= 1");

    struct Candidate {
        std::size_t index;
        ModelConfig config;
        std::unique_ptr<Trainer> trainer;
        std::size_t param_count;
        double val = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> rung_vals;
        int eliminated_rung = -1;
    };
    std::vector<Candidate> arms;
    for (const int hidden : space.hidden_sizes)
        for (const int layers : space.layer_counts) {
            Candidate c;
            c.index = arms.size();
            c.config = base.config;
            c.config.hidden_size = hidden;
            c.config.num_layers = layers;
            c.config.rng_seed = derive_seed(base.config.rng_seed, "grid_arm", c.index);
            TrainRun run = base;
            run.config = c.config;
            run.val_fraction = 0.2;
            c.trainer = std::make_unique<Trainer>(entity, run);
            c.param_count = c.trainer->params().parameter_count();
            arms.push_back(std::move(c));
        }

    GridResult result;
    std::vector<std::size_t> alive(arms.size());
    std::iota(alive.begin(), alive.end(), 0);

    if (alive.size() == 1) {
        // degenerates to a plain training run on the full budget
        arms[0].trainer->run_epochs(budget_epochs);
        arms[0].val = arms[0].trainer->validation_loss();
        arms[0].rung_vals.push_back(arms[0].val);
        result.rung_sizes = {1};
    } else {
        int rung = 0;
        int rung_epochs = std::max(1, budget_epochs / 4);
        while (alive.size() > 1) {
            result.rung_sizes.push_back(alive.size());
            for (const auto idx : alive) {
                arms[idx].trainer->run_epochs(rung_epochs);
                arms[idx].val = arms[idx].trainer->validation_loss();
                arms[idx].rung_vals.push_back(arms[idx].val);
            }
            std::sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
                const auto& ca = arms[a];
                const auto& cb = arms[b];
                if (ca.val != cb.val) return ca.val < cb.val;
                if (ca.param_count != cb.param_count) return ca.param_count < cb.param_count;
                return ca.index < cb.index;
            });
            const std::size_t survivors = std::max<std::size_t>(1, alive.size() / 2);
            for (std::size_t k = survivors; k < alive.size(); ++k)
                arms[alive[k]].eliminated_rung = rung;
            alive.resize(survivors);
            rung += 1;
            rung_epochs *= 2;
        }
        result.rung_sizes.push_back(1);
    }

    std::vector<std::size_t> order(arms.size());
    std::iota(order.begin(), order.end(), 0);
    // winner first, then later-eliminated arms, val loss breaking ties
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ca = arms[a];
        const auto& cb = arms[b];
        const int ra = ca.eliminated_rung < 0 ? std::numeric_limits<int>::max() : ca.eliminated_rung;
        const int rb = cb.eliminated_rung < 0 ? std::numeric_limits<int>::max() : cb.eliminated_rung;
        if (ra != rb) return ra > rb;
        if (ca.val != cb.val) return ca.val < cb.val;
        if (ca.param_count != cb.param_count) return ca.param_count < cb.param_count;
        return ca.index < cb.index;
    });
    for (const auto idx : order) {
        GridArm arm;
        arm.config = arms[idx].config;
        arm.model = arms[idx].trainer->finish();
        arm.val_loss = arms[idx].val;
        arm.eliminated_rung = arms[idx].eliminated_rung;
        arm.rung_val_losses = arms[idx].rung_vals;
        result.ranked.push_back(std::move(arm));
    }
    return result;
}

} // namespace ldt

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ssrnn/evaluation.hpp"
#include "ssrnn/gradients.hpp"
#include "ssrnn/model.hpp"
#include "ssrnn/policy.hpp"
#include "ssrnn/tasks.hpp"

namespace ssrnn {

enum class Regime { TeacherForcing, Dagger };

inline const char* regime_name(Regime r) {
    return r == Regime::TeacherForcing ? "teacher" : "dagger";
}

struct TrainConfig {
    int epochs = 1;
    int batch_size = 1;
    double learning_rate = 0.1;
    std::optional<double> clip_norm = 5.0;
    Regime regime = Regime::TeacherForcing;
    DecaySchedule schedule;
    std::uint64_t seed = 0;
};

inline void validate_train_config(const TrainConfig& c) {
    if (c.epochs < 0) throw Error("train config: epochs must be >= 0");
    if (c.batch_size < 1) throw Error("train config: batch_size must be >= 1");
    if (!(c.learning_rate > 0.0)) throw Error("train config: learning_rate must be positive");
    if (c.clip_norm && !(*c.clip_norm > 0.0)) throw Error("train config: clip_norm must be positive");
    validate_schedule(c.schedule);
}

struct EpochMetrics {
    int epoch = 0;
    double alpha = 1.0;
    double mean_loss = 0.0;
    double teacher_forced_accuracy = 0.0;
    double free_running_accuracy = 0.0;
    double wall_time_s = 0.0;
};

/// One scheduled-sampling traversal: at each step the fed token is
/// stochastically the true label (probability alpha) or the model's own
/// greedy prediction, while supervision stays on the true labels.
inline TraceRecord traverse_collect(const SequencePair& example, const DecaySchedule& schedule,
                                    const ModelParams& params, const ModelConfig& config, Rng& rng) {
    ActionSource mixed = [&](int t, const HiddenState& state) {
        const int true_token = reference_action(example.y, static_cast<std::size_t>(t - 1));
        const int predicted = greedy_action(state, params);
        return mixed_action(schedule, rng, true_token, predicted).first;
    };
    return forward_trace(example.x, example.y, mixed, params, config);
}

namespace detail {

inline double global_norm(const Gradients& g) {
    double sq = 0.0;
    for_each_block(g, [&sq](const char*, const std::vector<double>& block) {
        for (double v : block) sq += v * v;
    });
    return std::sqrt(sq);
}

inline void check_finite(const ModelParams& p, const char* what) {
    for_each_block(p, [&](const char* name, const std::vector<double>& block) {
        for (double v : block) {
            if (!std::isfinite(v)) {
                throw Error(std::string(what) + " contains a non-finite entry in block " + name);
            }
        }
    });
}

}  // namespace detail

/// Average the bptt gradients over one mini-batch, clip by global norm, and
/// take a single SGD step. Returns the new parameters and the mean loss.
inline std::pair<ModelParams, double> batch_update(const std::vector<SequencePair>& batch,
                                                   const DecaySchedule& schedule,
                                                   const ModelParams& params,
                                                   const ModelConfig& model_config,
                                                   const TrainConfig& train_config, Rng& rng) {
    if (batch.empty()) throw Error("batch_update: empty batch");
    Gradients grads = zeros_like(params);
    double loss_sum = 0.0;
    for (const SequencePair& example : batch) {
        const TraceRecord trace =
            train_config.regime == Regime::Dagger
                ? traverse_collect(example, schedule, params, model_config, rng)
                : forward_trace(example.x, example.y, teacher_source(example.y), params, model_config);
        const double loss = total_loss(trace);
        if (!std::isfinite(loss)) throw Error("non-finite loss");
        loss_sum += loss;
        const Gradients g = bptt(trace, params, model_config);
        auto acc = detail::block_pointers(grads);
        auto src = detail::block_pointers(g);
        for (std::size_t b = 0; b < acc.size(); ++b) {
            std::vector<double>& dst = *acc[b].second;
            const std::vector<double>& add = *src[b].second;
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += add[i];
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for_each_block(grads, [inv](const char*, std::vector<double>& block) {
        for (double& v : block) v *= inv;
    });
    detail::check_finite(grads, "gradient");

    if (train_config.clip_norm) {
        const double norm = detail::global_norm(grads);
        if (norm > *train_config.clip_norm) {
            const double scale = *train_config.clip_norm / norm;
            for_each_block(grads, [scale](const char*, std::vector<double>& block) {
                for (double& v : block) v *= scale;
            });
        }
    }

    ModelParams next = params;
    auto dst = detail::block_pointers(next);
    auto src = detail::block_pointers(grads);
    for (std::size_t b = 0; b < dst.size(); ++b) {
        std::vector<double>& p = *dst[b].second;
        const std::vector<double>& g = *src[b].second;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= train_config.learning_rate * g[i];
    }
    detail::check_finite(next, "parameter");
    return {std::move(next), loss_sum * inv};
}

/// Full training loop: per epoch, decay alpha (Dagger only), shuffle with an
/// rng derived from (seed, epoch), run every mini-batch, and record metrics.
/// The dataset is canonicalized by sorting first so its in-memory order does
/// not affect the result.
inline std::pair<ModelParams, std::vector<EpochMetrics>> train(
    const Dataset& dataset, const TrainConfig& train_config, const ModelConfig& model_config,
    const std::function<void(const EpochMetrics&)>& on_epoch = nullptr) {
    if (dataset.empty()) throw Error("train: empty dataset");
    validate_train_config(train_config);
    validate_config(model_config);

    Dataset canonical = dataset;
    std::sort(canonical.begin(), canonical.end());

    ModelParams params = init_params(model_config, train_config.seed);
    Rng policy_rng(derive_seed(train_config.seed, 0x706f6c69ULL));
    DecaySchedule schedule = train_config.schedule;
    std::vector<EpochMetrics> metrics;
    metrics.reserve(static_cast<std::size_t>(train_config.epochs));

    for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double alpha = 1.0;
        if (train_config.regime == Regime::Dagger) {
            schedule = decay_step(schedule);
            alpha = schedule.alpha;
        }

        Dataset order = canonical;
        Rng shuffle_rng(derive_seed(derive_seed(train_config.seed, 0x73687566ULL),
                                    static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        int batch_index = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(train_config.batch_size), ++batch_index) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(train_config.batch_size));
            const std::vector<SequencePair> batch(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                                  order.begin() + static_cast<std::ptrdiff_t>(end));
            try {
                auto [next, batch_loss] =
                    batch_update(batch, schedule, params, model_config, train_config, policy_rng);
                params = std::move(next);
                loss_sum += batch_loss * static_cast<double>(batch.size());
            } catch (const Error& e) {
                throw Error("epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(batch_index) + ": " + e.what());
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.alpha = alpha;
        m.mean_loss = loss_sum / static_cast<double>(order.size());
        m.teacher_forced_accuracy =
            1.0 - evaluate(canonical, params, model_config, EvalMode::TeacherForced).mean_error;
        m.free_running_accuracy =
            1.0 - evaluate(canonical, params, model_config, EvalMode::FreeRunning).mean_error;
        m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        metrics.push_back(m);
        if (on_epoch) on_epoch(m);
    }
    return {std::move(params), std::move(metrics)};
}

}  // namespace ssrnn

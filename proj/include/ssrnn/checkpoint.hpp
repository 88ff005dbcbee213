#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ssrnn/model.hpp"
#include "ssrnn/training.hpp"

namespace ssrnn {

inline constexpr int kCheckpointFormatVersion = 1;

/// Serializable training snapshot: configuration, parameters, and the seed
/// needed to reproduce the run.
struct Checkpoint {
    int format_version = kCheckpointFormatVersion;
    ModelConfig model_config;
    TrainConfig train_config;
    ModelParams params;
    std::uint64_t rng_seed = 0;
    int epoch_reached = 0;
};

namespace detail {

inline nlohmann::ordered_json model_config_json(const ModelConfig& c) {
    return {{"hidden_dim", c.hidden_dim},
            {"input_vocab", c.input_vocab},
            {"output_vocab", c.output_vocab},
            {"encoder_mode", encoder_mode_name(c.encoder_mode)},
            {"feed_input_tokens", c.feed_input_tokens}};
}

inline nlohmann::ordered_json train_config_json(const TrainConfig& c) {
    nlohmann::ordered_json j{{"regime", regime_name(c.regime)},
                             {"epochs", c.epochs},
                             {"batch_size", c.batch_size},
                             {"learning_rate", c.learning_rate},
                             {"clip_norm", nullptr},
                             {"alpha", c.schedule.alpha},
                             {"p", c.schedule.p},
                             {"alpha_min", c.schedule.alpha_min},
                             {"seed", c.seed}};
    if (c.clip_norm) j["clip_norm"] = *c.clip_norm;
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json checkpoint_json(const Checkpoint& ckpt) {
    nlohmann::ordered_json j;
    j["format_version"] = ckpt.format_version;
    j["model_config"] = detail::model_config_json(ckpt.model_config);
    j["train_config"] = detail::train_config_json(ckpt.train_config);
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for_each_block(ckpt.params, [&params](const char* name, const std::vector<double>& block) {
        params[name] = block;
    });
    j["params"] = params;
    j["rng_seed"] = ckpt.rng_seed;
    j["epoch_reached"] = ckpt.epoch_reached;
    return j;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_checkpoint: cannot open " + path + " for writing");
    out << checkpoint_json(ckpt).dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_checkpoint: cannot open " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("load_checkpoint: " + path + ": invalid JSON: " + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.format_version = j.at("format_version").get<int>();
        if (ckpt.format_version != kCheckpointFormatVersion) {
            throw Error("load_checkpoint: unsupported format_version " +
                        std::to_string(ckpt.format_version));
        }
        const auto& mc = j.at("model_config");
        ckpt.model_config.hidden_dim = mc.at("hidden_dim").get<int>();
        ckpt.model_config.input_vocab = mc.at("input_vocab").get<int>();
        ckpt.model_config.output_vocab = mc.at("output_vocab").get<int>();
        const std::string mode = mc.at("encoder_mode").get<std::string>();
        if (mode == encoder_mode_name(EncoderMode::StaticStart)) {
            ckpt.model_config.encoder_mode = EncoderMode::StaticStart;
        } else if (mode == encoder_mode_name(EncoderMode::EncodingRnn)) {
            ckpt.model_config.encoder_mode = EncoderMode::EncodingRnn;
        } else {
            throw Error("load_checkpoint: unknown encoder_mode '" + mode + "'");
        }
        ckpt.model_config.feed_input_tokens = mc.at("feed_input_tokens").get<bool>();

        const auto& tc = j.at("train_config");
        const std::string regime = tc.at("regime").get<std::string>();
        if (regime == regime_name(Regime::TeacherForcing)) {
            ckpt.train_config.regime = Regime::TeacherForcing;
        } else if (regime == regime_name(Regime::Dagger)) {
            ckpt.train_config.regime = Regime::Dagger;
        } else {
            throw Error("load_checkpoint: unknown regime '" + regime + "'");
        }
        ckpt.train_config.epochs = tc.at("epochs").get<int>();
        ckpt.train_config.batch_size = tc.at("batch_size").get<int>();
        ckpt.train_config.learning_rate = tc.at("learning_rate").get<double>();
        if (tc.at("clip_norm").is_null()) {
            ckpt.train_config.clip_norm = std::nullopt;
        } else {
            ckpt.train_config.clip_norm = tc.at("clip_norm").get<double>();
        }
        ckpt.train_config.schedule.alpha = tc.at("alpha").get<double>();
        ckpt.train_config.schedule.p = tc.at("p").get<double>();
        ckpt.train_config.schedule.alpha_min = tc.at("alpha_min").get<double>();
        ckpt.train_config.seed = tc.at("seed").get<std::uint64_t>();

        ckpt.params = make_param_shapes(ckpt.model_config);
        const auto& pj = j.at("params");
        for_each_block(ckpt.params, [&](const char* name, std::vector<double>& block) {
            const auto& arr = pj.at(name);
            if (!arr.is_array() || arr.size() != block.size()) {
                throw Error("load_checkpoint: params." + std::string(name) + " expected length " +
                            std::to_string(block.size()) + ", found " +
                            std::to_string(arr.is_array() ? arr.size() : 0));
            }
            for (std::size_t i = 0; i < block.size(); ++i) block[i] = arr[i].get<double>();
        });

        ckpt.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        ckpt.epoch_reached = j.at("epoch_reached").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("load_checkpoint: " + path + ": " + e.what());
    }
    return ckpt;
}

// ---- JSON-lines records ----

inline std::string metrics_line(const EpochMetrics& m) {
    // wall time is deliberately excluded: the metrics stream is byte-stable
    // across identical runs. Timing goes to stderr.
    nlohmann::ordered_json j{{"epoch", m.epoch},
                             {"alpha", m.alpha},
                             {"mean_loss", m.mean_loss},
                             {"tf_acc", m.teacher_forced_accuracy},
                             {"fr_acc", m.free_running_accuracy}};
    return j.dump();
}

inline std::string error_report_line(EvalMode mode, const ErrorReport& report) {
    nlohmann::ordered_json j{{"type", "error_report"},
                             {"mode", eval_mode_name(mode)},
                             {"per_step_error", report.per_step_error},
                             {"mean_error", report.mean_error},
                             {"sequence_exact_match", report.sequence_exact_match}};
    return j.dump();
}

inline std::string curve_line(const CompoundingCurve& curve) {
    nlohmann::ordered_json j{{"type", "compounding_curve"},
                             {"lengths", curve.lengths},
                             {"mean_errors", curve.mean_errors}};
    return j.dump();
}

}  // namespace ssrnn

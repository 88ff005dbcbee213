#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssrnn/numeric.hpp"
#include "ssrnn/rng.hpp"

namespace ssrnn {

/// Begin-of-sequence pseudo-action: index 0 of the output vocabulary. Fed as
/// the previous action at the first decode step; never a valid target.
inline constexpr int kBosToken = 0;

enum class EncoderMode { StaticStart, EncodingRnn };

inline const char* encoder_mode_name(EncoderMode m) {
    return m == EncoderMode::StaticStart ? "static_start" : "encoding_rnn";
}

struct ModelConfig {
    int hidden_dim = 1;
    int input_vocab = 2;
    int output_vocab = 2;
    EncoderMode encoder_mode = EncoderMode::StaticStart;
    bool feed_input_tokens = true;
};

inline void validate_config(const ModelConfig& c) {
    if (c.hidden_dim < 1) throw Error("model config: hidden_dim must be >= 1");
    if (c.input_vocab < 2) throw Error("model config: input_vocab must be >= 2");
    if (c.output_vocab < 2) throw Error("model config: output_vocab must be >= 2");
}

/// All trainable tensors. Also reused as the gradient container (gradients
/// share the parameter shapes exactly).
struct ModelParams {
    Mat w_h;       // H x H recurrent weights
    Mat e_y;       // H x V_y action embedding columns
    Mat e_x;       // H x V_x input embedding columns
    Mat w_o;       // V_y x H output head
    Vec b;         // H cell bias
    Vec b_o;       // V_y output bias
    Vec h_init;    // H trainable start state (StaticStart mode)

    struct Encoder {
        Mat w_h;   // H x H
        Mat e_x;   // H x V_x
        Vec b;     // H
    };
    std::optional<Encoder> enc;  // present in EncodingRnn mode

    bool operator==(const ModelParams& o) const {
        const bool base = w_h == o.w_h && e_y == o.e_y && e_x == o.e_x && w_o == o.w_o &&
                          b == o.b && b_o == o.b_o && h_init == o.h_init;
        if (!base || enc.has_value() != o.enc.has_value()) return false;
        if (!enc) return true;
        return enc->w_h == o.enc->w_h && enc->e_x == o.enc->e_x && enc->b == o.enc->b;
    }
};

using Gradients = ModelParams;

/// Visit every parameter array in a fixed order (also the serialization and
/// finite-difference coordinate order).
template <class F>
void for_each_block(ModelParams& p, F&& f) {
    f("w_h", p.w_h.a);
    f("e_y", p.e_y.a);
    f("e_x", p.e_x.a);
    f("b", p.b);
    f("w_o", p.w_o.a);
    f("b_o", p.b_o);
    f("h_init", p.h_init);
    if (p.enc) {
        f("enc_w_h", p.enc->w_h.a);
        f("enc_e_x", p.enc->e_x.a);
        f("enc_b", p.enc->b);
    }
}

template <class F>
void for_each_block(const ModelParams& p, F&& f) {
    f("w_h", p.w_h.a);
    f("e_y", p.e_y.a);
    f("e_x", p.e_x.a);
    f("b", p.b);
    f("w_o", p.w_o.a);
    f("b_o", p.b_o);
    f("h_init", p.h_init);
    if (p.enc) {
        f("enc_w_h", p.enc->w_h.a);
        f("enc_e_x", p.enc->e_x.a);
        f("enc_b", p.enc->b);
    }
}

inline ModelParams make_param_shapes(const ModelConfig& c) {
    validate_config(c);
    const auto h = static_cast<std::size_t>(c.hidden_dim);
    const auto vx = static_cast<std::size_t>(c.input_vocab);
    const auto vy = static_cast<std::size_t>(c.output_vocab);
    ModelParams p;
    p.w_h = Mat(h, h);
    p.e_y = Mat(h, vy);
    p.e_x = Mat(h, vx);
    p.w_o = Mat(vy, h);
    p.b = Vec(h, 0.0);
    p.b_o = Vec(vy, 0.0);
    p.h_init = Vec(h, 0.0);
    if (c.encoder_mode == EncoderMode::EncodingRnn) {
        p.enc = ModelParams::Encoder{Mat(h, h), Mat(h, vx), Vec(h, 0.0)};
    }
    return p;
}

inline Gradients zeros_like(const ModelParams& p) {
    Gradients g = p;
    for_each_block(g, [](const char*, std::vector<double>& block) {
        std::fill(block.begin(), block.end(), 0.0);
    });
    return g;
}

/// Weights i.i.d. uniform on [-r, r] with r = 1/sqrt(H); biases and the start
/// state zero. Deterministic given the seed.
inline ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p = make_param_shapes(config);
    Rng rng(seed);
    const double r = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
    auto fill = [&](Mat& m) {
        for (double& w : m.a) w = rng.uniform(-r, r);
    };
    fill(p.w_h);
    fill(p.e_y);
    fill(p.e_x);
    fill(p.w_o);
    if (p.enc) {
        fill(p.enc->w_h);
        fill(p.enc->e_x);
    }
    return p;
}

/// Point in the continuous search space R^H, tagged with its time index.
struct HiddenState {
    Vec h;
    int t = 0;
};

inline void check_input_token(int tok, const ModelConfig& c, std::size_t position) {
    if (tok < 0 || tok >= c.input_vocab) {
        throw Error("input token " + std::to_string(tok) + " at position " + std::to_string(position) +
                    " out of vocabulary [0, " + std::to_string(c.input_vocab) + ")");
    }
}

/// Full encoder chain h^e_0 .. h^e_K over the input sequence, starting from
/// the zero state. EncodingRnn mode only.
inline std::vector<Vec> encoder_states(const std::vector<int>& x, const ModelParams& params,
                                       const ModelConfig& config) {
    if (!params.enc) throw Error("encoder_states: encoder parameters missing in encoding_rnn mode");
    std::vector<Vec> chain;
    chain.reserve(x.size() + 1);
    chain.emplace_back(static_cast<std::size_t>(config.hidden_dim), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        check_input_token(x[k], config, k);
        Vec z = matvec(params.enc->w_h, chain.back());
        add_inplace(z, column(params.enc->e_x, static_cast<std::size_t>(x[k])));
        add_inplace(z, params.enc->b);
        for (double& v : z) v = std::tanh(v);
        chain.push_back(std::move(z));
    }
    return chain;
}

/// Start state h_0. StaticStart returns the trainable start vector; the
/// input is consumed per step instead. EncodingRnn folds the whole input
/// sequence through the encoder cell from the zero state.
inline HiddenState encode_start(const std::vector<int>& x, const ModelParams& params,
                                const ModelConfig& config) {
    if (config.encoder_mode == EncoderMode::StaticStart) {
        return HiddenState{params.h_init, 0};
    }
    return HiddenState{encoder_states(x, params, config).back(), 0};
}

/// One transition: h_t = tanh(W_h h_{t-1} + E_y[y_prev] + E_x[x_t] + b),
/// the E_x term present only when the config feeds input tokens.
inline HiddenState cell_step(const HiddenState& prev, int y_prev, std::optional<int> x_t,
                             const ModelParams& params, const ModelConfig& config) {
    if (y_prev < 0 || y_prev >= config.output_vocab) {
        throw Error("cell_step: action token " + std::to_string(y_prev) + " out of vocabulary [0, " +
                    std::to_string(config.output_vocab) + ")");
    }
    Vec z = matvec(params.w_h, prev.h);
    add_inplace(z, column(params.e_y, static_cast<std::size_t>(y_prev)));
    if (config.feed_input_tokens) {
        if (!x_t) throw Error("cell_step: input token required when feed_input_tokens is set");
        check_input_token(*x_t, config, static_cast<std::size_t>(prev.t));
        add_inplace(z, column(params.e_x, static_cast<std::size_t>(*x_t)));
    }
    add_inplace(z, params.b);
    for (double& v : z) v = std::tanh(v);
    return HiddenState{std::move(z), prev.t + 1};
}

inline Vec output_logits(const HiddenState& state, const ModelParams& params) {
    Vec z = matvec(params.w_o, state.h);
    add_inplace(z, params.b_o);
    return z;
}

/// softmax(W_o h + b_o)
inline Vec output_distribution(const HiddenState& state, const ModelParams& params) {
    return softmax_stable(output_logits(state, params));
}

/// Greedy inference. Softmax is monotone, so the argmax is taken over the
/// logits directly.
inline int greedy_action(const HiddenState& state, const ModelParams& params) {
    return static_cast<int>(argmax_tiebreak(output_logits(state, params)));
}

}  // namespace ssrnn

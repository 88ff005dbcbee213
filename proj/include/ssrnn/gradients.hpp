#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ssrnn/model.hpp"
#include "ssrnn/numeric.hpp"
#include "ssrnn/policy.hpp"
#include "ssrnn/rng.hpp"

namespace ssrnn {

/// Full forward trajectory of one example: everything needed to run exact
/// backpropagation through time and to audit which tokens were fed.
///
/// Time alignment: states holds h_0..h_T; fed_actions[k] (with
/// fed_actions[0] = BOS) is the action that produced states[k+1];
/// distributions[k] is the output distribution at states[k+1] and is
/// supervised by targets[k]. Predicted tokens only ever select the state
/// trajectory; the supervision labels are always the true targets.
struct TraceRecord {
    std::vector<Vec> states;
    std::vector<int> fed_actions;
    std::vector<int> fed_inputs;      // input tokens consumed per step (feed_input_tokens only)
    std::vector<Vec> distributions;
    std::vector<int> targets;
    std::vector<Vec> enc_states;      // encoder chain h^e_0..h^e_K (EncodingRnn only)
    std::vector<int> enc_inputs;      // tokens consumed by the encoder (EncodingRnn only)
};

/// Chooses the action fed after step t; called with t in [1, T) and the
/// just-computed state h_t. The action before step 1 is always BOS.
using ActionSource = std::function<int(int t, const HiddenState& state)>;

/// Action source that replays a frozen fed-action list (index 0 is BOS).
inline ActionSource replay_source(const std::vector<int>& actions) {
    return [&actions](int t, const HiddenState&) { return actions[static_cast<std::size_t>(t)]; };
}

/// Teacher-forcing source: the true previous label.
inline ActionSource teacher_source(const std::vector<int>& targets) {
    return [&targets](int t, const HiddenState&) {
        return reference_action(targets, static_cast<std::size_t>(t - 1));
    };
}

/// Greedy source: the model's own prediction at the current state.
inline ActionSource greedy_source(const ModelParams& params) {
    return [&params](int, const HiddenState& s) { return greedy_action(s, params); };
}

/// Run the model forward over one example, recording the complete trace.
/// The action source decides what gets fed; the loss targets are always y.
inline TraceRecord forward_trace(const std::vector<int>& x, const std::vector<int>& y,
                                 const ActionSource& source, const ModelParams& params,
                                 const ModelConfig& config) {
    if (config.feed_input_tokens && x.size() != y.size()) {
        throw Error("forward_trace: transducer mode requires equal lengths, got input length " +
                    std::to_string(x.size()) + " and target length " + std::to_string(y.size()));
    }
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] < 0 || y[k] >= config.output_vocab) {
            throw Error("forward_trace: target token " + std::to_string(y[k]) + " at position " +
                        std::to_string(k) + " out of vocabulary [0, " +
                        std::to_string(config.output_vocab) + ")");
        }
    }

    TraceRecord trace;
    trace.targets = y;
    const auto T = static_cast<int>(y.size());

    HiddenState state;
    if (config.encoder_mode == EncoderMode::EncodingRnn) {
        trace.enc_states = encoder_states(x, params, config);
        trace.enc_inputs = x;
        state = HiddenState{trace.enc_states.back(), 0};
    } else {
        state = encode_start(x, params, config);
    }
    trace.states.push_back(state.h);

    int action = kBosToken;
    for (int t = 1; t <= T; ++t) {
        trace.fed_actions.push_back(action);
        std::optional<int> x_t;
        if (config.feed_input_tokens) {
            x_t = x[static_cast<std::size_t>(t - 1)];
            trace.fed_inputs.push_back(*x_t);
        }
        state = cell_step(state, action, x_t, params, config);
        trace.states.push_back(state.h);
        trace.distributions.push_back(output_distribution(state, params));
        if (t < T) action = source(t, state);
    }
    return trace;
}

/// Sum of per-step negative log-likelihoods of the true targets.
inline double total_loss(const TraceRecord& trace) {
    if (trace.distributions.size() != trace.targets.size()) {
        throw Error("total_loss: trace has " + std::to_string(trace.distributions.size()) +
                    " distributions for " + std::to_string(trace.targets.size()) + " targets");
    }
    double loss = 0.0;
    for (std::size_t k = 0; k < trace.targets.size(); ++k) {
        loss += cross_entropy(trace.distributions[k], static_cast<std::size_t>(trace.targets[k]));
    }
    return loss;
}

/// Exact reverse-mode derivatives of total_loss with respect to every
/// parameter. Gradients never flow through the discrete fed actions; the
/// argmax that picked a predicted token is a constant. In EncodingRnn mode
/// the start-state gradient flows on into the encoder parameters.
inline Gradients bptt(const TraceRecord& trace, const ModelParams& params,
                      const ModelConfig& config) {
    const std::size_t T = trace.targets.size();
    if (trace.states.size() != T + 1 || trace.fed_actions.size() != T ||
        trace.distributions.size() != T) {
        throw Error("bptt: inconsistent trace (" + std::to_string(trace.states.size()) + " states, " +
                    std::to_string(trace.fed_actions.size()) + " fed actions, " +
                    std::to_string(trace.distributions.size()) + " distributions for " +
                    std::to_string(T) + " targets)");
    }
    if (config.feed_input_tokens && trace.fed_inputs.size() != T) {
        throw Error("bptt: trace records " + std::to_string(trace.fed_inputs.size()) +
                    " fed inputs for " + std::to_string(T) + " steps");
    }
    const auto H = static_cast<std::size_t>(config.hidden_dim);
    for (const Vec& h : trace.states) {
        if (h.size() != H) {
            throw Error("bptt: trace state dimension " + std::to_string(h.size()) +
                        " does not match hidden_dim " + std::to_string(H));
        }
    }

    Gradients g = zeros_like(params);
    Vec carry(H, 0.0);  // dL/dh_t for the step below

    for (std::size_t t = T; t >= 1; --t) {
        const Vec& h_t = trace.states[t];
        const Vec& h_prev = trace.states[t - 1];

        // Softmax + cross-entropy head: dlogits = probs - onehot(target).
        Vec dlogits = trace.distributions[t - 1];
        dlogits[static_cast<std::size_t>(trace.targets[t - 1])] -= 1.0;

        add_outer(g.w_o, dlogits, h_t);
        add_inplace(g.b_o, dlogits);

        Vec dh = matvec_transpose(params.w_o, dlogits);
        add_inplace(dh, carry);

        // Through the tanh cell.
        Vec dz(H);
        for (std::size_t i = 0; i < H; ++i) dz[i] = dh[i] * (1.0 - h_t[i] * h_t[i]);

        add_outer(g.w_h, dz, h_prev);
        add_inplace(g.b, dz);
        const auto fed = static_cast<std::size_t>(trace.fed_actions[t - 1]);
        for (std::size_t i = 0; i < H; ++i) g.e_y(i, fed) += dz[i];
        if (config.feed_input_tokens) {
            const auto xin = static_cast<std::size_t>(trace.fed_inputs[t - 1]);
            for (std::size_t i = 0; i < H; ++i) g.e_x(i, xin) += dz[i];
        }
        carry = matvec_transpose(params.w_h, dz);
    }

    // carry now holds dL/dh_0.
    if (config.encoder_mode == EncoderMode::StaticStart) {
        add_inplace(g.h_init, carry);
    } else {
        if (!g.enc || !params.enc) throw Error("bptt: encoder parameters missing");
        const std::size_t K = trace.enc_inputs.size();
        if (trace.enc_states.size() != K + 1) {
            throw Error("bptt: encoder trace records " + std::to_string(trace.enc_states.size()) +
                        " states for " + std::to_string(K) + " inputs");
        }
        for (std::size_t k = K; k >= 1; --k) {
            const Vec& e_k = trace.enc_states[k];
            Vec dz(H);
            for (std::size_t i = 0; i < H; ++i) dz[i] = carry[i] * (1.0 - e_k[i] * e_k[i]);
            add_outer(g.enc->w_h, dz, trace.enc_states[k - 1]);
            add_inplace(g.enc->b, dz);
            const auto xin = static_cast<std::size_t>(trace.enc_inputs[k - 1]);
            for (std::size_t i = 0; i < H; ++i) g.enc->e_x(i, xin) += dz[i];
            carry = matvec_transpose(params.enc->w_h, dz);
        }
    }
    return g;
}

namespace detail {

inline std::vector<std::pair<const char*, std::vector<double>*>> block_pointers(ModelParams& p) {
    std::vector<std::pair<const char*, std::vector<double>*>> out;
    for_each_block(p, [&out](const char* name, std::vector<double>& block) {
        out.emplace_back(name, &block);
    });
    return out;
}

inline std::vector<std::pair<const char*, const std::vector<double>*>> block_pointers(
    const ModelParams& p) {
    std::vector<std::pair<const char*, const std::vector<double>*>> out;
    for_each_block(p, [&out](const char* name, const std::vector<double>& block) {
        out.emplace_back(name, &block);
    });
    return out;
}

}  // namespace detail

/// Central-difference gradient oracle. The fed-action list is frozen so that
/// both perturbed losses traverse identical discrete choices and the loss is
/// continuous in theta.
inline Gradients finite_diff_grad(const std::vector<int>& x, const std::vector<int>& y,
                                  const std::vector<int>& frozen_actions, const ModelParams& params,
                                  const ModelConfig& config, double epsilon = 1e-5) {
    if (!(epsilon > 0.0)) throw Error("finite_diff_grad: epsilon must be positive");
    ModelParams work = params;
    Gradients grads = zeros_like(params);
    auto loss_at = [&]() {
        return total_loss(forward_trace(x, y, replay_source(frozen_actions), work, config));
    };
    auto work_blocks = detail::block_pointers(work);
    auto grad_blocks = detail::block_pointers(grads);
    for (std::size_t b = 0; b < work_blocks.size(); ++b) {
        std::vector<double>& w = *work_blocks[b].second;
        std::vector<double>& g = *grad_blocks[b].second;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w[i];
            w[i] = saved + epsilon;
            const double plus = loss_at();
            w[i] = saved - epsilon;
            const double minus = loss_at();
            w[i] = saved;
            g[i] = (plus - minus) / (2.0 * epsilon);
        }
    }
    return grads;
}

struct GradCheckBlock {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    ModelConfig config;
    int seq_len = 0;
    double epsilon = 0.0;
    double tolerance = 0.0;
    std::vector<GradCheckBlock> blocks;
    double max_rel_error = 0.0;
    bool pass = false;
};

/// Relative error with a floor in the denominator so near-zero pairs do not
/// blow up.
inline double rel_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

/// Sample a random small model and example, run bptt against the
/// finite-difference oracle, and report the per-block max relative error.
inline GradCheckReport grad_check(const ModelConfig& config, std::uint64_t seed, double tolerance,
                                  double epsilon = 1e-5, int max_seq_len = 7) {
    if (!(tolerance > 0.0)) throw Error("grad_check: tolerance must be positive");
    validate_config(config);
    Rng rng(seed);

    // Randomize every block (including biases and the start state) so the
    // check point has no structurally-zero coordinates.
    ModelParams params = make_param_shapes(config);
    const double r = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
    for_each_block(params, [&](const char*, std::vector<double>& block) {
        for (double& w : block) w = rng.uniform(-r, r);
    });

    const int T = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_seq_len)));
    std::vector<int> x(static_cast<std::size_t>(T));
    std::vector<int> y(static_cast<std::size_t>(T));
    std::vector<int> actions(static_cast<std::size_t>(T));
    for (int& tok : x) tok = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(config.input_vocab)));
    for (int& tok : y) {
        tok = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(config.output_vocab - 1)));
    }
    actions[0] = kBosToken;
    for (std::size_t k = 1; k < actions.size(); ++k) {
        actions[k] = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(config.output_vocab)));
    }

    const TraceRecord trace = forward_trace(x, y, replay_source(actions), params, config);
    const Gradients analytic = bptt(trace, params, config);
    const Gradients numeric = finite_diff_grad(x, y, actions, params, config, epsilon);

    GradCheckReport report;
    report.config = config;
    report.seq_len = T;
    report.epsilon = epsilon;
    report.tolerance = tolerance;
    auto a_blocks = detail::block_pointers(analytic);
    auto n_blocks = detail::block_pointers(numeric);
    for (std::size_t b = 0; b < a_blocks.size(); ++b) {
        GradCheckBlock entry;
        entry.name = a_blocks[b].first;
        const std::vector<double>& ga = *a_blocks[b].second;
        const std::vector<double>& gn = *n_blocks[b].second;
        for (std::size_t i = 0; i < ga.size(); ++i) {
            entry.max_rel_error = std::max(entry.max_rel_error, rel_error(ga[i], gn[i]));
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.blocks.push_back(std::move(entry));
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace ssrnn

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ssrnn/gradients.hpp"
#include "ssrnn/model.hpp"
#include "ssrnn/tasks.hpp"

namespace ssrnn {

enum class EvalMode { TeacherForced, FreeRunning };

inline const char* eval_mode_name(EvalMode m) {
    return m == EvalMode::TeacherForced ? "teacher_forced" : "free_running";
}

/// Per-position token error rates over a dataset.
struct ErrorReport {
    Vec per_step_error;
    double mean_error = 0.0;
    double sequence_exact_match = 0.0;
};

/// Mean free-running error as a function of sequence length.
struct CompoundingCurve {
    std::vector<int> lengths;
    Vec mean_errors;
};

/// Free-running decode result. tokens[k] is the prediction for target
/// position k; states holds the visited trajectory h_0..h_T.
struct FreeRunTrace {
    std::vector<int> tokens;
    std::vector<Vec> states;
};

/// Decode T steps under the learned policy alone: BOS at the first step,
/// then the model's own previous prediction. No true label is consulted.
inline FreeRunTrace free_run_decode(const std::vector<int>& x, const ModelParams& params,
                                    const ModelConfig& config, int T) {
    if (T < 0) throw Error("free_run_decode: T must be >= 0");
    if (config.feed_input_tokens && static_cast<int>(x.size()) < T) {
        throw Error("free_run_decode: need " + std::to_string(T) + " input tokens, got " +
                    std::to_string(x.size()));
    }
    FreeRunTrace out;
    HiddenState state = encode_start(x, params, config);
    out.states.push_back(state.h);
    int fed = kBosToken;
    for (int t = 1; t <= T; ++t) {
        std::optional<int> x_t;
        if (config.feed_input_tokens) x_t = x[static_cast<std::size_t>(t - 1)];
        state = cell_step(state, fed, x_t, params, config);
        out.states.push_back(state.h);
        fed = greedy_action(state, params);
        out.tokens.push_back(fed);
    }
    return out;
}

/// Per-position token error across a dataset. TeacherForced feeds true
/// previous labels; FreeRunning feeds the model's own predictions.
inline ErrorReport evaluate(const Dataset& dataset, const ModelParams& params,
                            const ModelConfig& config, EvalMode mode) {
    if (dataset.empty()) throw Error("evaluate: empty dataset");

    std::vector<long> wrong;
    std::vector<long> total;
    long exact = 0;
    for (const SequencePair& ex : dataset) {
        std::vector<int> predictions;
        if (mode == EvalMode::TeacherForced) {
            const TraceRecord trace =
                forward_trace(ex.x, ex.y, teacher_source(ex.y), params, config);
            predictions.reserve(trace.distributions.size());
            for (const Vec& dist : trace.distributions) {
                predictions.push_back(static_cast<int>(argmax_tiebreak(dist)));
            }
        } else {
            predictions =
                free_run_decode(ex.x, params, config, static_cast<int>(ex.y.size())).tokens;
        }
        if (ex.y.size() > total.size()) {
            wrong.resize(ex.y.size(), 0);
            total.resize(ex.y.size(), 0);
        }
        bool all_match = true;
        for (std::size_t t = 0; t < ex.y.size(); ++t) {
            ++total[t];
            if (predictions[t] != ex.y[t]) {
                ++wrong[t];
                all_match = false;
            }
        }
        if (all_match) ++exact;
    }

    ErrorReport report;
    report.per_step_error.resize(total.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < total.size(); ++t) {
        report.per_step_error[t] = static_cast<double>(wrong[t]) / static_cast<double>(total[t]);
        sum += report.per_step_error[t];
    }
    report.mean_error = total.empty() ? 0.0 : sum / static_cast<double>(total.size());
    report.sequence_exact_match = static_cast<double>(exact) / static_cast<double>(dataset.size());
    return report;
}

/// Free-running mean error at each requested length, on fresh eval sets
/// generated from the task template (same seed family, same example count).
inline CompoundingCurve compounding_curve(const ModelParams& params, const ModelConfig& config,
                                          const TaskSpec& task_template,
                                          const std::vector<int>& lengths) {
    if (lengths.empty()) throw Error("compounding_curve: no lengths given");
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const int min_len = task_template.kind == TaskKind::DelayedEcho ? task_template.delay + 1 : 1;
        if (lengths[i] < min_len) {
            throw Error("compounding_curve: length " + std::to_string(lengths[i]) +
                        " below the task minimum " + std::to_string(min_len));
        }
        if (i > 0 && lengths[i] <= lengths[i - 1]) {
            throw Error("compounding_curve: lengths must be strictly increasing");
        }
    }
    CompoundingCurve curve;
    curve.lengths = lengths;
    for (int len : lengths) {
        TaskSpec spec = task_template;
        spec.length = len;
        const Dataset eval_set = generate_dataset(spec);
        curve.mean_errors.push_back(evaluate(eval_set, params, config, EvalMode::FreeRunning).mean_error);
    }
    return curve;
}

/// Cosine similarity between two states; a zero vector on either side yields 0.
inline double state_similarity(const HiddenState& a, const HiddenState& b) {
    if (a.h.size() != b.h.size()) {
        throw Error("state_similarity: dimension mismatch, " + std::to_string(a.h.size()) +
                    " vs " + std::to_string(b.h.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.h.size(); ++i) {
        dot += a.h[i] * b.h[i];
        na += a.h[i] * a.h[i];
        nb += b.h[i] * b.h[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace ssrnn

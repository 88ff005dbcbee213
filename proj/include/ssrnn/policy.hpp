#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ssrnn/numeric.hpp"
#include "ssrnn/rng.hpp"

namespace ssrnn {

/// Probability alpha of feeding the true label, decaying multiplicatively by
/// p each epoch and floored at alpha_min.
struct DecaySchedule {
    double alpha = 1.0;
    double p = 1.0;
    double alpha_min = 0.0;
};

inline void validate_schedule(const DecaySchedule& s) {
    if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) {
        throw Error("decay schedule: alpha must lie in [0, 1], got " + std::to_string(s.alpha));
    }
    if (!(s.p > 0.0 && s.p <= 1.0)) {
        throw Error("decay schedule: p must lie in (0, 1], got " + std::to_string(s.p));
    }
    if (!(s.alpha_min >= 0.0 && s.alpha_min <= s.alpha)) {
        throw Error("decay schedule: alpha_min must lie in [0, alpha], got " +
                    std::to_string(s.alpha_min));
    }
}

/// Audit record of one stochastic policy choice.
struct PolicyMixDraw {
    double beta = 0.0;
    bool chose_true = false;
};

/// The reference policy: always the true label at step t.
inline int reference_action(const std::vector<int>& targets, std::size_t t) {
    if (t >= targets.size()) {
        throw Error("reference_action: step " + std::to_string(t) +
                    " out of range for target sequence of length " + std::to_string(targets.size()));
    }
    return targets[t];
}

/// Draw beta uniform on [0, 1); feed the true token iff beta < alpha.
inline std::pair<int, PolicyMixDraw> mixed_action(const DecaySchedule& schedule, Rng& rng,
                                                  int true_token, int predicted_token) {
    PolicyMixDraw draw;
    draw.beta = rng.uniform();
    draw.chose_true = draw.beta < schedule.alpha;
    return {draw.chose_true ? true_token : predicted_token, draw};
}

/// alpha' = max(alpha * p, alpha_min)
inline DecaySchedule decay_step(const DecaySchedule& schedule) {
    validate_schedule(schedule);
    DecaySchedule next = schedule;
    next.alpha = std::max(schedule.alpha * schedule.p, schedule.alpha_min);
    return next;
}

/// The decay factor that maps alpha_start to alpha_end in `epochs` steps.
inline double solve_decay_factor(double alpha_start, double alpha_end, int epochs) {
    if (!(alpha_end > 0.0 && alpha_end < alpha_start && alpha_start <= 1.0)) {
        throw Error("solve_decay_factor: need 0 < alpha_end < alpha_start <= 1, got alpha_start " +
                    std::to_string(alpha_start) + ", alpha_end " + std::to_string(alpha_end));
    }
    if (epochs < 1) {
        throw Error("solve_decay_factor: epochs must be >= 1, got " + std::to_string(epochs));
    }
    return std::pow(alpha_end / alpha_start, 1.0 / static_cast<double>(epochs));
}

}  // namespace ssrnn

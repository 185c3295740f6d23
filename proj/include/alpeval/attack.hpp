#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alpeval/errors.hpp"
#include "alpeval/io.hpp"
#include "alpeval/network.hpp"
#include "alpeval/rng.hpp"
#include "alpeval/tensor.hpp"

namespace alpeval {

// PGD attack engine under the L-inf threat model. Untargeted attacks ascend
// the true-class cross-entropy; targeted attacks descend the target-class
// cross-entropy. Runs for up to max_steps signed-gradient steps or until the
// best objective has stopped improving.

enum class AttackMode { targeted, untargeted };

inline std::string to_string(AttackMode m) {
    return m == AttackMode::targeted ? "targeted" : "untargeted";
}

struct AttackConfig {
    double epsilon = 0.0;  // L-inf radius in [0,1]
    double alpha = 0.0;    // step size; 0 selects the default epsilon/10
    std::size_t max_steps = 1000;
    bool random_start = false;
    double convergence_tol = 1e-6;
    std::size_t convergence_window = 20;
    std::uint64_t seed = 0;

    double resolved_alpha() const { return alpha > 0.0 ? alpha : epsilon / 10.0; }

    void validate() const {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw ValidationError("attack: epsilon must be in [0,1]");
        if (alpha < 0.0) throw ValidationError("attack: alpha must be >= 0");
        if (epsilon > 0.0 && resolved_alpha() > 2.0 * epsilon)
            throw ValidationError("attack: alpha exceeds the ball diameter 2*epsilon");
        if (max_steps > 100000)
            throw ValidationError("attack: max_steps must be <= 100000");
        if (convergence_tol < 0.0)
            throw ValidationError("attack: convergence_tol must be >= 0");
        if (convergence_window < 1)
            throw ValidationError("attack: convergence_window must be >= 1");
    }
};

struct AttackResult {
    Tensor x_adv;
    bool success = false;
    std::size_t steps_taken = 0;
    std::optional<std::size_t> first_success_step;
    // Objective value at every iterate, starting with the start point, so the
    // length is steps_taken + 1. Targeted runs record -log P(target class),
    // untargeted runs -log P(true class).
    std::vector<double> loss_trajectory;
    std::vector<bool> success_trajectory;
    // True when any iterate was classified differently from the true label;
    // for targeted attacks this is weaker than success.
    bool any_misclassified = false;
    AttackMode mode = AttackMode::untargeted;
    std::size_t target = 0;  // meaningful only in targeted mode
    double best_objective = 0.0;
};

/// Componentwise clamp of x_cand into [x_orig - eps, x_orig + eps] and [0,1].
inline Tensor project_linf(const Tensor& x_cand, const Tensor& x_orig, double epsilon) {
    if (!x_cand.same_shape(x_orig))
        throw ValidationError("project_linf: shape mismatch");
    Tensor out = x_cand;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double lo = std::max(0.0, x_orig[i] - epsilon);
        const double hi = std::min(1.0, x_orig[i] + epsilon);
        out[i] = std::clamp(out[i], lo, hi);
    }
    return out;
}

namespace detail {

inline void check_attack_example(const Parameters& params, const Example& ex) {
    check_input(params.spec, ex.x);
    if (ex.label >= params.spec.num_classes)
        throw ValidationError("attack: example label out of range");
    if (!in_unit_box(ex.x))
        throw ValidationError("attack: example input outside [0,1]");
}

/// Shared PGD loop. `loss_label` is the class whose cross-entropy defines the
/// objective (true label when untargeted, target class when targeted).
/// Targeted runs keep descending after first success; the returned x_adv is
/// the lowest-objective successful iterate when any iterate succeeded, so a
/// warm start at a larger radius begins from a certified success. Untargeted
/// runs return the highest-loss iterate.
inline AttackResult run_pgd(const Parameters& params, const Example& ex,
                            std::size_t loss_label, AttackMode mode,
                            const AttackConfig& cfg, const Tensor* warm_start) {
    cfg.validate();
    check_attack_example(params, ex);
    const bool targeted = mode == AttackMode::targeted;
    const double alpha = cfg.resolved_alpha();

    Tensor x = ex.x;
    if (warm_start) {
        x = project_linf(*warm_start, ex.x, cfg.epsilon);
    } else if (cfg.random_start && cfg.epsilon > 0.0) {
        Rng rng(derive_seed(cfg.seed, Stream::attack_start));
        for (double& v : x.data) v += rng.uniform(-cfg.epsilon, cfg.epsilon);
        x = project_linf(x, ex.x, cfg.epsilon);
    }

    AttackResult res;
    res.mode = mode;
    if (targeted) res.target = loss_label;

    Tensor best_x = x;
    double best_obj = 0.0;
    Tensor best_success_x = x;
    double best_success_obj = 0.0;
    std::size_t flat_steps = 0;

    for (std::size_t step = 0;; ++step) {
        const ForwardTrace trace = forward_trace(params, x);
        const double obj = loss_xent(trace.logits, loss_label);
        std::size_t pred = 0;
        for (std::size_t i = 1; i < trace.logits.size(); ++i)
            if (trace.logits[i] > trace.logits[pred]) pred = i;
        const bool succ = targeted ? pred == loss_label : pred != ex.label;

        res.loss_trajectory.push_back(obj);
        res.success_trajectory.push_back(succ);
        if (pred != ex.label) res.any_misclassified = true;
        if (succ && !res.first_success_step) res.first_success_step = step;
        if (succ && (!res.success || obj < best_success_obj)) {
            best_success_x = x;
            best_success_obj = obj;
        }
        res.success = res.success || succ;

        const bool improved = step == 0 || (targeted ? best_obj - obj >= cfg.convergence_tol
                                                     : obj - best_obj >= cfg.convergence_tol);
        if (step == 0 || (targeted ? obj < best_obj : obj > best_obj)) {
            best_x = x;
            best_obj = obj;
        }
        if (step > 0) flat_steps = improved ? 0 : flat_steps + 1;

        res.steps_taken = step;
        if (step >= cfg.max_steps) break;
        if (flat_steps >= cfg.convergence_window) break;

        const Tensor grad =
            backward(params, trace, xent_grad_logits(trace.logits, loss_label)).input;
        const double dir = targeted ? -alpha : alpha;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double g = grad[i];
            x[i] += dir * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
        }
        x = project_linf(x, ex.x, cfg.epsilon);
    }

    if (targeted && res.success) {
        res.x_adv = std::move(best_success_x);
        res.best_objective = best_success_obj;
    } else {
        res.x_adv = std::move(best_x);
        res.best_objective = best_obj;
    }
    return res;
}

}  // namespace detail

/// Ascends loss_xent on the true label inside the epsilon-ball; success means
/// some iterate was misclassified.
inline AttackResult pgd_untargeted(const Parameters& params, const Example& ex,
                                   const AttackConfig& cfg,
                                   const Tensor* warm_start = nullptr) {
    return detail::run_pgd(params, ex, ex.label, AttackMode::untargeted, cfg, warm_start);
}

/// Descends loss_xent on the target class; success means some iterate was
/// classified as the target.
inline AttackResult pgd_targeted(const Parameters& params, const Example& ex,
                                 std::size_t target, const AttackConfig& cfg,
                                 const Tensor* warm_start = nullptr) {
    if (target == ex.label)
        throw ValidationError("targeted attack: target equals the true label");
    if (target >= params.spec.num_classes)
        throw ValidationError("targeted attack: target class out of range");
    return detail::run_pgd(params, ex, target, AttackMode::targeted, cfg, warm_start);
}

/// Uniform draw over the classes other than true_label.
inline std::size_t sample_target(std::size_t true_label, std::size_t num_classes,
                                 Rng& rng) {
    if (num_classes < 2)
        throw ValidationError("sample_target: num_classes must be >= 2");
    if (true_label >= num_classes)
        throw ValidationError("sample_target: true_label out of range");
    const std::uint64_t draw = rng.below(num_classes - 1);
    return draw >= true_label ? draw + 1 : draw;
}

/// Per-iterate trajectory export: "step,objective,success".
inline void write_trajectory_csv(const AttackResult& res,
                                 const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "step,objective,success\n";
    for (std::size_t k = 0; k < res.loss_trajectory.size(); ++k)
        out << k << ',' << fmt_g17(res.loss_trajectory[k]) << ','
            << (res.success_trajectory[k] ? 1 : 0) << "\n";
    finish_output(out, path);
}

}  // namespace alpeval

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "alpeval/attack.hpp"
#include "alpeval/dataset.hpp"
#include "alpeval/errors.hpp"
#include "alpeval/evaluate.hpp"
#include "alpeval/io.hpp"
#include "alpeval/network.hpp"
#include "alpeval/parallel.hpp"
#include "alpeval/rng.hpp"

namespace alpeval {

// The three training objectives (natural ERM, robust optimization on attacked
// batches, logit pairing) are all instances of one composite objective
//
//   J = clean_coeff * L(x, y) + adv_coeff * L(x_adv, y) + lambda * D(f(x), f(x_adv))
//
// minimized by minibatch SGD from a shared deterministic init. Running every
// objective through the same loop makes the reduction identities (lambda = 0
// recovers natural or adversarial training exactly) structural rather than
// numerical.

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    // 0 is allowed and leaves the parameters at their initialization.
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    void validate() const {
        if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
        if (!(learning_rate >= 0.0))
            throw ValidationError("train: learning_rate must be >= 0");
        if (jobs < 1) throw ValidationError("train: jobs must be >= 1");
    }
};

enum class InnerAttackMode { targeted_random, untargeted };

inline AttackConfig default_inner_attack() {
    AttackConfig cfg;
    cfg.epsilon = 16.0 / 255.0;
    cfg.max_steps = 10;  // desk-scale inner budget; evaluation uses the full 1000
    return cfg;
}

struct AlpConfig {
    double lambda = 0.5;
    InnerAttackMode inner_attack_mode = InnerAttackMode::targeted_random;
    bool include_clean_loss = true;
    bool include_adv_loss = false;
    AttackConfig inner_attack = default_inner_attack();
    DistanceKind distance = DistanceKind::squared_euclidean;

    void validate() const {
        if (!(lambda >= 0.0)) throw ValidationError("alp: lambda must be >= 0");
        if (lambda == 0.0 && !include_clean_loss && !include_adv_loss)
            throw ValidationError("alp: objective is empty (lambda 0, both losses off)");
        inner_attack.validate();
    }
};

struct CompositeObjective {
    double clean_coeff = 1.0;
    double adv_coeff = 0.0;
    double lambda = 0.0;
    DistanceKind distance = DistanceKind::squared_euclidean;
};

inline bool composite_needs_adv(const CompositeObjective& co) {
    return co.adv_coeff != 0.0 || co.lambda != 0.0;
}

struct ExampleGrad {
    double objective = 0.0;
    Parameters param_grad;
};

/// Objective value and exact parameter gradient for one example, with the
/// adversarial input held fixed. The pairing term propagates through both
/// logit branches.
inline ExampleGrad composite_grad(const Parameters& params, const Example& ex,
                                  const Tensor* x_adv, const CompositeObjective& co) {
    ExampleGrad out;
    const ForwardTrace trace_c = forward_trace(params, ex.x);

    if (!composite_needs_adv(co)) {
        out.objective = co.clean_coeff * loss_xent(trace_c.logits, ex.label);
        Tensor dl = xent_grad_logits(trace_c.logits, ex.label);
        for (double& v : dl.data) v *= co.clean_coeff;
        out.param_grad = backward(params, trace_c, dl).params;
        return out;
    }

    if (!x_adv) throw ValidationError("composite gradient: adversarial input required");
    const ForwardTrace trace_a = forward_trace(params, *x_adv);
    const std::size_t k = trace_c.logits.size();
    out.param_grad = zeros_like(params.spec);

    Tensor ddist;  // gradient of D with respect to the clean logits
    if (co.lambda != 0.0) {
        out.objective +=
            co.lambda * logit_distance(trace_c.logits, trace_a.logits, co.distance);
        ddist = logit_distance_grad(trace_c.logits, trace_a.logits, co.distance);
    }

    if (co.clean_coeff != 0.0 || co.lambda != 0.0) {
        Tensor dl_c = Tensor::zeros({k});
        if (co.clean_coeff != 0.0) {
            out.objective += co.clean_coeff * loss_xent(trace_c.logits, ex.label);
            const Tensor g = xent_grad_logits(trace_c.logits, ex.label);
            for (std::size_t i = 0; i < k; ++i) dl_c[i] += co.clean_coeff * g[i];
        }
        if (co.lambda != 0.0)
            for (std::size_t i = 0; i < k; ++i) dl_c[i] += co.lambda * ddist[i];
        axpy_params(out.param_grad, backward(params, trace_c, dl_c).params, 1.0);
    }

    if (co.adv_coeff != 0.0 || co.lambda != 0.0) {
        Tensor dl_a = Tensor::zeros({k});
        if (co.adv_coeff != 0.0) {
            out.objective += co.adv_coeff * loss_xent(trace_a.logits, ex.label);
            const Tensor g = xent_grad_logits(trace_a.logits, ex.label);
            for (std::size_t i = 0; i < k; ++i) dl_a[i] += co.adv_coeff * g[i];
        }
        if (co.lambda != 0.0)
            for (std::size_t i = 0; i < k; ++i) dl_a[i] -= co.lambda * ddist[i];
        axpy_params(out.param_grad, backward(params, trace_a, dl_a).params, 1.0);
    }
    return out;
}

/// Objective value alone, same semantics as composite_grad.
inline double composite_value(const Parameters& params, const Example& ex,
                              const Tensor* x_adv, const CompositeObjective& co) {
    double j = co.clean_coeff == 0.0 && co.lambda == 0.0
                   ? 0.0
                   : co.clean_coeff * loss_xent(forward_logits(params, ex.x), ex.label);
    if (!composite_needs_adv(co)) return j;
    if (!x_adv) throw ValidationError("composite objective: adversarial input required");
    const Tensor logits_a = forward_logits(params, *x_adv);
    if (co.adv_coeff != 0.0) j += co.adv_coeff * loss_xent(logits_a, ex.label);
    if (co.lambda != 0.0) {
        const Tensor logits_c = forward_logits(params, ex.x);
        j += co.lambda * logit_distance(logits_c, logits_a, co.distance);
    }
    return j;
}

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double objective = 0.0;
    double clean_acc = 0.0;
};

struct TrainRun {
    Parameters params;
    std::vector<EpochLog> log;
};

namespace detail {

/// Deterministic minibatch SGD over the composite objective. Batch order is a
/// pure function of (seed, epoch); every inner-attack and target draw is keyed
/// by (seed, epoch, position in the shuffled order), so parallel execution
/// within a batch cannot change the result (per-slot writes, ordered reduce).
inline TrainRun train_core(const ModelSpec& spec, const Dataset& train,
                           const TrainConfig& cfg, const CompositeObjective& co,
                           InnerAttackMode inner_mode, const AttackConfig& inner) {
    spec.validate();
    cfg.validate();
    if (train.examples.empty()) throw ValidationError("train: empty dataset");
    if (train.num_classes != spec.num_classes)
        throw ValidationError("train: dataset and model class counts differ");
    const bool needs_adv = composite_needs_adv(co);
    if (needs_adv) inner.validate();

    TrainRun run;
    run.params = init_params(spec, cfg.seed);
    const std::size_t n = train.examples.size();
    std::vector<std::size_t> order(n);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, Stream::batch_order, {epoch}));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double objective_sum = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t m = std::min(cfg.batch_size, n - start);
            std::vector<ExampleGrad> slot(m);
            parallel_for(m, cfg.jobs, [&](std::size_t k) {
                const std::size_t pos = start + k;
                const Example& ex = train.examples[order[pos]];
                Tensor x_adv;
                const Tensor* adv_ptr = nullptr;
                if (needs_adv) {
                    AttackConfig ic = inner;
                    ic.seed = derive_seed(cfg.seed, Stream::attack_start, {epoch, pos});
                    if (inner_mode == InnerAttackMode::targeted_random) {
                        Rng trng(derive_seed(cfg.seed, Stream::target_sample, {epoch, pos}));
                        const std::size_t target =
                            sample_target(ex.label, spec.num_classes, trng);
                        x_adv = pgd_targeted(run.params, ex, target, ic).x_adv;
                    } else {
                        x_adv = pgd_untargeted(run.params, ex, ic).x_adv;
                    }
                    adv_ptr = &x_adv;
                }
                slot[k] = composite_grad(run.params, ex, adv_ptr, co);
            });
            Parameters grad_sum = zeros_like(spec);
            for (std::size_t k = 0; k < m; ++k) {
                axpy_params(grad_sum, slot[k].param_grad, 1.0);
                objective_sum += slot[k].objective;
            }
            axpy_params(run.params, grad_sum,
                        -cfg.learning_rate / static_cast<double>(m));
        }

        std::size_t correct = 0;
        for (const Example& ex : train.examples)
            if (predict(run.params, ex.x) == ex.label) ++correct;
        run.log.push_back({epoch, objective_sum / static_cast<double>(n),
                           static_cast<double>(correct) / static_cast<double>(n)});
    }
    return run;
}

}  // namespace detail

inline TrainRun train_natural(const ModelSpec& spec, const Dataset& train,
                              const TrainConfig& cfg) {
    return detail::train_core(spec, train, cfg,
                              CompositeObjective{1.0, 0.0, 0.0,
                                                 DistanceKind::squared_euclidean},
                              InnerAttackMode::untargeted, AttackConfig{});
}

/// Robust optimization: every batch is replaced by untargeted PGD outputs
/// before the gradient step; no clean-data loss term.
inline TrainRun train_adversarial(const ModelSpec& spec, const Dataset& train,
                                  const TrainConfig& cfg, const AttackConfig& inner) {
    return detail::train_core(spec, train, cfg,
                              CompositeObjective{0.0, 1.0, 0.0,
                                                 DistanceKind::squared_euclidean},
                              InnerAttackMode::untargeted, inner);
}

/// Logit pairing: clean and/or adversarial loss plus lambda times the logit
/// distance between the clean and attacked versions of each example.
inline TrainRun train_alp(const ModelSpec& spec, const Dataset& train,
                          const TrainConfig& cfg, const AlpConfig& alp) {
    alp.validate();
    const CompositeObjective co{alp.include_clean_loss ? 1.0 : 0.0,
                                alp.include_adv_loss ? 1.0 : 0.0, alp.lambda,
                                alp.distance};
    return detail::train_core(spec, train, cfg, co, alp.inner_attack_mode,
                              alp.inner_attack);
}

/// Training log CSV: "epoch,objective,clean_acc".
inline void write_training_log_csv(const std::vector<EpochLog>& log,
                                   const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "epoch,objective,clean_acc\n";
    for (const EpochLog& row : log)
        out << row.epoch << ',' << fmt_g17(row.objective) << ','
            << fmt_f6(row.clean_acc) << "\n";
    finish_output(out, path);
}

}  // namespace alpeval

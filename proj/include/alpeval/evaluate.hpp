#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "alpeval/attack.hpp"
#include "alpeval/dataset.hpp"
#include "alpeval/errors.hpp"
#include "alpeval/io.hpp"
#include "alpeval/network.hpp"
#include "alpeval/parallel.hpp"
#include "alpeval/rng.hpp"

namespace alpeval {

// Measurement harness: clean accuracy, warm-started epsilon sweeps of the two
// headline metrics (attacker success rate, defense accuracy), brute-force
// ground truth for 2D models, and steps-to-success statistics.

inline double clean_accuracy(const Parameters& params, const Dataset& data) {
    if (data.examples.empty()) throw ValidationError("clean_accuracy: empty dataset");
    std::size_t correct = 0;
    for (const Example& ex : data.examples)
        if (predict(params, ex.x) == ex.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

struct SweepReport {
    std::vector<double> eps_grid;
    // Populated in targeted mode only; empty for untargeted sweeps.
    std::vector<double> attacker_success_rate;
    std::vector<double> defense_accuracy;
    AttackMode mode = AttackMode::targeted;
    std::size_t n_examples = 0;
    AttackConfig attack;  // base config; epsilon/alpha are resolved per grid point
    std::uint64_t target_seed = 0;
};

inline void validate_eps_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ValidationError("sweep: empty epsilon grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
            throw ValidationError("sweep: epsilon values must be in [0,1]");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw ValidationError("sweep: epsilon grid must be strictly increasing");
    }
}

/// Per-epsilon attack step size: the caller's alpha when set (clamped to the
/// ball diameter so small-epsilon grid points stay valid), else epsilon/10.
inline double sweep_alpha(const AttackConfig& base, double epsilon) {
    const double preferred = base.alpha > 0.0 ? base.alpha : epsilon / 10.0;
    return std::min(preferred, 2.0 * epsilon);
}

namespace detail {

/// Warm-started sweep over the epsilon grid. Each example keeps one attack
/// chain: the attack at the next epsilon starts from the previous adversarial
/// example (valid because the balls are nested), and the per-example outcome
/// flags latch, so attacker success is non-decreasing and defense accuracy is
/// non-increasing across the grid by construction. An example counts as
/// defended at epsilon only if no iterate seen at any radius up to epsilon
/// was misclassified.
inline SweepReport run_sweep(const Parameters& params, const Dataset& data,
                             const std::vector<double>& eps_grid,
                             const AttackConfig& cfg, AttackMode mode,
                             std::uint64_t target_seed, std::size_t jobs) {
    validate_eps_grid(eps_grid);
    if (data.examples.empty()) throw ValidationError("sweep: empty dataset");
    if (data.num_classes != params.spec.num_classes)
        throw ValidationError("sweep: dataset and model class counts differ");
    const std::size_t n = data.examples.size();

    // One fixed random target per example, shared by every epsilon.
    std::vector<std::size_t> targets(n, 0);
    if (mode == AttackMode::targeted) {
        Rng trng(derive_seed(target_seed, Stream::target_sample));
        for (std::size_t i = 0; i < n; ++i)
            targets[i] = sample_target(data.examples[i].label,
                                       params.spec.num_classes, trng);
    }

    SweepReport report;
    report.eps_grid = eps_grid;
    report.mode = mode;
    report.n_examples = n;
    report.attack = cfg;
    report.target_seed = target_seed;

    std::vector<Tensor> warm(n);
    bool have_warm = false;
    std::vector<char> success_ever(n, 0), misclassified_ever(n, 0);

    for (double eps : eps_grid) {
        AttackConfig step_cfg = cfg;
        step_cfg.epsilon = eps;
        step_cfg.alpha = sweep_alpha(cfg, eps);
        std::vector<AttackResult> slot(n);
        parallel_for(n, jobs, [&](std::size_t i) {
            AttackConfig ci = step_cfg;
            ci.seed = derive_seed(cfg.seed, Stream::attack_start, {i});
            const Tensor* start = have_warm ? &warm[i] : nullptr;
            slot[i] = mode == AttackMode::targeted
                          ? pgd_targeted(params, data.examples[i], targets[i], ci, start)
                          : pgd_untargeted(params, data.examples[i], ci, start);
        });
        std::size_t n_success = 0, n_defended = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (slot[i].success) success_ever[i] = 1;
            if (slot[i].any_misclassified) misclassified_ever[i] = 1;
            warm[i] = std::move(slot[i].x_adv);
            n_success += success_ever[i];
            n_defended += misclassified_ever[i] ? 0 : 1;
        }
        have_warm = true;
        if (mode == AttackMode::targeted)
            report.attacker_success_rate.push_back(static_cast<double>(n_success) /
                                                   static_cast<double>(n));
        report.defense_accuracy.push_back(static_cast<double>(n_defended) /
                                          static_cast<double>(n));
    }
    return report;
}

}  // namespace detail

inline SweepReport targeted_sweep(const Parameters& params, const Dataset& data,
                                  const std::vector<double>& eps_grid,
                                  const AttackConfig& cfg, std::uint64_t target_seed,
                                  std::size_t jobs = 1) {
    return detail::run_sweep(params, data, eps_grid, cfg, AttackMode::targeted,
                             target_seed, jobs);
}

inline SweepReport untargeted_sweep(const Parameters& params, const Dataset& data,
                                    const std::vector<double>& eps_grid,
                                    const AttackConfig& cfg, std::size_t jobs = 1) {
    return detail::run_sweep(params, data, eps_grid, cfg, AttackMode::untargeted,
                             /*target_seed=*/0, jobs);
}

struct WorstCase2d {
    double worst_loss = 0.0;
    bool exists_misclassification = false;
};

/// Exhaustive grid evaluation over the epsilon-ball intersected with [0,1]^2.
/// Each axis is a uniform `resolution`-point span of its clamped interval, so
/// all four corners are grid points; the clean point is always evaluated too.
inline WorstCase2d exact_worst_case_2d(const Parameters& params, const Example& ex,
                                       double epsilon, std::size_t resolution) {
    if (params.spec.input_dim != 2 || ex.x.size() != 2)
        throw ValidationError("exact oracle: input dimension must be 2");
    if (resolution < 3) throw ValidationError("exact oracle: resolution must be >= 3");
    if (epsilon < 0.0) throw ValidationError("exact oracle: epsilon must be >= 0");

    double lo[2], hi[2];
    for (int d = 0; d < 2; ++d) {
        lo[d] = std::max(0.0, ex.x[d] - epsilon);
        hi[d] = std::min(1.0, ex.x[d] + epsilon);
    }
    WorstCase2d out;
    Tensor p = Tensor::zeros({2});
    auto visit = [&](const Tensor& point) {
        const Tensor logits = forward_logits(params, point);
        out.worst_loss = std::max(out.worst_loss, loss_xent(logits, ex.label));
        std::size_t pred = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[pred]) pred = i;
        if (pred != ex.label) out.exists_misclassification = true;
    };
    visit(ex.x);
    const auto denom = static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        p[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / denom;
        for (std::size_t j = 0; j < resolution; ++j) {
            p[1] = lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / denom;
            visit(p);
        }
    }
    return out;
}

struct StepsStats {
    std::optional<double> median;
    std::optional<double> mean;
    std::size_t success_count = 0;
};

/// Statistics over first_success_step of the successful attacks only; median
/// and mean stay empty when nothing succeeded.
inline StepsStats steps_to_success_stats(const std::vector<AttackResult>& results) {
    if (results.empty()) throw ValidationError("steps stats: empty result list");
    std::vector<double> steps;
    for (const AttackResult& r : results)
        if (r.success && r.first_success_step)
            steps.push_back(static_cast<double>(*r.first_success_step));
    StepsStats stats;
    stats.success_count = steps.size();
    if (steps.empty()) return stats;
    std::sort(steps.begin(), steps.end());
    const std::size_t m = steps.size();
    stats.median = m % 2 == 1 ? steps[m / 2] : 0.5 * (steps[m / 2 - 1] + steps[m / 2]);
    double sum = 0.0;
    for (double s : steps) sum += s;
    stats.mean = sum / static_cast<double>(m);
    return stats;
}

/// Sweep CSV: "epsilon,attacker_success_rate,defense_accuracy,n_examples",
/// rates with six decimals; the attacker column is left empty for untargeted
/// sweeps, which do not define it.
inline void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "epsilon,attacker_success_rate,defense_accuracy,n_examples\n";
    for (std::size_t i = 0; i < report.eps_grid.size(); ++i) {
        out << fmt_g17(report.eps_grid[i]) << ',';
        if (report.mode == AttackMode::targeted)
            out << fmt_f6(report.attacker_success_rate[i]);
        out << ',' << fmt_f6(report.defense_accuracy[i]) << ',' << report.n_examples
            << "\n";
    }
    finish_output(out, path);
}

}  // namespace alpeval

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "alpeval/attack.hpp"
#include "alpeval/checkpoint.hpp"
#include "alpeval/dataset.hpp"
#include "alpeval/errors.hpp"
#include "alpeval/evaluate.hpp"
#include "alpeval/io.hpp"
#include "alpeval/landscape.hpp"
#include "alpeval/network.hpp"
#include "alpeval/train.hpp"

namespace alpeval {

// Command layer shared by the CLI front end and manifest replay: each command
// is a pure function from a fully resolved JSON config to files in a target
// directory, so re-running a recorded config reproduces a run exactly.

namespace cfg {

template <typename T>
inline T require(const nlohmann::json& j, const char* key) {
    if (!j.contains(key))
        throw ValidationError(std::string("config missing field: ") + key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("config field has wrong type: ") + key);
    }
}

}  // namespace cfg

inline AttackMode attack_mode_from_string(const std::string& s) {
    if (s == "targeted") return AttackMode::targeted;
    if (s == "untargeted") return AttackMode::untargeted;
    throw ValidationError("unknown attack mode: " + s);
}

inline DistanceKind distance_from_string(const std::string& s) {
    if (s == "squared_euclidean") return DistanceKind::squared_euclidean;
    if (s == "euclidean") return DistanceKind::euclidean;
    throw ValidationError("unknown distance: " + s);
}

/// Regenerates the dataset a descriptor records and applies its split.
inline std::pair<Dataset, Dataset> build_splits(const nlohmann::json& desc) {
    const auto kind = cfg::require<std::string>(desc, "kind");
    const double frac = cfg::require<double>(desc, "train_fraction");
    const auto seed = cfg::require<std::uint64_t>(desc, "seed");
    Dataset full;
    if (kind == "blobs") {
        full = gen_gaussian_blobs(cfg::require<std::size_t>(desc, "n_per_class"),
                                  cfg::require<std::size_t>(desc, "dim"),
                                  cfg::require<std::size_t>(desc, "num_classes"),
                                  cfg::require<double>(desc, "spread"), seed);
    } else if (kind == "spirals") {
        full = gen_two_spirals(cfg::require<std::size_t>(desc, "n_per_class"),
                               cfg::require<double>(desc, "noise"), seed);
    } else if (kind == "idx") {
        full = load_idx(cfg::require<std::string>(desc, "images"),
                        cfg::require<std::string>(desc, "labels"));
        full.seed = seed;
    } else {
        throw ValidationError("unknown dataset kind: " + kind);
    }
    return split(full, frac, seed);
}

/// First n examples of the (already shuffled) test split; n = 0 means all.
inline Dataset eval_subset(const Dataset& test, std::size_t n) {
    if (test.examples.empty())
        throw ValidationError("evaluation split is empty; lower train_fraction");
    Dataset out = test;
    if (n > 0 && n < out.examples.size()) out.examples.resize(n);
    return out;
}

inline LoadedCheckpoint load_model_with_data(const std::string& path) {
    LoadedCheckpoint ckpt = load_checkpoint(path);
    if (ckpt.meta.dataset.is_null())
        throw ValidationError("checkpoint has no dataset record, cannot rebuild "
                              "evaluation data: " + path);
    return ckpt;
}

inline std::vector<std::string> execute_train(const nlohmann::json& config,
                                              const std::filesystem::path& out_dir) {
    const auto objective = cfg::require<std::string>(config, "objective");
    const nlohmann::json desc = cfg::require<nlohmann::json>(config, "dataset");
    auto [train_split, test_split] = build_splits(desc);
    if (train_split.examples.empty())
        throw ValidationError("training split is empty; raise train_fraction");

    ModelSpec spec;
    spec.input_dim = train_split.dim();
    spec.hidden = cfg::require<std::vector<std::size_t>>(config, "hidden");
    spec.num_classes = train_split.num_classes;

    TrainConfig tc;
    tc.epochs = cfg::require<std::size_t>(config, "epochs");
    tc.batch_size = cfg::require<std::size_t>(config, "batch_size");
    tc.learning_rate = cfg::require<double>(config, "learning_rate");
    tc.seed = cfg::require<std::uint64_t>(config, "seed");
    tc.jobs = config.value("jobs", std::size_t{1});

    AttackConfig inner;
    inner.epsilon = config.value("inner_eps", 16.0 / 255.0);
    inner.max_steps = config.value("inner_steps", std::size_t{10});
    inner.seed = tc.seed;

    TrainRun run;
    if (objective == "natural") {
        run = train_natural(spec, train_split, tc);
    } else if (objective == "adversarial") {
        run = train_adversarial(spec, train_split, tc, inner);
    } else if (objective == "alp") {
        AlpConfig alp;
        alp.lambda = cfg::require<double>(config, "lambda");
        alp.inner_attack_mode = config.value("alp_inner", std::string{"targeted"}) ==
                                        "untargeted"
                                    ? InnerAttackMode::untargeted
                                    : InnerAttackMode::targeted_random;
        alp.include_clean_loss = config.value("alp_clean_loss", true);
        alp.include_adv_loss = config.value("alp_adv_loss", false);
        alp.distance = distance_from_string(
            config.value("alp_distance", std::string{"squared_euclidean"}));
        alp.inner_attack = inner;
        run = train_alp(spec, train_split, tc, alp);
    } else {
        throw ValidationError("unknown objective: " + objective);
    }

    CheckpointMeta meta;
    meta.seed = tc.seed;
    meta.dataset = desc;
    save_checkpoint(run.params, out_dir / "model.ckpt", meta);
    write_training_log_csv(run.log, out_dir / "training_log.csv");
    return {"model.ckpt", "training_log.csv"};
}

inline std::vector<std::string> execute_sweep(const nlohmann::json& config,
                                              const std::filesystem::path& out_dir) {
    const LoadedCheckpoint ckpt =
        load_model_with_data(cfg::require<std::string>(config, "model"));
    auto [train_split, test_split] = build_splits(ckpt.meta.dataset);
    const Dataset data = eval_subset(test_split, config.value("n", std::size_t{0}));

    const auto grid = cfg::require<std::vector<double>>(config, "eps_grid");
    const AttackMode mode =
        attack_mode_from_string(cfg::require<std::string>(config, "mode"));
    AttackConfig base;
    base.alpha = config.value("alpha", 0.0);
    base.max_steps = config.value("steps", std::size_t{1000});
    base.seed = cfg::require<std::uint64_t>(config, "seed");
    const std::size_t jobs = config.value("jobs", std::size_t{1});

    const SweepReport report =
        mode == AttackMode::targeted
            ? targeted_sweep(ckpt.params, data, grid, base, base.seed, jobs)
            : untargeted_sweep(ckpt.params, data, grid, base, jobs);
    write_sweep_csv(report, out_dir / "sweep.csv");
    return {"sweep.csv"};
}

inline std::vector<std::string> execute_landscape(const nlohmann::json& config,
                                                  const std::filesystem::path& out_dir) {
    const LoadedCheckpoint ckpt =
        load_model_with_data(cfg::require<std::string>(config, "model"));
    auto [train_split, test_split] = build_splits(ckpt.meta.dataset);
    const auto index = cfg::require<std::size_t>(config, "example_index");
    if (index >= test_split.examples.size())
        throw ValidationError("example index " + std::to_string(index) +
                              " out of range for evaluation split of size " +
                              std::to_string(test_split.examples.size()));

    const LandscapeGrid grid = landscape_grid(
        ckpt.params, test_split.examples[index], cfg::require<double>(config, "radius"),
        cfg::require<std::size_t>(config, "resolution"),
        cfg::require<std::uint64_t>(config, "seed"), config.value("clip", true));
    write_landscape_csv(grid, out_dir / "landscape.csv");
    write_landscape_meta(grid, index, out_dir / "landscape_meta.json");
    return {"landscape.csv", "landscape_meta.json"};
}

inline std::vector<std::string> execute_attack(const nlohmann::json& config,
                                               const std::filesystem::path& out_dir) {
    const LoadedCheckpoint ckpt =
        load_model_with_data(cfg::require<std::string>(config, "model"));
    auto [train_split, test_split] = build_splits(ckpt.meta.dataset);
    const Dataset data = eval_subset(test_split, config.value("n", std::size_t{0}));
    const std::size_t n = data.examples.size();

    const AttackMode mode =
        attack_mode_from_string(cfg::require<std::string>(config, "mode"));
    AttackConfig base;
    base.epsilon = cfg::require<double>(config, "epsilon");
    base.alpha = config.value("alpha", 0.0);
    base.max_steps = config.value("steps", std::size_t{1000});
    base.seed = cfg::require<std::uint64_t>(config, "seed");
    const std::size_t jobs = config.value("jobs", std::size_t{1});

    std::vector<std::size_t> targets(n, 0);
    if (mode == AttackMode::targeted) {
        Rng trng(derive_seed(base.seed, Stream::target_sample));
        for (std::size_t i = 0; i < n; ++i)
            targets[i] = sample_target(data.examples[i].label,
                                       ckpt.params.spec.num_classes, trng);
    }

    std::vector<AttackResult> results(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        AttackConfig ci = base;
        ci.seed = derive_seed(base.seed, Stream::attack_start, {i});
        results[i] = mode == AttackMode::targeted
                         ? pgd_targeted(ckpt.params, data.examples[i], targets[i], ci)
                         : pgd_untargeted(ckpt.params, data.examples[i], ci);
    });

    std::vector<std::string> outputs;
    const std::string mode_name = to_string(mode);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string name = "traj_" + std::to_string(i) + "_" + mode_name + ".csv";
        write_trajectory_csv(results[i], out_dir / name);
        outputs.push_back(name);
    }

    std::ofstream summary = open_output(out_dir / "attack_summary.csv");
    summary << "example,success,first_success_step,steps_taken,final_objective\n";
    for (std::size_t i = 0; i < n; ++i) {
        const AttackResult& r = results[i];
        summary << i << ',' << (r.success ? 1 : 0) << ',';
        if (r.first_success_step) summary << *r.first_success_step;
        summary << ',' << r.steps_taken << ',' << fmt_g17(r.best_objective) << "\n";
    }
    finish_output(summary, out_dir / "attack_summary.csv");
    outputs.push_back("attack_summary.csv");
    return outputs;
}

inline std::vector<std::string> execute_compare(const nlohmann::json& config,
                                                const std::filesystem::path& out_dir) {
    const auto model_paths = cfg::require<std::vector<std::string>>(config, "models");
    if (model_paths.size() < 2)
        throw ValidationError("compare needs at least two models");

    std::vector<LoadedCheckpoint> models;
    for (const std::string& path : model_paths) {
        models.push_back(load_model_with_data(path));
        if (models.back().meta.dataset != models.front().meta.dataset)
            throw ValidationError("models were trained on different datasets; "
                                  "comparison needs a shared evaluation set");
    }
    auto [train_split, test_split] = build_splits(models.front().meta.dataset);
    const Dataset data = eval_subset(test_split, config.value("n", std::size_t{0}));

    const auto grid = cfg::require<std::vector<double>>(config, "eps_grid");
    const AttackMode mode =
        attack_mode_from_string(cfg::require<std::string>(config, "mode"));
    AttackConfig base;
    base.alpha = config.value("alpha", 0.0);
    base.max_steps = config.value("steps", std::size_t{1000});
    base.seed = cfg::require<std::uint64_t>(config, "seed");
    const std::size_t jobs = config.value("jobs", std::size_t{1});

    std::ofstream out = open_output(out_dir / "compare.csv");
    out << "model,epsilon,attacker_success_rate,defense_accuracy,n_examples\n";
    for (std::size_t m = 0; m < models.size(); ++m) {
        const SweepReport report =
            mode == AttackMode::targeted
                ? targeted_sweep(models[m].params, data, grid, base, base.seed, jobs)
                : untargeted_sweep(models[m].params, data, grid, base, jobs);
        for (std::size_t i = 0; i < report.eps_grid.size(); ++i) {
            out << model_paths[m] << ',' << fmt_g17(report.eps_grid[i]) << ',';
            if (mode == AttackMode::targeted)
                out << fmt_f6(report.attacker_success_rate[i]);
            out << ',' << fmt_f6(report.defense_accuracy[i]) << ','
                << report.n_examples << "\n";
        }
    }
    finish_output(out, out_dir / "compare.csv");
    return {"compare.csv"};
}

/// Single dispatch point used by both fresh runs and manifest replay.
inline std::vector<std::string> execute_command(const std::string& name,
                                                const nlohmann::json& config,
                                                const std::filesystem::path& out_dir) {
    if (name == "train") return execute_train(config, out_dir);
    if (name == "sweep") return execute_sweep(config, out_dir);
    if (name == "landscape") return execute_landscape(config, out_dir);
    if (name == "attack") return execute_attack(config, out_dir);
    if (name == "compare") return execute_compare(config, out_dir);
    throw ValidationError("unknown command: " + name);
}

}  // namespace alpeval

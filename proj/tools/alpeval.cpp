// alpeval: train desk-scale classifiers under natural / adversarial / logit
// pairing objectives and measure them with PGD attacks, epsilon sweeps, loss
// landscapes, and attack trajectories. Every run writes a manifest that the
// `replay` subcommand can re-execute byte-for-byte.

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "alpeval/commands.hpp"
#include "alpeval/errors.hpp"
#include "alpeval/manifest.hpp"
#include "alpeval/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kUnit = 1.0 / 255.0;  // CLI expresses radii in 1/255 units

struct DatasetFlags {
    std::string dataset;  // blobs | spirals | idx:<images>,<labels>
    std::size_t n_per_class = 100;
    std::size_t dim = 2;
    std::size_t num_classes = 3;
    double spread = 0.05;
    double noise = 0.02;
    std::uint64_t data_seed = 1;
    double train_fraction = 0.8;
};

json dataset_descriptor(const DatasetFlags& d) {
    json desc = {
        {"seed", d.data_seed},
        {"train_fraction", d.train_fraction},
    };
    if (d.dataset == "blobs") {
        desc["kind"] = "blobs";
        desc["n_per_class"] = d.n_per_class;
        desc["dim"] = d.dim;
        desc["num_classes"] = d.num_classes;
        desc["spread"] = d.spread;
    } else if (d.dataset == "spirals") {
        desc["kind"] = "spirals";
        desc["n_per_class"] = d.n_per_class;
        desc["noise"] = d.noise;
    } else if (d.dataset.rfind("idx:", 0) == 0) {
        const std::string rest = d.dataset.substr(4);
        const auto comma = rest.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 == rest.size())
            throw alpeval::ValidationError(
                "--dataset idx form is idx:<images>,<labels>");
        desc["kind"] = "idx";
        desc["images"] = rest.substr(0, comma);
        desc["labels"] = rest.substr(comma + 1);
    } else {
        throw alpeval::ValidationError("unknown dataset: " + d.dataset +
                                       " (expected blobs, spirals, or idx:<i>,<l>)");
    }
    return desc;
}

std::vector<std::size_t> parse_hidden(const std::string& s) {
    if (s.empty() || s == "none") return {};
    std::vector<std::size_t> widths;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string tok =
            s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            const long v = std::stol(tok);
            if (v < 1) throw std::invalid_argument("width");
            widths.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw alpeval::ValidationError("bad --hidden entry: '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return widths;
}

/// "<start>:<end>:<count>" in 1/255 units -> strictly increasing grid in [0,1].
std::vector<double> parse_eps_grid(const std::string& s) {
    double start = 0.0, end = 0.0;
    long count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> start >> c1 >> end >> c2 >> count) || c1 != ':' || c2 != ':' ||
        !(in >> std::ws).eof())
        throw alpeval::ValidationError("malformed --eps-grid '" + s +
                                       "' (expected start:end:count)");
    if (count < 1) throw alpeval::ValidationError("--eps-grid count must be >= 1");
    if (count > 1 && !(end > start))
        throw alpeval::ValidationError("--eps-grid needs end > start");
    std::vector<double> grid;
    for (long i = 0; i < count; ++i) {
        const double units =
            count == 1 ? start
                       : start + (end - start) * static_cast<double>(i) /
                                     static_cast<double>(count - 1);
        grid.push_back(units * kUnit);
    }
    return grid;
}

json collect_inputs(const std::string& command, const json& config) {
    json inputs = json::array();
    if (command == "train") {
        const json& desc = config.at("dataset");
        if (desc.value("kind", std::string{}) == "idx") {
            inputs.push_back(desc.at("images"));
            inputs.push_back(desc.at("labels"));
        }
    } else if (command == "compare") {
        for (const auto& m : config.at("models")) inputs.push_back(m);
    } else if (config.contains("model")) {
        inputs.push_back(config.at("model"));
    }
    return inputs;
}

/// Executes into a stage directory next to --out and renames files into place
/// only after the whole command succeeded, so failures leave no partial runs.
void staged_run(const std::string& command, const json& config, const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path stage = out.string() + ".stage";
    std::error_code ec;
    fs::remove_all(stage, ec);
    fs::create_directories(stage);

    std::vector<std::string> outputs;
    try {
        outputs = alpeval::execute_command(command, config, stage);
    } catch (...) {
        fs::remove_all(stage, ec);
        throw;
    }

    alpeval::RunManifest manifest;
    manifest.command = command;
    manifest.config = config;
    manifest.inputs = collect_inputs(command, config);
    manifest.outputs = outputs;
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    alpeval::save_manifest(manifest, stage / "manifest.json");

    fs::create_directories(out);
    outputs.push_back("manifest.json");
    for (const std::string& name : outputs) fs::rename(stage / name, out / name);
    fs::remove_all(stage, ec);
    std::cout << command << ": wrote " << outputs.size() << " files to " << out.string()
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial logit pairing evaluation toolkit"};
    app.set_version_flag("--version", alpeval::kVersion);
    app.require_subcommand(1);

    const auto mode_check = CLI::IsMember({"targeted", "untargeted"});

    // train
    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    std::string objective = "natural";
    DatasetFlags data;
    std::string hidden = "16,16";
    std::size_t epochs = 30, batch = 32, jobs = 1, inner_steps = 10;
    double lr = 0.1, eps_units = 16.0, lambda = 0.5;
    std::uint64_t seed = 1;
    std::string alp_inner = "targeted", alp_clean = "on", alp_adv = "off";
    std::string alp_distance = "squared_euclidean";
    std::string out_dir = "run";
    train->add_option("--objective", objective, "training objective")
        ->check(CLI::IsMember({"natural", "adversarial", "alp"}));
    train->add_option("--dataset", data.dataset,
                      "blobs | spirals | idx:<images>,<labels>")
        ->required();
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--lr", lr, "SGD learning rate");
    train->add_option("--batch", batch, "minibatch size");
    train->add_option("--seed", seed, "training seed (init, batch order, attacks)");
    train->add_option("--eps", eps_units, "inner attack radius, 1/255 units");
    train->add_option("--inner-steps", inner_steps, "inner attack PGD steps");
    train->add_option("--lambda", lambda, "logit pairing weight");
    train->add_option("--alp-inner", alp_inner, "inner attack mode for alp")
        ->check(mode_check);
    train->add_option("--alp-clean-loss", alp_clean, "include clean loss term")
        ->check(CLI::IsMember({"on", "off"}));
    train->add_option("--alp-adv-loss", alp_adv, "include adversarial loss term")
        ->check(CLI::IsMember({"on", "off"}));
    train->add_option("--alp-distance", alp_distance, "pairing distance")
        ->check(CLI::IsMember({"squared_euclidean", "euclidean"}));
    train->add_option("--hidden", hidden, "hidden widths, e.g. 16,16 (none for linear)");
    train->add_option("--n-per-class", data.n_per_class, "generated examples per class");
    train->add_option("--dim", data.dim, "blob dimension");
    train->add_option("--classes", data.num_classes, "blob class count");
    train->add_option("--spread", data.spread, "blob standard deviation");
    train->add_option("--noise", data.noise, "spiral noise level");
    train->add_option("--data-seed", data.data_seed, "dataset generation seed");
    train->add_option("--train-frac", data.train_fraction, "train split fraction");
    train->add_option("--jobs", jobs, "worker threads");
    train->add_option("--out", out_dir, "output directory")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "epsilon sweep of attack metrics");
    std::string sw_model, sw_mode, sw_grid;
    std::size_t sw_steps = 1000, sw_n = 100, sw_jobs = 1;
    double sw_alpha_units = 0.0;
    std::uint64_t sw_seed = 1;
    std::string sw_out = "sweep_run";
    sweep->add_option("--model", sw_model, "checkpoint path")->required();
    sweep->add_option("--mode", sw_mode, "attack mode")->required()->check(mode_check);
    sweep->add_option("--eps-grid", sw_grid, "start:end:count in 1/255 units")
        ->required();
    sweep->add_option("--steps", sw_steps, "PGD steps per epsilon");
    sweep->add_option("--alpha", sw_alpha_units, "step size, 1/255 units (0 = eps/10)");
    sweep->add_option("--n", sw_n, "evaluation subset size (0 = all)");
    sweep->add_option("--seed", sw_seed, "target sampling / attack seed");
    sweep->add_option("--jobs", sw_jobs, "worker threads");
    sweep->add_option("--out", sw_out, "output directory")->required();

    // landscape
    auto* land = app.add_subcommand("landscape", "loss surface around one example");
    std::string ls_model, ls_out = "landscape_run";
    std::size_t ls_index = 0, ls_resolution = 41;
    double ls_radius_units = 16.0;
    std::uint64_t ls_seed = 1;
    bool ls_noclip = false;
    land->add_option("--model", ls_model, "checkpoint path")->required();
    land->add_option("--example-index", ls_index, "index into the evaluation split");
    land->add_option("--radius", ls_radius_units, "plane radius, 1/255 units");
    land->add_option("--resolution", ls_resolution, "odd grid resolution");
    land->add_option("--seed", ls_seed, "Rademacher direction seed");
    land->add_flag("--no-clip", ls_noclip, "evaluate without clipping to [0,1]");
    land->add_option("--out", ls_out, "output directory")->required();

    // attack
    auto* attack = app.add_subcommand("attack", "per-example PGD trajectories");
    std::string at_model, at_mode, at_out = "attack_run";
    std::size_t at_steps = 1000, at_n = 20, at_jobs = 1;
    double at_eps_units = 16.0, at_alpha_units = 0.0;
    std::uint64_t at_seed = 1;
    attack->add_option("--model", at_model, "checkpoint path")->required();
    attack->add_option("--mode", at_mode, "attack mode")->required()->check(mode_check);
    attack->add_option("--eps", at_eps_units, "radius, 1/255 units");
    attack->add_option("--steps", at_steps, "PGD step budget");
    attack->add_option("--alpha", at_alpha_units, "step size, 1/255 units (0 = eps/10)");
    attack->add_option("--n", at_n, "evaluation subset size (0 = all)");
    attack->add_option("--seed", at_seed, "target sampling / attack seed");
    attack->add_option("--jobs", at_jobs, "worker threads");
    attack->add_option("--out", at_out, "output directory")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "merged sweep over several models");
    std::vector<std::string> cp_models;
    std::string cp_mode, cp_grid, cp_out = "compare_run";
    std::size_t cp_steps = 1000, cp_n = 100, cp_jobs = 1;
    double cp_alpha_units = 0.0;
    std::uint64_t cp_seed = 1;
    compare->add_option("--models", cp_models, "comma-separated checkpoints")
        ->required()
        ->delimiter(',');
    compare->add_option("--mode", cp_mode, "attack mode")->required()->check(mode_check);
    compare->add_option("--eps-grid", cp_grid, "start:end:count in 1/255 units")
        ->required();
    compare->add_option("--steps", cp_steps, "PGD steps per epsilon");
    compare->add_option("--alpha", cp_alpha_units, "step size, 1/255 units");
    compare->add_option("--n", cp_n, "evaluation subset size (0 = all)");
    compare->add_option("--seed", cp_seed, "target sampling / attack seed");
    compare->add_option("--jobs", cp_jobs, "worker threads");
    compare->add_option("--out", cp_out, "output directory")->required();

    // replay
    auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
    std::string rp_manifest, rp_out = "replay_run";
    replay->add_option("--manifest", rp_manifest, "manifest.json path")->required();
    replay->add_option("--out", rp_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) {
            json config = {
                {"objective", objective},
                {"dataset", dataset_descriptor(data)},
                {"hidden", parse_hidden(hidden)},
                {"epochs", epochs},
                {"batch_size", batch},
                {"learning_rate", lr},
                {"seed", seed},
                {"jobs", jobs},
                {"inner_eps_units", eps_units},
                {"inner_eps", eps_units * kUnit},
                {"inner_steps", inner_steps},
                {"lambda", lambda},
                {"alp_inner", alp_inner},
                {"alp_clean_loss", alp_clean == "on"},
                {"alp_adv_loss", alp_adv == "on"},
                {"alp_distance", alp_distance},
            };
            staged_run("train", config, out_dir);
        } else if (sweep->parsed()) {
            json config = {
                {"model", sw_model},
                {"mode", sw_mode},
                {"eps_grid_units", sw_grid},
                {"eps_grid", parse_eps_grid(sw_grid)},
                {"steps", sw_steps},
                {"alpha_units", sw_alpha_units},
                {"alpha", sw_alpha_units * kUnit},
                {"n", sw_n},
                {"seed", sw_seed},
                {"jobs", sw_jobs},
            };
            staged_run("sweep", config, sw_out);
        } else if (land->parsed()) {
            json config = {
                {"model", ls_model},
                {"example_index", ls_index},
                {"radius_units", ls_radius_units},
                {"radius", ls_radius_units * kUnit},
                {"resolution", ls_resolution},
                {"seed", ls_seed},
                {"clip", !ls_noclip},
            };
            staged_run("landscape", config, ls_out);
        } else if (attack->parsed()) {
            json config = {
                {"model", at_model},
                {"mode", at_mode},
                {"eps_units", at_eps_units},
                {"epsilon", at_eps_units * kUnit},
                {"steps", at_steps},
                {"alpha_units", at_alpha_units},
                {"alpha", at_alpha_units * kUnit},
                {"n", at_n},
                {"seed", at_seed},
                {"jobs", at_jobs},
            };
            staged_run("attack", config, at_out);
        } else if (compare->parsed()) {
            json config = {
                {"models", cp_models},
                {"mode", cp_mode},
                {"eps_grid_units", cp_grid},
                {"eps_grid", parse_eps_grid(cp_grid)},
                {"steps", cp_steps},
                {"alpha_units", cp_alpha_units},
                {"alpha", cp_alpha_units * kUnit},
                {"n", cp_n},
                {"seed", cp_seed},
                {"jobs", cp_jobs},
            };
            staged_run("compare", config, cp_out);
        } else if (replay->parsed()) {
            const alpeval::RunManifest m = alpeval::load_manifest(rp_manifest);
            staged_run(m.command, m.config, rp_out);
        }
    } catch (const alpeval::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const alpeval::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

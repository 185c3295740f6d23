#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alpeval/errors.hpp"
#include "alpeval/io.hpp"
#include "alpeval/version.hpp"

namespace alpeval {

/// Record of one command execution, sufficient to re-run it: the command
/// name, the fully resolved config (every seed, path, and converted value),
/// plus bookkeeping that does not feed back into the outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::string version = kVersion;
    nlohmann::json inputs = nlohmann::json::array();
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;

    nlohmann::json to_json() const {
        return {
            {"command", command},       {"config", config},
            {"version", version},       {"inputs", inputs},
            {"outputs", outputs},       {"duration_seconds", duration_seconds},
        };
    }
};

inline void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << m.to_json().dump(2) << "\n";
    finish_output(out, path);
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw IoError("corrupt manifest: " + path.string());
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config");
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("manifest missing command/config: " + path.string());
    }
    m.version = j.value("version", std::string{});
    if (j.contains("inputs")) m.inputs = j["inputs"];
    if (j.contains("outputs")) m.outputs = j["outputs"].get<std::vector<std::string>>();
    m.duration_seconds = j.value("duration_seconds", 0.0);
    return m;
}

}  // namespace alpeval

#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "csa/hash.hpp"
#include "csa/jsonl.hpp"

namespace csa {

// Every pipeline stage writes one of these next to its output. No timestamps:
// manifests must be byte-identical across reruns with identical inputs, so
// hash equality doubles as an idempotence check.
struct StageManifest {
    std::string stage;
    std::map<std::string, std::string> inputs;   // path -> sha256
    std::map<std::string, std::string> outputs;  // path -> sha256
    std::map<std::string, std::string> config;   // flat config snapshot
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::int64_t> counts;
};

inline json to_json(const StageManifest& m) {
    json j{{"stage", m.stage},
           {"inputs", m.inputs},
           {"outputs", m.outputs},
           {"config", m.config},
           {"counts", m.counts}};
    if (m.seed) j["seed"] = *m.seed;
    return j;
}

inline void add_input(StageManifest& m, const std::string& path) {
    m.inputs[path] = sha256_file_hex(path);
}

inline void add_output(StageManifest& m, const std::string& path) {
    m.outputs[path] = sha256_file_hex(path);
}

inline std::string manifest_path_for(const std::string& output_path) {
    return output_path + ".manifest.json";
}

inline void write_manifest(const StageManifest& m, const std::string& path) {
    write_text_file(path, to_json(m).dump(2) + "\n");
}

}  // namespace csa

#include "convgp/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "convgp/errors.hpp"

namespace convgp {

namespace {
using nlohmann::json;
}

void write_manifest(const std::string& path, const RunManifest& m) {
    json root;
    root["command"] = m.command;
    root["config_path"] = m.config_path;
    root["config_digest"] = m.config_digest;
    root["data_paths"] = m.data_paths;
    root["subset_sizes"] = m.subset_sizes;
    root["seed"] = m.seed;
    root["parallelism"] = m.parallelism;
    if (m.jitter >= 0.0) root["jitter"] = m.jitter;
    root["timings_seconds"] = m.timings_seconds;
    root["metrics"] = m.metrics;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("manifest: cannot open for writing: " + path);
    out << root.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("manifest: cannot open: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw DataError("manifest: parse error in " + path + ": " + e.what());
    }
    RunManifest m;
    m.command = root.value("command", "");
    m.config_path = root.value("config_path", "");
    m.config_digest = root.value("config_digest", "");
    if (root.contains("data_paths")) {
        m.data_paths = root["data_paths"].get<std::map<std::string, std::string>>();
    }
    if (root.contains("subset_sizes")) {
        m.subset_sizes = root["subset_sizes"].get<std::map<std::string, long long>>();
    }
    m.seed = root.value("seed", 0ull);
    m.parallelism = root.value("parallelism", 1);
    m.jitter = root.value("jitter", -1.0);
    if (root.contains("timings_seconds")) {
        m.timings_seconds = root["timings_seconds"].get<std::map<std::string, double>>();
    }
    if (root.contains("metrics")) {
        m.metrics = root["metrics"].get<std::map<std::string, double>>();
    }
    return m;
}

}  // namespace convgp

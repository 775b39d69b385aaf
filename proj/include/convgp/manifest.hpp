#pragma once

#include <map>
#include <string>

namespace convgp {

/// Record of one CLI run: everything needed to reproduce it exactly.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_digest;
    std::map<std::string, std::string> data_paths;
    std::map<std::string, long long> subset_sizes;
    unsigned long long seed = 0;
    int parallelism = 1;
    double jitter = -1.0;  // < 0 when no solve happened
    std::map<std::string, double> timings_seconds;
    std::map<std::string, double> metrics;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

}  // namespace convgp

#pragma once

#include <string>
#include <utility>

#include "convgp/arch.hpp"

namespace convgp {

struct KernelConfig {
    ArchitectureSpec arch;
    Hyperparameters hyper;
    std::string name;
};

/// JSON schema: sigma_b_sq, sigma_w_sq, nonlinearity (relu|erf), fan_in_mode
/// (channels_only|channels_and_filter), relu_prefactor (standard|paper-literal),
/// layers: list of {filter: int or [h, w], stride, padding (same|valid),
/// skip_span?}. The dense readout is implicit and always last.
KernelConfig load_config(const std::string& path);
KernelConfig parse_config(const std::string& json_text, const std::string& origin);

/// Canonical JSON for a configuration (used for digests and search logs).
std::string serialize_config(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                             const std::string& name = "");

/// FNV-1a 64-bit content hash, 16 hex digits. Pins a run to the exact
/// configuration bytes in manifests and search logs.
std::string digest_bytes(const std::string& bytes);
std::string digest_file(const std::string& path);

}  // namespace convgp

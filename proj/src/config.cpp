#include "convgp/config.hpp"

#include <fstream>

#include <json.hpp>

namespace convgp {

namespace {

using nlohmann::json;

Padding parse_padding(const std::string& s, const std::string& origin) {
    if (s == "same") return Padding::kSame;
    if (s == "valid") return Padding::kValid;
    throw ConfigError(origin + ": unknown padding '" + s + "'");
}

Nonlinearity parse_nonlinearity(const std::string& s, const std::string& origin) {
    if (s == "relu") return Nonlinearity::kRelu;
    if (s == "erf") return Nonlinearity::kErf;
    throw ConfigError(origin + ": unknown nonlinearity '" + s + "'");
}

FanInMode parse_fan_in_mode(const std::string& s, const std::string& origin) {
    if (s == "channels_only") return FanInMode::kChannelsOnly;
    if (s == "channels_and_filter") return FanInMode::kChannelsAndFilter;
    throw ConfigError(origin + ": unknown fan_in_mode '" + s + "'");
}

ReluPrefactor parse_prefactor(const std::string& s, const std::string& origin) {
    if (s == "standard") return ReluPrefactor::kStandard;
    if (s == "paper-literal") return ReluPrefactor::kPaperLiteral;
    throw ConfigError(origin + ": unknown relu_prefactor '" + s + "'");
}

}  // namespace

KernelConfig parse_config(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": JSON parse error: " + e.what());
    }

    try {
        KernelConfig config;
        config.name = root.value("name", "");
        config.hyper.sigma_b_sq = root.at("sigma_b_sq").get<double>();
        config.hyper.sigma_w_sq = root.at("sigma_w_sq").get<double>();
        config.arch.nonlinearity =
            parse_nonlinearity(root.value("nonlinearity", "relu"), origin);
        config.hyper.fan_in_mode =
            parse_fan_in_mode(root.value("fan_in_mode", "channels_only"), origin);
        config.hyper.relu_prefactor =
            parse_prefactor(root.value("relu_prefactor", "standard"), origin);

        if (!root.contains("layers") || !root["layers"].is_array()) {
            throw ConfigError(origin + ": missing 'layers' array");
        }
        for (const json& spec : root["layers"]) {
            LayerSpec layer;
            const json& filter = spec.at("filter");
            if (filter.is_array()) {
                layer.filter_h = filter.at(0).get<int>();
                layer.filter_w = filter.at(1).get<int>();
            } else {
                layer.filter_h = layer.filter_w = filter.get<int>();
            }
            layer.stride = spec.value("stride", 1);
            layer.padding = parse_padding(spec.value("padding", "same"), origin);
            if (spec.contains("skip_span")) {
                layer.kind = LayerKind::kConvWithSkip;
                layer.skip_span = spec["skip_span"].get<int>();
            }
            config.arch.conv_layers.push_back(layer);
        }

        if (config.hyper.sigma_b_sq < 0.0) throw ConfigError(origin + ": sigma_b_sq < 0");
        if (!(config.hyper.sigma_w_sq > 0.0)) throw ConfigError(origin + ": sigma_w_sq <= 0");
        return config;
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

KernelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, path);
}

std::string serialize_config(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                             const std::string& name) {
    json root;
    if (!name.empty()) root["name"] = name;
    root["sigma_b_sq"] = hyper.sigma_b_sq;
    root["sigma_w_sq"] = hyper.sigma_w_sq;
    root["nonlinearity"] = to_string(arch.nonlinearity);
    root["fan_in_mode"] = to_string(hyper.fan_in_mode);
    root["relu_prefactor"] = to_string(hyper.relu_prefactor);
    root["layers"] = json::array();
    for (const LayerSpec& layer : arch.conv_layers) {
        json spec;
        if (layer.filter_h == layer.filter_w) {
            spec["filter"] = layer.filter_h;
        } else {
            spec["filter"] = {layer.filter_h, layer.filter_w};
        }
        spec["stride"] = layer.stride;
        spec["padding"] = to_string(layer.padding);
        if (layer.kind == LayerKind::kConvWithSkip) spec["skip_span"] = layer.skip_span;
        root["layers"].push_back(spec);
    }
    return root.dump(2);
}

std::string digest_bytes(const std::string& bytes) {
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for digest: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return digest_bytes(bytes);
}

}  // namespace convgp

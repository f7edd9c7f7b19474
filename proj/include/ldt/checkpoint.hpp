#pragma once

#include <filesystem>
#include <string>

#include "ldt/io.hpp"
#include "ldt/nn.hpp"

namespace ldt {

inline json to_json(const ModelConfig& cfg) {
    return json{{"hidden_size", cfg.hidden_size},   {"num_layers", cfg.num_layers},
                {"input_dim", cfg.input_dim},       {"output_dim", cfg.output_dim},
                {"static_dim", cfg.static_dim},     {"rng_seed", cfg.rng_seed},
                {"use_forget_gate", cfg.use_forget_gate}};
}

inline ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.hidden_size = j.at("hidden_size").get<int>();
    cfg.num_layers = j.at("num_layers").get<int>();
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.output_dim = j.at("output_dim").get<int>();
    cfg.static_dim = j.at("static_dim").get<int>();
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    cfg.use_forget_gate = j.value("use_forget_gate", true);
    cfg.validate();
    return cfg;
}

/// Versioned model checkpoint. Numbers are emitted in shortest round-trip
/// decimal form, so save/load reproduces every parameter bit-exactly.
inline json checkpoint_to_json(const LstmParams& params, const json& metadata = json::object()) {
    json tensors = json::object();
    for (const auto& ref : tensor_refs(params)) {
        json t;
        t["rows"] = ref.rows;
        t["cols"] = ref.cols;
        t["data"] = std::vector<double>(ref.data, ref.data + ref.size());
        tensors[ref.name] = std::move(t);
    }
    return json{{"format_version", 1},
                {"kind", "ldt-model"},
                {"config", to_json(params.config)},
                {"rng_seed", params.config.rng_seed},
                {"metadata", metadata},
                {"tensors", std::move(tensors)}};
}

struct Checkpoint {
    LstmParams params;
    json metadata;
};

inline Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("kind", "") != "ldt-model")
        throw DataError("not a model checkpoint");
    if (j.value("format_version", 0) != 1)
        throw DataError("unsupported checkpoint format_version");
    Checkpoint ck;
    ck.params = LstmParams::zeros(model_config_from_json(j.at("config")));
    ck.metadata = j.value("metadata", json::object());
    const auto& tensors = j.at("tensors");
    for (auto& ref : tensor_refs(ck.params)) {
        if (!tensors.contains(ref.name))
            throw DataError("checkpoint missing tensor " + ref.name);
        const auto& t = tensors.at(ref.name);
        if (t.at("rows").get<Eigen::Index>() != ref.rows ||
            t.at("cols").get<Eigen::Index>() != ref.cols)
            throw ShapeError("checkpoint tensor " + ref.name + " has wrong shape");
        const auto data = t.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(data.size()) != ref.size())
            throw ShapeError("checkpoint tensor " + ref.name + " has wrong element count");
        std::copy(data.begin(), data.end(), ref.data);
    }
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const LstmParams& params,
                            const json& metadata = json::object()) {
    write_json_file(path, checkpoint_to_json(params, metadata));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json_file(path));
}

} // namespace ldt

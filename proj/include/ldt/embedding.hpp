#pragma once

#include <string>
#include <vector>

#include "ldt/cluster.hpp"
#include "ldt/data.hpp"
#include "ldt/io.hpp"
#include "ldt/nn.hpp"

namespace ldt {

enum class EmbedMode { last, all };

inline EmbedMode embed_mode_from_name(const std::string& name) {
    if (name == "last") return EmbedMode::last;
    if (name == "all") return EmbedMode::all;
    throw ConfigError("unknown embedding mode: " + name + " (expected last | all)");
}

inline std::string embed_mode_name(EmbedMode m) { return m == EmbedMode::last ? "last" : "all"; }

/// Which state tensor represents the entity: the hidden output h, the raw
/// cell state, or their concatenation.
enum class EmbedSource { h, cell, h_and_cell };

inline EmbedSource embed_source_from_name(const std::string& name) {
    if (name == "h") return EmbedSource::h;
    if (name == "s_c") return EmbedSource::cell;
    if (name == "h++s_c") return EmbedSource::h_and_cell;
    throw ConfigError("unknown embed source: " + name + " (expected h | s_c | h++s_c)");
}

inline std::string embed_source_name(EmbedSource s) {
    switch (s) {
        case EmbedSource::h: return "h";
        case EmbedSource::cell: return "s_c";
        default: return "h++s_c";
    }
}

/// State vector of a trained model after consuming a series prefix,
/// optionally concatenated with the entity's standardized statics.
struct Embedding {
    std::string fips;
    int pit_days = 0;
    EmbedMode mode = EmbedMode::last;
    EmbedSource source = EmbedSource::h;
    Eigen::VectorXd hidden_part;
    Eigen::VectorXd static_part; // size 0 when statics are excluded
    Eigen::VectorXd combined;    // [hidden_part, w_static * static_part]
    double static_weight = 1.0;
};

/// Concatenate hidden and (weighted) static parts.
inline Eigen::VectorXd combine_embedding(const Eigen::VectorXd& hidden_part,
                                         const Eigen::VectorXd& static_part,
                                         double static_weight = 1.0) {
    Eigen::VectorXd out(hidden_part.size() + static_part.size());
    out.head(hidden_part.size()) = hidden_part;
    if (static_part.size() > 0)
        out.tail(static_part.size()) = static_weight * static_part;
    return out;
}

/// Feed the first pit_days days through the trained model (seeded from the
/// entity's statics when the model takes them) and capture the final state.
/// `last` = top layer only; `all` = every layer, bottom to top.
inline Embedding extract_embedding(const LstmParams& model, const EntityRecord& entity,
                                   int pit_days, EmbedMode mode,
                                   bool with_static = true, double static_weight = 1.0,
                                   EmbedSource source = EmbedSource::h) {
    if (pit_days < 1) throw ConfigError("pit_days must be >= 1");
    if (static_cast<std::size_t>(pit_days) > entity.series.days())
        throw DataError("entity " + entity.fips + " has " + std::to_string(entity.series.days()) +
                        " days, PIT " + std::to_string(pit_days) + " requested");

    std::vector<Eigen::VectorXd> inputs;
    for (int t = 0; t < pit_days; ++t)
        inputs.push_back(Eigen::Vector2d(entity.series.infections[static_cast<std::size_t>(t)],
                                         entity.series.deaths[static_cast<std::size_t>(t)]));
    const auto& cfg = model.config;
    const ForwardResult fwd = cfg.static_dim > 0
                                  ? lstm_forward_seeded(model, inputs, entity.statics)
                                  : lstm_forward(model, inputs, LstmState::zero(cfg));

    const auto layer_vec = [&](std::size_t l) -> Eigen::VectorXd {
        switch (source) {
            case EmbedSource::h: return fwd.final_state.h[l];
            case EmbedSource::cell: return fwd.final_state.c[l];
            default: {
                Eigen::VectorXd v(2 * cfg.hidden_size);
                v.head(cfg.hidden_size) = fwd.final_state.h[l];
                v.tail(cfg.hidden_size) = fwd.final_state.c[l];
                return v;
            }
        }
    };

    Embedding emb;
    emb.fips = entity.fips;
    emb.pit_days = pit_days;
    emb.mode = mode;
    emb.source = source;
    emb.static_weight = static_weight;
    if (mode == EmbedMode::last) {
        emb.hidden_part = layer_vec(fwd.final_state.h.size() - 1);
    } else {
        const auto per_layer = layer_vec(0).size();
        emb.hidden_part.resize(per_layer * static_cast<Eigen::Index>(fwd.final_state.h.size()));
        for (std::size_t l = 0; l < fwd.final_state.h.size(); ++l)
            emb.hidden_part.segment(static_cast<Eigen::Index>(l) * per_layer, per_layer) =
                layer_vec(l);
    }
    if (with_static) emb.static_part = entity.statics;
    emb.combined = combine_embedding(emb.hidden_part, emb.static_part, static_weight);
    return emb;
}

/// Provenance carried alongside cluster output files.
struct ClusterProvenance {
    int pit_days = 0;
    EmbedMode mode = EmbedMode::last;
    bool with_static = true;
};

struct EntityClusters {
    ClusterModel model;
    std::vector<std::string> fips; // row order of model.labels
    ClusterProvenance provenance;

    int label_of(const std::string& key) const {
        for (std::size_t i = 0; i < fips.size(); ++i)
            if (fips[i] == key) return model.labels[i];
        throw UsageError("entity " + key + " has no cluster label");
    }
};

/// Cluster the combined embedding vectors; every embedding must share the
/// same PIT/mode/dimension.
inline EntityClusters cluster_entities(const std::vector<Embedding>& embeddings,
                                       ClusterMethod method, int k = 3, std::uint64_t seed = 0,
                                       int restarts = 10) {
    if (embeddings.empty()) throw UsageError("no embeddings to cluster");
    const auto dim = embeddings.front().combined.size();
    for (const auto& e : embeddings) {
        if (e.combined.size() != dim)
            throw UsageError("mixed embedding dimensions: " + std::to_string(dim) + " vs " +
                             std::to_string(e.combined.size()) + " (" + e.fips + ")");
        if (e.pit_days != embeddings.front().pit_days || e.mode != embeddings.front().mode)
            throw UsageError("mixed embedding provenance (PIT/mode) in one clustering");
    }
    std::vector<Eigen::VectorXd> points;
    for (const auto& e : embeddings) points.push_back(e.combined);

    EntityClusters out;
    out.model = method == ClusterMethod::kmeans ? kmeans(points, k, restarts, 300, 1e-8, seed)
                                                : kmedoids(points, k, restarts, seed);
    for (const auto& e : embeddings) out.fips.push_back(e.fips);
    out.provenance.pit_days = embeddings.front().pit_days;
    out.provenance.mode = embeddings.front().mode;
    out.provenance.with_static = embeddings.front().static_part.size() > 0;
    return out;
}

// ---- JSON round-trip for embedding sets and cluster files ----

inline json embedding_set_to_json(const std::vector<Embedding>& embeddings) {
    if (embeddings.empty()) throw UsageError("empty embedding set");
    json entries = json::object();
    for (const auto& e : embeddings) {
        json entry;
        entry["hidden"] = std::vector<double>(e.hidden_part.data(),
                                              e.hidden_part.data() + e.hidden_part.size());
        entry["static"] = std::vector<double>(e.static_part.data(),
                                              e.static_part.data() + e.static_part.size());
        entries[e.fips] = std::move(entry);
    }
    return json{{"format_version", 1},
                {"kind", "ldt-embeddings"},
                {"pit", embeddings.front().pit_days},
                {"mode", embed_mode_name(embeddings.front().mode)},
                {"source", embed_source_name(embeddings.front().source)},
                {"with_static", embeddings.front().static_part.size() > 0},
                {"static_weight", embeddings.front().static_weight},
                {"entries", std::move(entries)}};
}

inline std::vector<Embedding> embedding_set_from_json(const json& j) {
    if (j.value("kind", "") != "ldt-embeddings") throw DataError("not an embedding set");
    std::vector<Embedding> out;
    const auto mode = embed_mode_from_name(j.at("mode").get<std::string>());
    const auto source = embed_source_from_name(j.value("source", "h"));
    const int pit = j.at("pit").get<int>();
    const double w = j.value("static_weight", 1.0);
    for (const auto& [fips, entry] : j.at("entries").items()) {
        Embedding e;
        e.fips = fips;
        e.pit_days = pit;
        e.mode = mode;
        e.source = source;
        e.static_weight = w;
        const auto hidden = entry.at("hidden").get<std::vector<double>>();
        const auto stat = entry.at("static").get<std::vector<double>>();
        e.hidden_part = Eigen::Map<const Eigen::VectorXd>(hidden.data(),
                                                          static_cast<Eigen::Index>(hidden.size()));
        e.static_part =
            Eigen::Map<const Eigen::VectorXd>(stat.data(), static_cast<Eigen::Index>(stat.size()));
        e.combined = combine_embedding(e.hidden_part, e.static_part, w);
        out.push_back(std::move(e));
    }
    if (out.empty()) throw DataError("embedding set has no entries");
    return out;
}

inline json clusters_to_json(const EntityClusters& clusters) {
    json labels = json::object();
    for (std::size_t i = 0; i < clusters.fips.size(); ++i)
        labels[clusters.fips[i]] = clusters.model.labels[i];
    json centers = json::array();
    for (const auto& c : clusters.model.centers)
        centers.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    json medoids = json::array();
    for (const int m : clusters.model.medoid_indices) medoids.push_back(clusters.fips[static_cast<std::size_t>(m)]);
    return json{{"format_version", 1},
                {"kind", "ldt-clusters"},
                {"method", cluster_method_name(clusters.model.method)},
                {"k", clusters.model.k},
                {"pit", clusters.provenance.pit_days},
                {"mode", embed_mode_name(clusters.provenance.mode)},
                {"with_static", clusters.provenance.with_static},
                {"labels", std::move(labels)},
                {"centers", std::move(centers)},
                {"medoid_fips", std::move(medoids)},
                {"inertia", clusters.model.inertia},
                {"seed", clusters.model.seed}};
}

inline EntityClusters clusters_from_json(const json& j) {
    if (j.value("kind", "") != "ldt-clusters") throw DataError("not a clusters file");
    EntityClusters out;
    out.model.method = cluster_method_from_name(j.at("method").get<std::string>());
    out.model.k = j.at("k").get<int>();
    out.model.inertia = j.at("inertia").get<double>();
    out.model.seed = j.at("seed").get<std::uint64_t>();
    out.provenance.pit_days = j.at("pit").get<int>();
    out.provenance.mode = embed_mode_from_name(j.at("mode").get<std::string>());
    out.provenance.with_static = j.at("with_static").get<bool>();
    for (const auto& [fips, label] : j.at("labels").items()) {
        out.fips.push_back(fips);
        out.model.labels.push_back(label.get<int>());
    }
    for (const auto& c : j.at("centers")) {
        const auto data = c.get<std::vector<double>>();
        out.model.centers.push_back(Eigen::Map<const Eigen::VectorXd>(
            data.data(), static_cast<Eigen::Index>(data.size())));
    }
    if (j.contains("medoid_fips")) {
        for (const auto& m : j.at("medoid_fips")) {
            const auto key = m.get<std::string>();
            const auto it = std::find(out.fips.begin(), out.fips.end(), key);
            if (it == out.fips.end()) throw DataError("medoid " + key + " missing from labels");
            out.model.medoid_indices.push_back(static_cast<int>(it - out.fips.begin()));
        }
    }
    return out;
}

} // namespace ldt

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ldt/data.hpp"
#include "ldt/io.hpp"

namespace ldt {

/// Standardization stats saved next to the entity records so new entities
/// can be projected into the same feature space.
struct FeatureManifest {
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> stdevs;
    std::vector<std::string> dropped_constant;
    long imputations = 0;
};

inline json to_json(const FeatureManifest& m) {
    return json{{"names", m.names},
                {"means", m.means},
                {"stdevs", m.stdevs},
                {"dropped_constant", m.dropped_constant},
                {"imputations", m.imputations}};
}

inline FeatureManifest feature_manifest_from_json(const json& j) {
    FeatureManifest m;
    m.names = j.at("names").get<std::vector<std::string>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.stdevs = j.at("stdevs").get<std::vector<double>>();
    if (j.contains("dropped_constant"))
        m.dropped_constant = j.at("dropped_constant").get<std::vector<std::string>>();
    if (j.contains("imputations")) m.imputations = j.at("imputations").get<long>();
    return m;
}

inline json entity_to_json(const EntityRecord& r) {
    json j{{"format_version", 1},
           {"fips", r.fips},
           {"start_date", to_iso(r.series.start_date)},
           {"population", r.series.population},
           {"normalized", r.series.normalized},
           {"cumulative_infections", r.series.infections},
           {"cumulative_deaths", r.series.deaths}};
    j["statics"] = std::vector<double>(r.statics.data(), r.statics.data() + r.statics.size());
    if (r.group >= 0) j["group"] = r.group;
    return j;
}

inline EntityRecord entity_from_json(const json& j) {
    EntityRecord r;
    r.fips = j.at("fips").get<std::string>();
    r.series.fips = r.fips;
    r.series.start_date = parse_iso(j.at("start_date").get<std::string>());
    r.series.population = j.at("population").get<double>();
    r.series.normalized = j.at("normalized").get<bool>();
    r.series.infections = j.at("cumulative_infections").get<std::vector<double>>();
    r.series.deaths = j.at("cumulative_deaths").get<std::vector<double>>();
    const auto statics = j.at("statics").get<std::vector<double>>();
    r.statics = Eigen::Map<const Eigen::VectorXd>(statics.data(),
                                                  static_cast<Eigen::Index>(statics.size()));
    r.group = j.value("group", -1);
    if (r.series.infections.size() != r.series.deaths.size())
        throw DataError("entity " + r.fips + ": channel lengths differ");
    return r;
}

/// Write one JSON record per entity plus the feature manifest.
inline void write_entity_store(const std::filesystem::path& dir,
                               const std::vector<EntityRecord>& records,
                               const FeatureManifest& manifest) {
    std::filesystem::create_directories(dir);
    for (const auto& r : records)
        write_json_file(dir / (r.fips + ".json"), entity_to_json(r));
    write_json_file(dir / "features_manifest.json", to_json(manifest));
}

struct EntityStore {
    std::vector<EntityRecord> records; // sorted by fips
    FeatureManifest manifest;

    const EntityRecord& by_fips(const std::string& fips) const {
        for (const auto& r : records)
            if (r.fips == fips) return r;
        throw DataError("entity not found in store: " + fips);
    }

    bool contains(const std::string& fips) const {
        for (const auto& r : records)
            if (r.fips == fips) return true;
        return false;
    }
};

inline EntityStore load_entity_store(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("entity store directory not found: " + dir.string());
    EntityStore store;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        if (entry.path().filename() == "features_manifest.json") {
            store.manifest = feature_manifest_from_json(read_json_file(entry.path()));
            continue;
        }
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) store.records.push_back(entity_from_json(read_json_file(f)));
    if (store.records.empty()) throw DataError("entity store is empty: " + dir.string());
    return store;
}

} // namespace ldt

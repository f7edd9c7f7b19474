#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldt/csv.hpp"
#include "ldt/dates.hpp"
#include "ldt/errors.hpp"

namespace ldt {

/// 5-digit state+county FIPS code, the join key across every data source.
/// Accepts shorter digit strings (or float-formatted cells like "1001.0")
/// and zero-pads to 5.
inline std::string normalize_fips(const std::string& raw) {
    std::string digits;
    for (const char c : raw) {
        if (c == '.') break; // "39035.0"
        if (c >= '0' && c <= '9') digits.push_back(c);
        else if (c != ' ' && c != '"')
            throw DataError("invalid FIPS code: '" + raw + "'");
    }
    if (digits.empty() || digits.size() > 5)
        throw DataError("invalid FIPS code: '" + raw + "'");
    digits.insert(digits.begin(), 5 - digits.size(), '0');
    if (digits[0] == '0' && digits[1] == '0')
        throw DataError("FIPS state prefix must be nonzero: '" + raw + "'");
    return digits;
}

inline std::string fips_from_state_county(long state, long county) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02ld%03ld", state, county);
    return normalize_fips(buf);
}

inline std::string state_prefix(const std::string& fips) { return fips.substr(0, 2); }

/// Daily cumulative infection/death series for one entity, one value per
/// consecutive calendar day starting at start_date.
struct CaseSeries {
    std::string fips;
    CivilDate start_date{2020, 1, 1};
    std::vector<double> infections;
    std::vector<double> deaths;
    double population = 0.0;
    bool normalized = false;

    std::size_t days() const { return infections.size(); }
};

/// Raw per-source feature rows keyed by FIPS; NaN marks a missing cell.
struct FeatureTable {
    std::vector<std::string> names;
    std::map<std::string, Eigen::VectorXd> rows;
};

struct ParseReport {
    long rows_used = 0;
    long rows_skipped = 0;
    long duplicates = 0;
    std::vector<std::string> warnings;

    void warn(const std::string& msg) {
        if (warnings.size() < 200) warnings.push_back(msg);
    }
};

namespace detail {

// Table 1 value columns, pivoted across AGEGRP.
inline const std::vector<std::string>& census_value_columns() {
    static const std::vector<std::string> cols = {
        "TOT_POP", "TOT_MALE", "TOT_FEMALE", "WA_MALE", "WA_FEMALE", "BA_MALE",
        "BA_FEMALE", "AA_MALE", "AA_FEMALE", "TOM_MALE", "TOM_FEMALE"};
    return cols;
}

// Table 2 value columns.
inline const std::vector<std::string>& usda_value_columns() {
    static const std::vector<std::string> cols = {
        "Med_HH_Income_Percent_of_State_Total_2019", "Median_Household_Income_2019",
        "Unemployment_rate_2019", "Unemployment_rate_2020"};
    return cols;
}

} // namespace detail

/// Parse the Census ASRH county file: filter to the county summary level,
/// keep one reference year, and pivot AGEGRP rows into flat per-county
/// features named <column>_AG<group>.
///
/// year <= 0 selects the latest YEAR present in the file.
inline FeatureTable parse_census(std::istream& in, int year = 0, ParseReport* report = nullptr) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    CsvReader reader(in);
    const std::size_t col_sumlev = reader.column("SUMLEV");
    const std::size_t col_state = reader.column("STATE");
    const std::size_t col_county = reader.column("COUNTY");
    const std::size_t col_year = reader.column("YEAR");
    const std::size_t col_agegrp = reader.column("AGEGRP");
    std::vector<std::size_t> value_cols;
    for (const auto& name : detail::census_value_columns())
        value_cols.push_back(reader.column(name));

    struct Row {
        std::string fips;
        int year;
        int agegrp;
        std::vector<double> values;
    };
    std::vector<Row> rows;
    int max_year = 0;
    int max_agegrp = 0;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const auto sumlev = parse_number(fields[col_sumlev]);
        if (!sumlev || static_cast<int>(*sumlev) != 50) continue; // county summary level
        const auto st = parse_number(fields[col_state]);
        const auto cty = parse_number(fields[col_county]);
        const auto yr = parse_number(fields[col_year]);
        const auto ag = parse_number(fields[col_agegrp]);
        if (!st || !cty || !yr || !ag) {
            rep.rows_skipped += 1;
            rep.warn("census line " + std::to_string(reader.line()) + ": unparseable key field");
            continue;
        }
        Row row;
        row.fips = fips_from_state_county(static_cast<long>(*st), static_cast<long>(*cty));
        row.year = static_cast<int>(*yr);
        row.agegrp = static_cast<int>(*ag);
        bool bad = false;
        for (const std::size_t c : value_cols) {
            if (fields[c].empty()) {
                row.values.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const auto v = parse_number(fields[c]);
            if (!v) {
                bad = true;
                break;
            }
            row.values.push_back(*v);
        }
        if (bad) {
            rep.rows_skipped += 1;
            rep.warn("census line " + std::to_string(reader.line()) + ": unparseable numeric");
            continue;
        }
        max_year = std::max(max_year, row.year);
        max_agegrp = std::max(max_agegrp, row.agegrp);
        rows.push_back(std::move(row));
    }
    const int ref_year = year > 0 ? year : max_year;

    FeatureTable table;
    const auto& cols = detail::census_value_columns();
    for (int ag = 0; ag <= max_agegrp; ++ag)
        for (const auto& col : cols)
            table.names.push_back(col + "_AG" + std::to_string(ag));
    const std::size_t dim = table.names.size();
    const std::size_t per_group = cols.size();
    for (const auto& row : rows) {
        if (row.year != ref_year) continue;
        auto [it, inserted] = table.rows.try_emplace(
            row.fips, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim),
                                                std::numeric_limits<double>::quiet_NaN()));
        (void)inserted;
        const std::size_t base = static_cast<std::size_t>(row.agegrp) * per_group;
        for (std::size_t j = 0; j < per_group; ++j)
            it->second[static_cast<Eigen::Index>(base + j)] = row.values[j];
        rep.rows_used += 1;
    }
    return table;
}

/// Parse the USDA Economic Research Service county file (Table 2 columns).
/// Blank numeric cells become NaN and are imputed downstream.
inline FeatureTable parse_usda(std::istream& in, ParseReport* report = nullptr) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    CsvReader reader(in);
    const std::size_t col_fips = reader.column("FIPS_Code");
    std::vector<std::size_t> value_cols;
    for (const auto& name : detail::usda_value_columns())
        value_cols.push_back(reader.column(name));

    FeatureTable table;
    table.names = detail::usda_value_columns();
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields[col_fips].empty()) {
            rep.rows_skipped += 1;
            continue;
        }
        std::string fips;
        try {
            fips = normalize_fips(fields[col_fips]);
        } catch (const DataError&) {
            rep.rows_skipped += 1;
            rep.warn("usda line " + std::to_string(reader.line()) + ": bad FIPS");
            continue;
        }
        Eigen::VectorXd values(static_cast<Eigen::Index>(value_cols.size()));
        bool bad = false;
        for (std::size_t j = 0; j < value_cols.size(); ++j) {
            const auto& cell = fields[value_cols[j]];
            if (cell.empty()) {
                values[static_cast<Eigen::Index>(j)] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const auto v = parse_number(cell);
            if (!v) {
                bad = true;
                break;
            }
            values[static_cast<Eigen::Index>(j)] = *v;
        }
        if (bad) {
            rep.rows_skipped += 1;
            rep.warn("usda line " + std::to_string(reader.line()) + ": unparseable numeric");
            continue;
        }
        if (!table.rows.insert_or_assign(fips, values).second) rep.duplicates += 1;
        rep.rows_used += 1;
    }
    return table;
}

/// One daily report file: the date comes from the file name (MM-DD-YYYY.csv).
struct DailyFile {
    std::string name;
    std::istream* stream = nullptr;
};

/// Assemble raw cumulative series from per-day report files. Days between
/// the global first and last file date are forward-filled from the last
/// known value; days before an entity's first report are zero.
inline std::map<std::string, CaseSeries> parse_daily_cases(const std::vector<DailyFile>& files,
                                                           ParseReport* report = nullptr) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    if (files.empty()) throw DataError("no daily case files supplied");

    struct DayValues {
        long long day;
        std::map<std::string, std::pair<double, double>> by_fips;
    };
    std::vector<DayValues> days;
    for (const auto& file : files) {
        const auto date = parse_mmddyyyy_stem(file.name);
        if (!date) throw DataError("no MM-DD-YYYY date in file name: " + file.name);
        DayValues dv;
        dv.day = to_day_number(*date);
        CsvReader reader(*file.stream);
        const std::size_t col_fips = reader.column("FIPS");
        const std::size_t col_conf = reader.column("Confirmed");
        const std::size_t col_deaths = reader.column("Deaths");
        std::vector<std::string> fields;
        while (reader.next(fields)) {
            if (fields[col_fips].empty()) {
                rep.rows_skipped += 1;
                continue;
            }
            std::string fips;
            try {
                fips = normalize_fips(fields[col_fips]);
            } catch (const DataError&) {
                rep.rows_skipped += 1;
                continue;
            }
            const auto conf = parse_number(fields[col_conf]);
            const auto dead = parse_number(fields[col_deaths]);
            if (!conf || !dead) {
                rep.rows_skipped += 1;
                rep.warn(file.name + " line " + std::to_string(reader.line()) +
                         ": unparseable count");
                continue;
            }
            if (dv.by_fips.count(fips)) {
                rep.duplicates += 1;
                rep.warn(file.name + ": duplicate FIPS " + fips + " (last wins)");
            }
            dv.by_fips[fips] = {*conf, *dead}; // last wins
            rep.rows_used += 1;
        }
        days.push_back(std::move(dv));
    }
    std::sort(days.begin(), days.end(),
              [](const DayValues& a, const DayValues& b) { return a.day < b.day; });
    const long long first_day = days.front().day;
    const long long last_day = days.back().day;
    const auto n_days = static_cast<std::size_t>(last_day - first_day + 1);

    std::set<std::string> all_fips;
    for (const auto& dv : days)
        for (const auto& [fips, _] : dv.by_fips) all_fips.insert(fips);

    std::map<std::string, CaseSeries> out;
    for (const auto& fips : all_fips) {
        CaseSeries s;
        s.fips = fips;
        s.start_date = from_day_number(first_day);
        s.infections.assign(n_days, 0.0);
        s.deaths.assign(n_days, 0.0);
        out.emplace(fips, std::move(s));
    }
    std::size_t file_idx = 0;
    std::map<std::string, std::pair<double, double>> current;
    for (std::size_t d = 0; d < n_days; ++d) {
        while (file_idx < days.size() && days[file_idx].day == first_day + static_cast<long long>(d)) {
            for (const auto& [fips, vals] : days[file_idx].by_fips) current[fips] = vals;
            ++file_idx;
        }
        for (const auto& [fips, vals] : current) {
            auto& s = out.at(fips);
            s.infections[d] = vals.first;
            s.deaths[d] = vals.second;
        }
    }
    return out;
}

/// Hold the running maximum through reporting drops: out_t = max(out_{t-1},
/// in_t). Non-decreasing and idempotent.
inline std::vector<double> repair_monotone(const std::vector<double>& series) {
    if (series.empty()) throw DataError("repair_monotone: empty series");
    std::vector<double> out(series.size());
    double running = series.front();
    for (std::size_t i = 0; i < series.size(); ++i) {
        running = std::max(running, series[i]);
        out[i] = running;
    }
    return out;
}

inline void repair_series(CaseSeries& s) {
    s.infections = repair_monotone(s.infections);
    s.deaths = repair_monotone(s.deaths);
}

/// Divide both channels by the population, marking the series normalized.
inline CaseSeries normalize_by_population(const CaseSeries& series, double population) {
    if (!(population > 0.0)) throw DataError("population must be positive");
    CaseSeries out = series;
    out.population = population;
    for (auto& v : out.infections) v /= population;
    for (auto& v : out.deaths) v /= population;
    out.normalized = true;
    return out;
}

/// Assembled static feature set: one shared name ordering, z-scored values
/// per entity, and the standardization stats for reuse on new entities.
struct StaticFeatures {
    std::vector<std::string> names;
    std::map<std::string, Eigen::VectorXd> values; // standardized
    Eigen::VectorXd means;
    Eigen::VectorXd stdevs;
    std::vector<std::string> dropped_constant;
    long imputations = 0;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(names.size()); }
};

/// Join census and USDA features for the requested keys, impute missing
/// cells with the per-feature median over the included entities, z-score
/// each feature (population stdev), and drop constant features.
inline StaticFeatures build_static_matrix(const FeatureTable& census, const FeatureTable& usda,
                                          const std::vector<std::string>& keys) {
    if (keys.empty()) throw UsageError("build_static_matrix: no keys requested");
    std::vector<std::string> missing;
    for (const auto& key : keys)
        if (!census.rows.count(key) && !usda.rows.count(key)) missing.push_back(key);
    if (!missing.empty()) {
        std::string msg = "keys missing from both static sources:";
        for (const auto& k : missing) msg += " " + k;
        throw DataError(msg);
    }

    std::vector<std::string> names = census.names;
    names.insert(names.end(), usda.names.begin(), usda.names.end());
    const auto n = static_cast<Eigen::Index>(keys.size());
    const auto d = static_cast<Eigen::Index>(names.size());
    Eigen::MatrixXd matrix =
        Eigen::MatrixXd::Constant(n, d, std::numeric_limits<double>::quiet_NaN());
    const auto census_dim = static_cast<Eigen::Index>(census.names.size());
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& key = keys[static_cast<std::size_t>(r)];
        if (const auto it = census.rows.find(key); it != census.rows.end())
            matrix.block(r, 0, 1, census_dim) = it->second.transpose();
        if (const auto it = usda.rows.find(key); it != usda.rows.end())
            matrix.block(r, census_dim, 1, d - census_dim) = it->second.transpose();
    }

    StaticFeatures out;
    // median imputation per feature
    for (Eigen::Index c = 0; c < d; ++c) {
        std::vector<double> present;
        for (Eigen::Index r = 0; r < n; ++r)
            if (!std::isnan(matrix(r, c))) present.push_back(matrix(r, c));
        double median = 0.0;
        if (!present.empty()) {
            std::sort(present.begin(), present.end());
            const std::size_t mid = present.size() / 2;
            median = present.size() % 2 ? present[mid]
                                        : 0.5 * (present[mid - 1] + present[mid]);
        }
        for (Eigen::Index r = 0; r < n; ++r)
            if (std::isnan(matrix(r, c))) {
                matrix(r, c) = median;
                out.imputations += 1;
            }
    }

    // z-score, dropping constant features
    std::vector<Eigen::Index> kept;
    std::vector<double> means, stdevs;
    for (Eigen::Index c = 0; c < d; ++c) {
        const double mean = matrix.col(c).mean();
        const double var = (matrix.col(c).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        if (sd < 1e-12) {
            out.dropped_constant.push_back(names[static_cast<std::size_t>(c)]);
            continue;
        }
        kept.push_back(c);
        means.push_back(mean);
        stdevs.push_back(sd);
    }
    out.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    out.stdevs =
        Eigen::Map<Eigen::VectorXd>(stdevs.data(), static_cast<Eigen::Index>(stdevs.size()));
    for (const auto c : kept) out.names.push_back(names[static_cast<std::size_t>(c)]);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j)
            v[static_cast<Eigen::Index>(j)] =
                (matrix(r, kept[j]) - out.means[static_cast<Eigen::Index>(j)]) /
                out.stdevs[static_cast<Eigen::Index>(j)];
        out.values[keys[static_cast<std::size_t>(r)]] = std::move(v);
    }
    return out;
}

/// Fully assembled entity: repaired+normalized series plus standardized
/// statics, with the synthetic ground-truth group when one exists.
struct EntityRecord {
    std::string fips;
    CaseSeries series;
    Eigen::VectorXd statics;
    int group = -1;
};

} // namespace ldt

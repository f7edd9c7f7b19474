#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "ldt/errors.hpp"

namespace ldt {

/// Proleptic Gregorian calendar date. Stored as plain fields; arithmetic
/// goes through day numbers (days since 1970-01-01).
struct CivilDate {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31

    friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

/// Days since 1970-01-01 (Howard Hinnant's days_from_civil).
inline long long to_day_number(const CivilDate& d) {
    long long y = d.year;
    y -= d.month <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (static_cast<unsigned>(d.month) + (d.month > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d.day) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

inline CivilDate from_day_number(long long z) {
    z += 719468;
    const long long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long long y = static_cast<long long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline std::string to_iso(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

inline CivilDate parse_iso(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (std::sscanf(std::string(s).c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 || d > 31)
        throw DataError("unparseable ISO date: " + std::string(s));
    return CivilDate{y, m, d};
}

/// Parse the MM-DD-YYYY stem of a daily case file name ("04-01-2020.csv").
/// Returns nullopt when the name carries no such date.
inline std::optional<CivilDate> parse_mmddyyyy_stem(std::string_view name) {
    // strip directory and extension
    if (const auto slash = name.find_last_of("/\\"); slash != std::string_view::npos)
        name = name.substr(slash + 1);
    if (const auto dot = name.rfind('.'); dot != std::string_view::npos)
        name = name.substr(0, dot);
    int m = 0, d = 0, y = 0;
    if (std::sscanf(std::string(name).c_str(), "%d-%d-%d", &m, &d, &y) != 3)
        return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > 31 || y < 1000)
        return std::nullopt;
    return CivilDate{y, m, d};
}

} // namespace ldt

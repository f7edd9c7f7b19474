#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ldt/errors.hpp"

namespace ldt {

/// Read one CSV record (RFC-4180 style quoting, CRLF tolerant). Returns
/// false at end of stream. A quoted field may contain commas, doubled
/// quotes, and newlines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int ch;
    while ((ch = in.get()) != std::char_traits<char>::eof()) {
        saw_any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else {
            field.push_back(c);
        }
    }
    if (!saw_any) return false;
    fields.push_back(std::move(field));
    return true;
}

/// Header-indexed CSV reader over a stream.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {
        if (!read_csv_record(in_, header_))
            throw DataError("empty CSV input");
        // strip a UTF-8 BOM if present
        if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0)
            header_[0].erase(0, 3);
        for (std::size_t i = 0; i < header_.size(); ++i)
            index_[header_[i]] = i;
        line_ = 1;
    }

    const std::vector<std::string>& header() const { return header_; }

    bool has_column(const std::string& name) const { return index_.count(name) > 0; }

    /// Index of a mandatory column; throws a schema error naming the column.
    std::size_t column(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end())
            throw DataError("missing mandatory column: " + name);
        return it->second;
    }

    /// Next data row. Rows shorter than the header are padded with empties.
    bool next(std::vector<std::string>& row) {
        if (!read_csv_record(in_, row)) return false;
        ++line_;
        while (row.size() < header_.size()) row.emplace_back();
        return true;
    }

    /// 1-based line number of the row most recently returned by next().
    long line() const { return line_; }

private:
    std::istream& in_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> index_;
    long line_ = 0;
};

/// Parse a numeric cell. Tolerates surrounding spaces and thousands
/// separators ("1,249,352" arrives as one field when quoted).
inline std::optional<double> parse_number(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (const char c : s) {
        if (c == ',' || c == ' ' || c == '"') continue;
        cleaned.push_back(c);
    }
    if (cleaned.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = cleaned.data();
    const char* end = begin + cleaned.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

/// Shortest round-trip decimal form of a double. Used for every CSV the
/// toolkit writes so reruns are byte-identical.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

/// Minimal CSV writer; quotes only when a field needs it.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            write_field(fields[i]);
        }
        out_ << '\n';
    }

private:
    void write_field(const std::string& f) {
        if (f.find_first_of(",\"\n\r") == std::string::npos) {
            out_ << f;
            return;
        }
        out_ << '"';
        for (const char c : f) {
            if (c == '"') out_ << "\"\"";
            else out_ << c;
        }
        out_ << '"';
    }

    std::ostream& out_;
};

} // namespace ldt

#pragma once

// Result tables, CSV text and hashing.

#include <gcslab/error.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gcslab::harness {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCsvSchema = "gcslab-results/1";

inline std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }

// One row per grid cell. Missing values stay empty.
class Table
{
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns))
    {
        for (std::size_t i = 0; i < columns_.size(); ++i) index_[columns_[i]] = i;
    }

    class Row
    {
    public:
        explicit Row(const Table* t) : t_(t), cells_(t->columns_.size()) {}

        Row& set(const std::string& col, const std::string& v)
        {
            const auto it = t_->index_.find(col);
            require(it != t_->index_.end(), "Table: unknown column " + col);
            std::string s = v;
            for (char& c : s) {
                if (c == ',' || c == '\n' || c == '\r') c = ';';   // no quoting in this format
            }
            cells_[it->second] = std::move(s);
            return *this;
        }
        Row& set(const std::string& col, double v) { return set(col, fmt(v)); }
        Row& set(const std::string& col, std::size_t v) { return set(col, fmt(v)); }
        Row& set(const std::string& col, bool v) { return set(col, fmt(v)); }
        Row& set(const std::string& col, const char* v) { return set(col, std::string(v)); }

        const std::vector<std::string>& cells() const { return cells_; }

    private:
        static void require(bool c, const std::string& m) { gcslab::detail::require(c, m); }
        const Table* t_;
        std::vector<std::string> cells_;
    };

    Row row() const { return Row(this); }
    void add(const Row& r) { rows_.push_back(r.cells()); }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string get(std::size_t row, const std::string& col) const
    {
        return rows_.at(row).at(index_.at(col));
    }

    std::string to_csv(const std::string& comment) const
    {
        std::ostringstream os;
        os << "# " << comment << "\n";
        write_line(os, columns_);
        for (const auto& r : rows_) write_line(os, r);
        return os.str();
    }

private:
    static void write_line(std::ostringstream& os, const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            os << cells[i];
        }
        os << '\n';
    }

    std::vector<std::string> columns_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> rows_;
};

struct ParsedCsv
{
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;   // 1-based source line of each row

    std::optional<std::size_t> column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        return std::nullopt;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline ParsedCsv parse_csv(const std::string& text)
{
    ParsedCsv csv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            csv.comments.push_back(line);
            continue;
        }
        auto cells = split_csv_line(line);
        if (!have_header) {
            csv.columns = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != csv.columns.size()) {
            throw ParseError(lineno, "expected " + std::to_string(csv.columns.size()) + " fields, found " +
                                         std::to_string(cells.size()));
        }
        csv.rows.push_back(std::move(cells));
        csv.row_lines.push_back(lineno);
    }
    if (!have_header) throw ParseError(lineno == 0 ? 1 : lineno, "missing header line");
    return csv;
}

} // namespace gcslab::harness

#include "hdlss/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "hdlss/error.hpp"

namespace hdlss {

Column Column::numeric(std::string name, std::vector<std::optional<double>> cells) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Numeric;
    c.numbers = std::move(cells);
    return c;
}

Column Column::categorical(std::string name, std::vector<std::optional<std::string>> cells) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical;
    c.labels = std::move(cells);
    return c;
}

std::size_t Column::size() const {
    return kind == ColumnKind::Numeric ? numbers.size() : labels.size();
}

bool Column::is_missing(std::size_t row) const {
    return kind == ColumnKind::Numeric ? !numbers[row].has_value() : !labels[row].has_value();
}

std::size_t Column::missing_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < size(); ++i) count += is_missing(i) ? 1 : 0;
    return count;
}

std::optional<std::string> Column::text(std::size_t row) const {
    if (kind == ColumnKind::Categorical) return labels[row];
    if (!numbers[row]) return std::nullopt;
    return format_number(*numbers[row]);
}

Column Column::select_rows(std::span<const std::size_t> rows) const {
    Column out;
    out.name = name;
    out.kind = kind;
    if (kind == ColumnKind::Numeric) {
        out.numbers.reserve(rows.size());
        for (auto r : rows) out.numbers.push_back(numbers[r]);
    } else {
        out.labels.reserve(rows.size());
        for (auto r : rows) out.labels.push_back(labels[r]);
    }
    return out;
}

const Column* Table::find(const std::string& column) const {
    auto it = std::find_if(columns.begin(), columns.end(),
                           [&](const Column& c) { return c.name == column; });
    return it == columns.end() ? nullptr : &*it;
}

Column* Table::find(const std::string& column) {
    auto it = std::find_if(columns.begin(), columns.end(),
                           [&](const Column& c) { return c.name == column; });
    return it == columns.end() ? nullptr : &*it;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
    Table out;
    out.name = name;
    out.row_count = rows.size();
    out.columns.reserve(columns.size());
    for (const auto& c : columns) out.columns.push_back(c.select_rows(rows));
    return out;
}

Table Table::without_columns(std::span<const std::string> names) const {
    Table out;
    out.name = name;
    out.row_count = row_count;
    for (const auto& c : columns) {
        if (std::find(names.begin(), names.end(), c.name) == names.end()) out.columns.push_back(c);
    }
    return out;
}

void Table::validate() const {
    std::set<std::string> seen;
    for (const auto& c : columns) {
        if (c.size() != row_count) {
            throw Error(ErrorKind::SchemaMismatch, "ingest",
                        "column '" + c.name + "' has " + std::to_string(c.size()) +
                            " cells, expected " + std::to_string(row_count));
        }
        if (!seen.insert(c.name).second) {
            throw Error(ErrorKind::SchemaMismatch, "ingest", "duplicate column name '" + c.name + "'");
        }
        if (c.kind == ColumnKind::Numeric) {
            for (const auto& v : c.numbers) {
                if (v && !std::isfinite(*v)) {
                    throw Error(ErrorKind::SchemaMismatch, "ingest",
                                "non-finite value in column '" + c.name + "'");
                }
            }
        }
    }
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace hdlss

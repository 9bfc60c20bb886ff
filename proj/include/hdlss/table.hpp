#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hdlss {

enum class ColumnKind { Numeric, Categorical };

/// One typed column. Only the cell vector matching `kind` is populated.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::vector<std::optional<double>> numbers;
    std::vector<std::optional<std::string>> labels;

    static Column numeric(std::string name, std::vector<std::optional<double>> cells);
    static Column categorical(std::string name, std::vector<std::optional<std::string>> cells);

    std::size_t size() const;
    bool is_missing(std::size_t row) const;
    std::size_t missing_count() const;

    /// Cell rendered as text; numbers use the shortest round-trip form.
    std::optional<std::string> text(std::size_t row) const;

    Column select_rows(std::span<const std::size_t> rows) const;
};

/// Column-oriented table with per-cell missingness.
struct Table {
    std::string name;
    std::vector<Column> columns;
    std::size_t row_count = 0;

    const Column* find(const std::string& column) const;
    Column* find(const std::string& column);
    bool contains(const std::string& column) const { return find(column) != nullptr; }

    /// Rows in the given order (indices may repeat).
    Table select_rows(std::span<const std::size_t> rows) const;
    Table without_columns(std::span<const std::string> names) const;

    /// Throws SchemaMismatch when cell counts, names or finiteness are off.
    void validate() const;
};

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

}  // namespace hdlss

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdlss/table.hpp"

namespace hdlss::ingest {

struct CsvOptions {
    /// Cell texts treated as missing (after trimming surrounding blanks).
    std::vector<std::string> missing_tokens{""};
    /// Numeric codes treated as missing in every non-key numeric column,
    /// e.g. survey "refused" / "don't know" codes.
    std::vector<double> numeric_sentinels;
};

/// Reads an RFC-4180 style CSV with a header row. A column is numeric when
/// every non-missing cell parses as a finite real, otherwise categorical.
/// The table is named after the file stem.
Table load_csv(const std::filesystem::path& path, const std::string& key_column,
               const CsvOptions& options = {});

/// Parses CSV text already in memory; `name` becomes the table name.
Table parse_csv(const std::string& text, const std::string& name, const std::string& key_column,
                const std::string& source, const CsvOptions& options = {});

/// Keeps the first `max_rows` rows.
Table truncate(const Table& table, std::size_t max_rows);

/// Collapses repeated-key rows of an item table (one row per key per item)
/// into one row per key with 0/1 indicator columns `<item_column>_<value>`.
/// Indicator columns are ordered lexicographically by value; the remaining
/// non-key columns keep their first occurrence.
Table pivot_wide(const Table& table, const std::string& key_column, const std::string& item_column);

enum class JoinKind { Inner };

/// Inner join on `key_column`. Duplicate keys within a table keep their first
/// occurrence; rows with a missing key are ignored. Output rows are sorted by
/// key. Non-key column names shared by several tables are suffixed with
/// `.<table name>`.
Table merge_on_key(const std::vector<Table>& tables, const std::string& key_column,
                   JoinKind join = JoinKind::Inner);

struct SampleSpec {
    std::optional<std::size_t> max_rows_per_table;
    double keep_fraction = 1.0;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Retains floor(keep_fraction * rows) rows drawn uniformly without
/// replacement; retained rows keep their original order.
Table subsample(const Table& table, const SampleSpec& spec);

enum class LabelMode { Prototype, Refined };

struct LabelRule {
    LabelMode mode = LabelMode::Refined;
    double glucose_threshold = 126.0;  // mg/dL
    double hba1c_threshold = 6.5;      // percent
    std::string self_report_column = "DIQ010";
    std::string glucose_column = "LBXGLU";
    std::string hba1c_column = "LBXGH";
    double positive_code = 1.0;
    double negative_code = 2.0;

    void validate() const;
    /// Every column the rule names; all of them are withheld from features.
    std::vector<std::string> source_columns() const;
};

struct LabeledTable {
    Table features;
    std::vector<int> labels;
    /// Row of the input table each output row came from.
    std::vector<std::size_t> source_rows;
};

/// Derives the binary outcome and strips the label-source columns.
LabeledTable derive_label(const Table& table, const LabelRule& rule);

}  // namespace hdlss::ingest

#include "hdlss/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hdlss/error.hpp"
#include "hdlss/rng.hpp"

namespace hdlss::ingest {
namespace {

constexpr const char* kModule = "ingest";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_real(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') {
        text.remove_prefix(1);
        if (text.empty() || text.front() == '-') return std::nullopt;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

/// Splits CSV text into records of fields. Quoted fields may contain
/// separators, doubled quotes and line breaks.
std::vector<std::vector<std::string>> split_records(const std::string& text, const std::string& source) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        // a blank line is not a record
        if (!(record.size() == 1 && record.front().empty() && !field_started)) {
            records.push_back(std::move(record));
        }
        record.clear();
        field_started = false;
    };

    for (; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(ch);
                field_started = true;
        }
    }
    if (in_quotes) throw Error(ErrorKind::MalformedCsv, kModule, source + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

struct KeyCell {
    std::string canonical;
    std::optional<double> number;
};

std::optional<KeyCell> key_cell(const Column& column, std::size_t row) {
    if (column.is_missing(row)) return std::nullopt;
    if (column.kind == ColumnKind::Numeric) return KeyCell{format_number(*column.numbers[row]), column.numbers[row]};
    return KeyCell{*column.labels[row], parse_real(*column.labels[row])};
}

std::optional<double> numeric_cell(const Column& column, std::size_t row) {
    if (column.kind == ColumnKind::Numeric) return column.numbers[row];
    if (!column.labels[row]) return std::nullopt;
    return parse_real(*column.labels[row]);
}

}  // namespace

Table parse_csv(const std::string& text, const std::string& name, const std::string& key_column,
                const std::string& source, const CsvOptions& options) {
    auto records = split_records(text, source);
    if (records.empty()) throw Error(ErrorKind::MalformedCsv, kModule, source + ": missing header row");

    std::vector<std::string> header;
    for (const auto& h : records.front()) header.emplace_back(trim(h));
    {
        std::set<std::string> unique(header.begin(), header.end());
        if (unique.size() != header.size()) {
            throw Error(ErrorKind::MalformedCsv, kModule, source + ": duplicate column names in header");
        }
    }
    if (std::find(header.begin(), header.end(), key_column) == header.end()) {
        throw Error(ErrorKind::MissingKeyColumn, kModule, source + ": no column '" + key_column + "'");
    }

    const std::size_t rows = records.size() - 1;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != header.size()) {
            throw Error(ErrorKind::MalformedCsv, kModule,
                        source + ": record " + std::to_string(r + 1) + " has " +
                            std::to_string(records[r].size()) + " fields, header has " +
                            std::to_string(header.size()));
        }
    }

    auto is_missing_token = [&](std::string_view cell) {
        return std::find(options.missing_tokens.begin(), options.missing_tokens.end(), cell) !=
               options.missing_tokens.end();
    };

    Table table;
    table.name = name;
    table.row_count = rows;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::vector<std::optional<std::string>> raw(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            auto cell = trim(records[r + 1][c]);
            if (!is_missing_token(cell)) raw[r] = std::string(cell);
        }
        std::vector<std::optional<double>> parsed(rows);
        bool numeric = true;
        for (std::size_t r = 0; r < rows && numeric; ++r) {
            if (!raw[r]) continue;
            parsed[r] = parse_real(*raw[r]);
            numeric = parsed[r].has_value();
        }
        if (numeric) {
            if (header[c] != key_column) {
                for (auto& v : parsed) {
                    if (v && std::find(options.numeric_sentinels.begin(), options.numeric_sentinels.end(), *v) !=
                                 options.numeric_sentinels.end()) {
                        v.reset();
                    }
                }
            }
            table.columns.push_back(Column::numeric(header[c], std::move(parsed)));
        } else {
            table.columns.push_back(Column::categorical(header[c], std::move(raw)));
        }
    }
    return table;
}

Table load_csv(const std::filesystem::path& path, const std::string& key_column, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FileNotFound, kModule, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), path.stem().string(), key_column, path.string(), options);
}

Table truncate(const Table& table, std::size_t max_rows) {
    if (table.row_count <= max_rows) return table;
    std::vector<std::size_t> rows(max_rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return table.select_rows(rows);
}

Table pivot_wide(const Table& table, const std::string& key_column, const std::string& item_column) {
    const Column* key = table.find(key_column);
    if (!key) throw Error(ErrorKind::MissingKeyColumn, kModule, table.name + ": no column '" + key_column + "'");
    const Column* item = table.find(item_column);
    if (!item) {
        throw Error(ErrorKind::SchemaMismatch, kModule, table.name + ": no pivot column '" + item_column + "'");
    }

    std::vector<std::size_t> first_rows;
    std::unordered_map<std::string, std::size_t> group_of;
    std::vector<std::set<std::string>> items_per_group;
    std::set<std::string> vocabulary;
    for (std::size_t r = 0; r < table.row_count; ++r) {
        auto k = key_cell(*key, r);
        if (!k) continue;
        auto [it, inserted] = group_of.emplace(k->canonical, first_rows.size());
        if (inserted) {
            first_rows.push_back(r);
            items_per_group.emplace_back();
        }
        if (auto value = item->text(r)) {
            items_per_group[it->second].insert(*value);
            vocabulary.insert(*value);
        }
    }

    Table out = table.select_rows(first_rows);
    out.columns.erase(std::remove_if(out.columns.begin(), out.columns.end(),
                                     [&](const Column& c) { return c.name == item_column; }),
                      out.columns.end());
    for (const auto& value : vocabulary) {
        std::vector<std::optional<double>> cells(first_rows.size());
        for (std::size_t g = 0; g < first_rows.size(); ++g) cells[g] = items_per_group[g].count(value) ? 1.0 : 0.0;
        out.columns.push_back(Column::numeric(item_column + "_" + value, std::move(cells)));
    }
    out.validate();
    return out;
}

Table merge_on_key(const std::vector<Table>& tables, const std::string& key_column, JoinKind) {
    if (tables.empty()) throw Error(ErrorKind::EmptyIntersection, kModule, "no tables to merge");

    // key -> first row, per table
    std::vector<std::unordered_map<std::string, std::size_t>> index(tables.size());
    std::map<std::string, std::optional<double>> numeric_of;
    bool all_numeric = true;
    for (std::size_t t = 0; t < tables.size(); ++t) {
        const Column* key = tables[t].find(key_column);
        if (!key) {
            throw Error(ErrorKind::MissingKeyColumn, kModule, tables[t].name + ": no column '" + key_column + "'");
        }
        for (std::size_t r = 0; r < tables[t].row_count; ++r) {
            auto k = key_cell(*key, r);
            if (!k) continue;
            if (index[t].emplace(k->canonical, r).second) {
                numeric_of.emplace(k->canonical, k->number);
                all_numeric = all_numeric && k->number.has_value();
            }
        }
    }

    std::vector<std::string> shared;
    for (const auto& [k, row] : index.front()) {
        bool everywhere = std::all_of(index.begin() + 1, index.end(),
                                      [&](const auto& m) { return m.count(k) > 0; });
        if (everywhere) shared.push_back(k);
    }
    if (shared.empty()) throw Error(ErrorKind::EmptyIntersection, kModule, "no key shared by all tables");
    if (all_numeric) {
        std::sort(shared.begin(), shared.end(), [&](const std::string& a, const std::string& b) {
            return *numeric_of[a] < *numeric_of[b];
        });
    } else {
        std::sort(shared.begin(), shared.end());
    }

    std::map<std::string, int> name_count;
    for (const auto& t : tables) {
        for (const auto& c : t.columns) {
            if (c.name != key_column) ++name_count[c.name];
        }
    }

    Table out;
    out.name = "merged";
    out.row_count = shared.size();
    if (all_numeric) {
        std::vector<std::optional<double>> keys;
        keys.reserve(shared.size());
        for (const auto& k : shared) keys.push_back(numeric_of[k]);
        out.columns.push_back(Column::numeric(key_column, std::move(keys)));
    } else {
        std::vector<std::optional<std::string>> keys(shared.begin(), shared.end());
        out.columns.push_back(Column::categorical(key_column, std::move(keys)));
    }

    for (std::size_t t = 0; t < tables.size(); ++t) {
        std::vector<std::size_t> rows;
        rows.reserve(shared.size());
        for (const auto& k : shared) rows.push_back(index[t].at(k));
        for (const auto& c : tables[t].columns) {
            if (c.name == key_column) continue;
            Column picked = c.select_rows(rows);
            if (name_count[c.name] > 1) picked.name = c.name + "." + tables[t].name;
            out.columns.push_back(std::move(picked));
        }
    }
    out.validate();
    return out;
}

void SampleSpec::validate() const {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        throw Error(ErrorKind::ConfigError, kModule, "keep_fraction must lie in (0, 1]");
    }
    if (max_rows_per_table && *max_rows_per_table == 0) {
        throw Error(ErrorKind::ConfigError, kModule, "max_rows_per_table must be positive");
    }
}

Table subsample(const Table& table, const SampleSpec& spec) {
    spec.validate();
    if (table.row_count == 0) throw Error(ErrorKind::NoValidRows, kModule, "cannot subsample an empty table");
    if (spec.keep_fraction == 1.0) return table;
    const auto keep = static_cast<std::size_t>(std::floor(spec.keep_fraction * static_cast<double>(table.row_count)));
    std::vector<std::size_t> order(table.row_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    // partial Fisher-Yates: the first `keep` slots become a uniform sample
    for (std::size_t i = 0; i < keep; ++i) std::swap(order[i], order[i + rng.index(order.size() - i)]);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return table.select_rows(order);
}

void LabelRule::validate() const {
    if (!(glucose_threshold > 0.0) || !(hba1c_threshold > 0.0)) {
        throw Error(ErrorKind::ConfigError, kModule, "label thresholds must be positive");
    }
    if (positive_code == negative_code) {
        throw Error(ErrorKind::ConfigError, kModule, "positive and negative codes must differ");
    }
}

std::vector<std::string> LabelRule::source_columns() const {
    return {self_report_column, glucose_column, hba1c_column};
}

LabeledTable derive_label(const Table& table, const LabelRule& rule) {
    rule.validate();
    auto require = [&](const std::string& name) -> const Column& {
        const Column* c = table.find(name);
        if (!c) throw Error(ErrorKind::MissingLabelColumn, kModule, "label column '" + name + "' not found");
        return *c;
    };

    const Column& self_report = require(rule.self_report_column);
    const Column* glucose = nullptr;
    const Column* hba1c = nullptr;
    if (rule.mode == LabelMode::Refined) {
        glucose = &require(rule.glucose_column);
        hba1c = &require(rule.hba1c_column);
    }

    LabeledTable out;
    for (std::size_t r = 0; r < table.row_count; ++r) {
        const auto code = numeric_cell(self_report, r);
        const bool has_code = code && (*code == rule.positive_code || *code == rule.negative_code);
        if (rule.mode == LabelMode::Prototype) {
            if (!has_code) continue;
            out.source_rows.push_back(r);
            out.labels.push_back(*code == rule.positive_code ? 1 : 0);
            continue;
        }
        const auto glu = numeric_cell(*glucose, r);
        const auto a1c = numeric_cell(*hba1c, r);
        if (!glu && !a1c && !has_code) continue;
        const bool positive = (has_code && *code == rule.positive_code) ||
                              (glu && *glu >= rule.glucose_threshold) ||
                              (a1c && *a1c >= rule.hba1c_threshold);
        out.source_rows.push_back(r);
        out.labels.push_back(positive ? 1 : 0);
    }
    if (out.source_rows.empty()) throw Error(ErrorKind::NoValidRows, kModule, "no row carries a usable label");

    const auto sources = rule.source_columns();
    out.features = table.select_rows(out.source_rows).without_columns(sources);
    return out;
}

}  // namespace hdlss::ingest

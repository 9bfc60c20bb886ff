#include "hdlss/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "hdlss/error.hpp"

namespace hdlss::preprocess {
namespace {

constexpr const char* kModule = "preprocess";

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Most frequent category; ties go to the lexicographically smallest.
std::string mode_of(const std::vector<std::optional<std::string>>& cells) {
    std::map<std::string, std::size_t> counts;
    for (const auto& c : cells) {
        if (c) ++counts[*c];
    }
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [category, count] : counts) {
        if (count > best_count) {
            best = category;
            best_count = count;
        }
    }
    return best;
}

/// Encoded names of every kept column before pruning.
std::vector<std::string> encoded_names(const PreprocessPlan& plan) {
    std::vector<std::string> names;
    for (const auto& col : plan.kept_columns) {
        if (col.kind == ColumnKind::Numeric) {
            names.push_back(col.name);
        } else {
            for (const auto& category : plan.onehot_vocab.at(col.name)) names.push_back(onehot_name(col.name, category));
        }
    }
    return names;
}

/// Imputed, one-hot encoded values of the features listed in `names`.
Eigen::MatrixXd encode(const PreprocessPlan& plan, const Table& table, const std::vector<std::string>& names) {
    std::unordered_map<std::string, Eigen::Index> out_index;
    for (std::size_t j = 0; j < names.size(); ++j) out_index.emplace(names[j], static_cast<Eigen::Index>(j));

    const auto n = static_cast<Eigen::Index>(table.row_count);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
    for (const auto& src : plan.kept_columns) {
        const Column* col = table.find(src.name);
        if (!col) throw Error(ErrorKind::SchemaMismatch, kModule, "column '" + src.name + "' is missing");
        if (col->kind != src.kind) {
            throw Error(ErrorKind::SchemaMismatch, kModule, "column '" + src.name + "' changed kind since fitting");
        }
        if (src.kind == ColumnKind::Numeric) {
            auto it = out_index.find(src.name);
            if (it == out_index.end()) continue;
            const double fill = plan.numeric_medians.at(src.name);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& cell = col->numbers[static_cast<std::size_t>(i)];
                out(i, it->second) = cell ? *cell : fill;
            }
        } else {
            const std::string& fill = plan.categorical_modes.at(src.name);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& cell = col->labels[static_cast<std::size_t>(i)];
                auto it = out_index.find(onehot_name(src.name, cell ? *cell : fill));
                if (it != out_index.end()) out(i, it->second) = 1.0;
            }
        }
    }
    return out;
}

}  // namespace

std::string onehot_name(const std::string& column, const std::string& category) {
    return column + "_" + category;
}

DesignMatrix DesignMatrix::select_rows(std::span<const std::size_t> rows) const {
    DesignMatrix out;
    out.feature_names = feature_names;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
    }
    if (!labels.empty()) {
        out.labels.reserve(rows.size());
        for (auto r : rows) out.labels.push_back(labels[r]);
    }
    return out;
}

DesignMatrix DesignMatrix::select_columns(std::span<const std::size_t> cols) const {
    DesignMatrix out;
    out.labels = labels;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(cols[j]));
        out.feature_names.push_back(feature_names[cols[j]]);
    }
    return out;
}

PreprocessPlan fit_plan(const Table& table, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(ErrorKind::ConfigError, kModule, "missingness threshold must lie in [0, 1]");
    }
    if (table.row_count == 0) throw Error(ErrorKind::NoValidRows, kModule, "cannot fit on an empty table");

    PreprocessPlan plan;
    plan.missingness_threshold = threshold;
    const double rows = static_cast<double>(table.row_count);
    for (const auto& col : table.columns) {
        const std::size_t missing = col.missing_count();
        if (static_cast<double>(missing) / rows > threshold) continue;
        if (missing == table.row_count) continue;  // nothing to impute from

        plan.kept_columns.push_back({col.name, col.kind});
        if (col.kind == ColumnKind::Numeric) {
            std::vector<double> present;
            present.reserve(col.numbers.size());
            for (const auto& v : col.numbers) {
                if (v) present.push_back(*v);
            }
            plan.numeric_medians[col.name] = median_of(std::move(present));
        } else {
            plan.categorical_modes[col.name] = mode_of(col.labels);
            std::set<std::string> vocab;
            for (const auto& v : col.labels) {
                if (v) vocab.insert(*v);
            }
            plan.onehot_vocab[col.name] = std::vector<std::string>(vocab.begin(), vocab.end());
        }
    }

    const auto all_names = encoded_names(plan);
    {
        std::set<std::string> unique(all_names.begin(), all_names.end());
        if (unique.size() != all_names.size()) {
            throw Error(ErrorKind::SchemaMismatch, kModule, "one-hot encoding produced duplicate feature names");
        }
    }
    const Eigen::MatrixXd encoded = encode(plan, table, all_names);

    // zero-variance pruning, after one-hot encoding
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < encoded.cols(); ++j) {
        const auto col = encoded.col(j);
        if ((col.array() != col(0)).any()) kept.push_back(j);
    }
    if (kept.empty()) throw Error(ErrorKind::AllColumnsDropped, kModule, "no feature survives preprocessing");

    const auto p = static_cast<Eigen::Index>(kept.size());
    plan.standardize_mean.resize(p);
    plan.standardize_scale.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto col = encoded.col(kept[static_cast<std::size_t>(j)]);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        const double scale = std::sqrt(var);
        plan.feature_names.push_back(all_names[static_cast<std::size_t>(kept[static_cast<std::size_t>(j)])]);
        plan.standardize_mean(j) = mean;
        plan.standardize_scale(j) = scale > 0.0 ? scale : 1.0;
    }
    return plan;
}

DesignMatrix apply_plan(const PreprocessPlan& plan, const Table& table, bool standardize) {
    DesignMatrix out;
    out.values = encode(plan, table, plan.feature_names);
    out.feature_names = plan.feature_names;
    if (standardize) {
        out.values.rowwise() -= plan.standardize_mean.transpose();
        out.values.array().rowwise() /= plan.standardize_scale.transpose().array();
    }
    return out;
}

}  // namespace hdlss::preprocess

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdlss/table.hpp"

namespace hdlss::preprocess {

/// Dense numeric design: rows are samples, columns are encoded features.
struct DesignMatrix {
    Eigen::MatrixXd values;
    std::vector<int> labels;
    std::vector<std::string> feature_names;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    DesignMatrix select_rows(std::span<const std::size_t> rows) const;
    DesignMatrix select_columns(std::span<const std::size_t> cols) const;
};

struct SourceColumn {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
};

/// Everything learned from the training rows. Immutable once fitted.
struct PreprocessPlan {
    double missingness_threshold = 0.5;
    std::vector<SourceColumn> kept_columns;
    std::map<std::string, double> numeric_medians;
    std::map<std::string, std::string> categorical_modes;
    /// Sorted category list per categorical column.
    std::map<std::string, std::vector<std::string>> onehot_vocab;
    /// Encoded features that survived zero-variance pruning, in output order.
    std::vector<std::string> feature_names;
    Eigen::VectorXd standardize_mean;
    Eigen::VectorXd standardize_scale;

    std::size_t feature_count() const { return feature_names.size(); }
};

/// Fits the missingness filter, imputation values, one-hot vocabularies,
/// zero-variance pruning and per-feature standardization on `table`.
/// Columns whose missing fraction exceeds `threshold` are dropped.
PreprocessPlan fit_plan(const Table& table, double threshold = 0.5);

/// Imputes, encodes and (optionally) standardizes `table` with a fitted
/// plan. Categories unseen at fit time encode as all zeros. Labels are left
/// empty; callers attach them.
DesignMatrix apply_plan(const PreprocessPlan& plan, const Table& table, bool standardize = true);

/// Name of the one-hot indicator for `category` of `column`.
std::string onehot_name(const std::string& column, const std::string& category);

}  // namespace hdlss::preprocess

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdlss/linear.hpp"
#include "hdlss/preprocess.hpp"

namespace hdlss::select {

enum class Method { L1, ElasticNet, MutualInfo, PrototypeL1Nonzero };

std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct SelectionConfig {
    Method method = Method::L1;
    int k = 100;
    int mi_bins = 10;
    int fallback_k = 100;
    /// Strength / mixing / solver settings for the scoring fits; the kind is
    /// overridden by the method. Weaker than the baseline default so the
    /// scoring fit keeps more than k non-zero weights.
    linear::PenaltyConfig inner_penalty{linear::PenaltyKind::L1, 0.01};

    void validate() const;
};

struct SelectionResult {
    std::string method;
    /// Ordered by descending score, ties by ascending index.
    std::vector<std::size_t> selected_indices;
    std::vector<std::string> selected_names;
    /// One score per input feature.
    Eigen::VectorXd scores;
    std::optional<int> fold_id;
};

/// |w_j| of an L1 fit.
Eigen::VectorXd score_l1(const preprocess::DesignMatrix& data, const linear::PenaltyConfig& penalty);

/// |w_j| of an elastic-net fit (mixing taken from `penalty`).
Eigen::VectorXd score_elasticnet(const preprocess::DesignMatrix& data, const linear::PenaltyConfig& penalty);

/// Bin index per row under equal-frequency discretization. Features with at
/// most `bins` distinct values use one bin per value. Bins depend only on
/// the rank order, and reversing the order reverses the bin labels.
std::vector<int> equal_frequency_bins(std::span<const double> values, int bins);

/// Plug-in mutual information (nats) between discretized feature and label.
double mutual_information(std::span<const int> bins, std::span<const int> labels);

Eigen::VectorXd score_mutual_info(const preprocess::DesignMatrix& data, int bins);

/// Exactly k indices with the largest scores; ties by ascending index.
SelectionResult select_top_k(const Eigen::VectorXd& scores, std::span<const std::string> names, int k);

/// Non-zero L1 coefficients; when none survive, the top fallback_k features
/// of an L2 fit.
SelectionResult select_prototype(const preprocess::DesignMatrix& data, const SelectionConfig& config);

/// Dispatches on config.method.
SelectionResult select_features(const preprocess::DesignMatrix& data, const SelectionConfig& config);

/// |A ∩ B| / |A ∪ B| of the selected names.
double jaccard(const SelectionResult& a, const SelectionResult& b);

}  // namespace hdlss::select

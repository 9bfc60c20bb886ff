#include "hdlss/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include "hdlss/error.hpp"

namespace hdlss::select {
namespace {

constexpr const char* kModule = "select";

std::vector<std::size_t> ranked_indices(const Eigen::VectorXd& scores) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    return order;
}

SelectionResult make_result(std::string method, std::vector<std::size_t> indices, std::span<const std::string> names,
                            Eigen::VectorXd scores) {
    SelectionResult result;
    result.method = std::move(method);
    for (auto i : indices) result.selected_names.push_back(i < names.size() ? names[i] : std::to_string(i));
    result.selected_indices = std::move(indices);
    result.scores = std::move(scores);
    return result;
}

linear::PenaltyConfig with_kind(linear::PenaltyConfig penalty, linear::PenaltyKind kind) {
    penalty.kind = kind;
    return penalty;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::L1: return "l1";
        case Method::ElasticNet: return "elasticnet";
        case Method::MutualInfo: return "mutual_info";
        case Method::PrototypeL1Nonzero: return "prototype_l1_nonzero";
    }
    return "l1";
}

Method method_from_string(const std::string& text) {
    if (text == "l1") return Method::L1;
    if (text == "elasticnet") return Method::ElasticNet;
    if (text == "mutual_info") return Method::MutualInfo;
    if (text == "prototype_l1_nonzero") return Method::PrototypeL1Nonzero;
    throw Error(ErrorKind::ConfigError, kModule, "unknown selection method '" + text + "'");
}

void SelectionConfig::validate() const {
    if (k <= 0) throw Error(ErrorKind::ConfigError, kModule, "k must be positive");
    if (fallback_k <= 0) throw Error(ErrorKind::ConfigError, kModule, "fallback_k must be positive");
    if (mi_bins < 2) throw Error(ErrorKind::ConfigError, kModule, "mi_bins must be at least 2");
    inner_penalty.validate();
}

Eigen::VectorXd score_l1(const preprocess::DesignMatrix& data, const linear::PenaltyConfig& penalty) {
    return linear::fit(data, with_kind(penalty, linear::PenaltyKind::L1)).weights.cwiseAbs();
}

Eigen::VectorXd score_elasticnet(const preprocess::DesignMatrix& data, const linear::PenaltyConfig& penalty) {
    return linear::fit(data, with_kind(penalty, linear::PenaltyKind::ElasticNet)).weights.cwiseAbs();
}

std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
    const std::size_t n = values.size();
    std::vector<int> out(n, 0);
    if (n == 0) return out;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    // runs of equal values: [start, start + size) in sorted order
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        groups.emplace_back(i, j - i);
        i = j;
    }

    std::vector<int> group_bin(groups.size());
    if (groups.size() <= static_cast<std::size_t>(bins)) {
        std::iota(group_bin.begin(), group_bin.end(), 0);
    } else {
        // Cut j sits at rank j*n/bins; a group goes below every cut right of
        // its centre. A cut that hits a group centre exactly is dropped, which
        // merges its two neighbours and keeps the rule mirror-symmetric.
        // Positions are compared scaled by 2*bins to stay in integers.
        const auto nn = static_cast<std::int64_t>(n);
        const auto b = static_cast<std::int64_t>(bins);
        auto centre = [&](const auto& g) {
            return (2 * static_cast<std::int64_t>(g.first) + static_cast<std::int64_t>(g.second)) * b;
        };
        std::set<std::int64_t> centres;
        for (const auto& g : groups) centres.insert(centre(g));
        std::vector<std::int64_t> cuts;
        for (std::int64_t j = 1; j < b; ++j) {
            if (!centres.count(2 * j * nn)) cuts.push_back(2 * j * nn);
        }
        std::size_t below = 0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto c = centre(groups[g]);
            while (below < cuts.size() && cuts[below] < c) ++below;
            group_bin[g] = static_cast<int>(below);
        }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t i = groups[g].first; i < groups[g].first + groups[g].second; ++i) out[order[i]] = group_bin[g];
    }
    return out;
}

double mutual_information(std::span<const int> bins, std::span<const int> labels) {
    if (bins.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, kModule, "bins and labels differ in length");
    if (bins.empty()) return 0.0;
    const int width = *std::max_element(bins.begin(), bins.end()) + 1;
    std::vector<double> joint(static_cast<std::size_t>(width) * 2, 0.0);
    std::vector<double> per_bin(static_cast<std::size_t>(width), 0.0);
    double per_class[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < bins.size(); ++i) {
        joint[static_cast<std::size_t>(bins[i]) * 2 + static_cast<std::size_t>(labels[i])] += 1.0;
        per_bin[static_cast<std::size_t>(bins[i])] += 1.0;
        per_class[labels[i]] += 1.0;
    }
    const auto n = static_cast<double>(bins.size());
    double mi = 0.0;
    for (std::size_t b = 0; b < per_bin.size(); ++b) {
        for (std::size_t y = 0; y < 2; ++y) {
            const double count = joint[b * 2 + y];
            if (count == 0.0) continue;
            mi += (count / n) * std::log(count * n / (per_bin[b] * per_class[y]));
        }
    }
    return std::max(mi, 0.0);
}

Eigen::VectorXd score_mutual_info(const preprocess::DesignMatrix& data, int bins) {
    if (bins < 2) throw Error(ErrorKind::ConfigError, kModule, "mi_bins must be at least 2");
    if (static_cast<Eigen::Index>(data.labels.size()) != data.rows()) {
        throw Error(ErrorKind::LengthMismatch, kModule, "label count does not match row count");
    }
    Eigen::VectorXd scores(data.cols());
    std::vector<double> column(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        Eigen::Map<Eigen::VectorXd>(column.data(), data.rows()) = data.values.col(j);
        scores(j) = mutual_information(equal_frequency_bins(column, bins), data.labels);
    }
    return scores;
}

SelectionResult select_top_k(const Eigen::VectorXd& scores, std::span<const std::string> names, int k) {
    if (k <= 0) throw Error(ErrorKind::ConfigError, kModule, "k must be positive");
    if (k > scores.size()) {
        throw Error(ErrorKind::KTooLarge, kModule,
                    "k=" + std::to_string(k) + " exceeds feature count " + std::to_string(scores.size()));
    }
    auto order = ranked_indices(scores);
    order.resize(static_cast<std::size_t>(k));
    return make_result("top_k", std::move(order), names, scores);
}

SelectionResult select_prototype(const preprocess::DesignMatrix& data, const SelectionConfig& config) {
    const auto l1 = linear::fit(data, with_kind(config.inner_penalty, linear::PenaltyKind::L1));
    Eigen::VectorXd scores = l1.weights.cwiseAbs();
    std::vector<std::size_t> nonzero;
    for (auto i : ranked_indices(scores)) {
        if (scores(static_cast<Eigen::Index>(i)) > 0.0) nonzero.push_back(i);
    }
    if (!nonzero.empty()) return make_result(to_string(Method::PrototypeL1Nonzero), std::move(nonzero), data.feature_names, scores);

    const auto l2 = linear::fit(data, with_kind(config.inner_penalty, linear::PenaltyKind::L2));
    auto result = select_top_k(l2.weights.cwiseAbs(), data.feature_names, config.fallback_k);
    result.method = "prototype_l2_fallback";
    return result;
}

SelectionResult select_features(const preprocess::DesignMatrix& data, const SelectionConfig& config) {
    config.validate();
    SelectionResult result;
    switch (config.method) {
        case Method::L1:
            result = select_top_k(score_l1(data, config.inner_penalty), data.feature_names, config.k);
            break;
        case Method::ElasticNet:
            result = select_top_k(score_elasticnet(data, config.inner_penalty), data.feature_names, config.k);
            break;
        case Method::MutualInfo:
            result = select_top_k(score_mutual_info(data, config.mi_bins), data.feature_names, config.k);
            break;
        case Method::PrototypeL1Nonzero:
            return select_prototype(data, config);
    }
    result.method = to_string(config.method);
    return result;
}

double jaccard(const SelectionResult& a, const SelectionResult& b) {
    std::set<std::string> sa(a.selected_names.begin(), a.selected_names.end());
    std::set<std::string> sb(b.selected_names.begin(), b.selected_names.end());
    std::size_t shared = 0;
    for (const auto& name : sa) shared += sb.count(name);
    const std::size_t total = sa.size() + sb.size() - shared;
    return total == 0 ? 1.0 : static_cast<double>(shared) / static_cast<double>(total);
}

}  // namespace hdlss::select

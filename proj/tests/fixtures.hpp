#pragma once

// Shared builders for the unit tests.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <optional>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdlss/preprocess.hpp"
#include "hdlss/rng.hpp"
#include "hdlss/table.hpp"

namespace fixtures {

/// Standard-normal design with labels from a sparse linear rule.
inline hdlss::preprocess::DesignMatrix random_design(int n, int p, std::uint64_t seed, int informative = 2) {
    hdlss::Rng rng(seed);
    hdlss::preprocess::DesignMatrix d;
    d.values.resize(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) d.values(i, j) = rng.normal();
    }
    d.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = 0.0;
        for (int j = 0; j < std::min(informative, p); ++j) z += (j % 2 ? -1.5 : 1.5) * d.values(i, j);
        d.labels[static_cast<std::size_t>(i)] = rng.uniform() < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
    }
    // both classes always present
    d.labels[0] = 1;
    d.labels[1] = 0;
    for (int j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j));
    return d;
}

/// Noise features plus one column equal to the standardized label, at `copy_index`.
inline hdlss::preprocess::DesignMatrix y_copy_design(int n, int p, int copy_index, std::uint64_t seed) {
    auto d = random_design(n, p, seed, 0);
    hdlss::Rng rng(seed + 1);
    for (int i = 0; i < n; ++i) d.labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
    d.labels[0] = 1;
    d.labels[1] = 0;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = d.labels[static_cast<std::size_t>(i)];
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().mean());
    d.values.col(copy_index) = (y.array() - mean) / sd;
    return d;
}

inline hdlss::Column numeric(const std::string& name, std::vector<std::optional<double>> cells) {
    return hdlss::Column::numeric(name, std::move(cells));
}

inline hdlss::Column categorical(const std::string& name, std::vector<std::optional<std::string>> cells) {
    return hdlss::Column::categorical(name, std::move(cells));
}

inline hdlss::Table table(std::string name, std::vector<hdlss::Column> columns) {
    hdlss::Table t;
    t.name = std::move(name);
    t.row_count = columns.empty() ? 0 : columns.front().size();
    t.columns = std::move(columns);
    return t;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("hdlss_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures

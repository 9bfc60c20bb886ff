#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdlss/preprocess.hpp"

namespace hdlss::linear {

enum class PenaltyKind { L1, L2, ElasticNet };

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& text);

/// Penalty is strength * (mixing * |w|_1 + (1 - mixing) / 2 * |w|_2^2).
/// `mixing` is only read for ElasticNet; L1 uses 1 and L2 uses 0.
struct PenaltyConfig {
    PenaltyKind kind = PenaltyKind::L1;
    double strength = 0.02;
    double mixing = 0.5;
    int max_iters = 1000;
    double tol = 1e-6;
    bool class_balanced = true;

    double l1_mixing() const;
    void validate() const;
};

struct LinearModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    PenaltyConfig penalty;
    int n_iters_run = 0;
    bool converged = false;
    /// Penalized objective after each coordinate sweep (index 0 = start).
    std::vector<double> objective_trace;

    Eigen::Index feature_count() const { return weights.size(); }
};

struct ClassWeights {
    double positive = 1.0;
    double negative = 1.0;
};

double sigmoid(double z);

/// Inverse-frequency weights n / (2 n_c); throws SingleClass.
ClassWeights class_weights(std::span<const int> labels);

/// Per-sample loss weights: class weights when balanced, otherwise ones.
Eigen::VectorXd sample_weights(std::span<const int> labels, bool class_balanced);

struct FitOptions {
    /// Visit coordinates in a seeded random order instead of ascending order.
    std::optional<std::uint64_t> shuffle_seed;
};

/// Minimizes the weighted-mean logistic loss plus the configured penalty by
/// cyclic proximal coordinate descent. Each coordinate step minimizes the
/// quadratic majorizer with curvature 0.25 * weighted mean of x_ij^2, so the
/// objective never increases. The intercept is unpenalized.
LinearModel fit(const preprocess::DesignMatrix& data, const PenaltyConfig& penalty, const FitOptions& options = {});

Eigen::VectorXd predict_proba(const LinearModel& model, const Eigen::MatrixXd& x);

/// Weighted-mean negative log-likelihood (without penalty).
double data_loss(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::VectorXd& sample_weights,
                 const Eigen::VectorXd& weights, double intercept);

/// Gradient of data_loss with respect to (weights, intercept); the intercept
/// derivative is the last entry.
Eigen::VectorXd data_loss_gradient(const Eigen::MatrixXd& x, std::span<const int> labels,
                                   const Eigen::VectorXd& sample_weights, const Eigen::VectorXd& weights,
                                   double intercept);

double penalty_value(const PenaltyConfig& penalty, const Eigen::VectorXd& weights);

/// data_loss + penalty_value with the model's own class weighting.
double objective(const preprocess::DesignMatrix& data, const LinearModel& model);

/// Smallest strength at which the pure-L1 solution is all zeros.
double lambda_max(const preprocess::DesignMatrix& data, bool class_balanced = true);

double soft_threshold(double z, double gamma);

}  // namespace hdlss::linear

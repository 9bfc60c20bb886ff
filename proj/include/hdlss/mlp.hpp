#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hdlss/preprocess.hpp"

namespace hdlss::mlp {

struct MlpConfig {
    std::vector<int> hidden_sizes{64, 32};
    double weight_decay = 1e-4;
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 10;
    /// Stratified share of the training rows held out for early stopping.
    /// 0 disables the hold-out; early stopping then tracks the training
    /// objective (weighted BCE + decay).
    double val_fraction = 0.1;
    std::uint64_t seed = 42;

    static MlpConfig baseline();
    static MlpConfig hybrid();
    void validate() const;
};

/// y = W x + b with W stored (out x in).
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct MlpModel {
    std::vector<DenseLayer> layers;
    MlpConfig config;
    int best_epoch = 0;
    std::vector<EpochRecord> train_trace;

    Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
};

/// ReLU on every hidden layer, sigmoid on the scalar output.
Eigen::VectorXd forward(const MlpModel& model, const Eigen::MatrixXd& x);
Eigen::VectorXd forward(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x);

/// He-uniform hidden layers, Glorot-uniform output layer, zero biases.
std::vector<DenseLayer> init_layers(Eigen::Index inputs, std::span<const int> hidden_sizes, std::uint64_t seed);

/// Objective: (1/n) sum_i s_i * BCE_i + (decay / 2) * sum of squared weights
/// (biases are not decayed). Probabilities are clamped to [1e-12, 1 - 1e-12].
/// When `gradient` is non-null it receives d objective / d parameters.
double loss_and_gradient(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x, std::span<const int> labels,
                         std::span<const double> sample_weights, double weight_decay,
                         std::vector<DenseLayer>* gradient);

/// Mini-batch Adam on the class-weighted objective with early stopping.
/// Parameters are restored from the best monitored epoch.
MlpModel train(const preprocess::DesignMatrix& data, const MlpConfig& config);

/// Compares analytic gradients of a small random network against central
/// differences (step 1e-5) and returns the largest relative error.
double gradient_check(const MlpConfig& config, std::uint64_t seed = 7);

}  // namespace hdlss::mlp

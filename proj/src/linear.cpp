#include "hdlss/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdlss/error.hpp"
#include "hdlss/rng.hpp"

namespace hdlss::linear {
namespace {

constexpr const char* kModule = "linear";

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_inputs(const preprocess::DesignMatrix& data) {
    if (data.rows() == 0 || data.cols() == 0) throw Error(ErrorKind::NonFiniteInput, kModule, "empty design matrix");
    if (static_cast<Eigen::Index>(data.labels.size()) != data.rows()) {
        throw Error(ErrorKind::DimensionMismatch, kModule, "label count does not match row count");
    }
    if (!data.values.allFinite()) throw Error(ErrorKind::NonFiniteInput, kModule, "design matrix has non-finite values");
    for (int y : data.labels) {
        if (y != 0 && y != 1) throw Error(ErrorKind::NonFiniteInput, kModule, "labels must be 0 or 1");
    }
}

}  // namespace

std::string to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::L1: return "l1";
        case PenaltyKind::L2: return "l2";
        case PenaltyKind::ElasticNet: return "elasticnet";
    }
    return "l1";
}

PenaltyKind penalty_kind_from_string(const std::string& text) {
    if (text == "l1") return PenaltyKind::L1;
    if (text == "l2") return PenaltyKind::L2;
    if (text == "elasticnet") return PenaltyKind::ElasticNet;
    throw Error(ErrorKind::ConfigError, kModule, "unknown penalty kind '" + text + "'");
}

double PenaltyConfig::l1_mixing() const {
    switch (kind) {
        case PenaltyKind::L1: return 1.0;
        case PenaltyKind::L2: return 0.0;
        case PenaltyKind::ElasticNet: return mixing;
    }
    return mixing;
}

void PenaltyConfig::validate() const {
    if (!(strength > 0.0)) throw Error(ErrorKind::ConfigError, kModule, "penalty strength must be positive");
    if (!(mixing >= 0.0 && mixing <= 1.0)) throw Error(ErrorKind::ConfigError, kModule, "mixing must lie in [0, 1]");
    if (max_iters <= 0) throw Error(ErrorKind::ConfigError, kModule, "max_iters must be positive");
    if (!(tol > 0.0)) throw Error(ErrorKind::ConfigError, kModule, "tol must be positive");
}

double sigmoid(double z) {
    z = std::clamp(z, -700.0, 700.0);
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

ClassWeights class_weights(std::span<const int> labels) {
    const auto n = static_cast<double>(labels.size());
    const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double negatives = n - positives;
    if (positives == 0.0 || negatives == 0.0) {
        throw Error(ErrorKind::SingleClass, kModule, "both classes must be present");
    }
    return {n / (2.0 * positives), n / (2.0 * negatives)};
}

Eigen::VectorXd sample_weights(std::span<const int> labels, bool class_balanced) {
    Eigen::VectorXd s = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(labels.size()));
    if (!class_balanced) return s;
    const auto cw = class_weights(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) s(static_cast<Eigen::Index>(i)) = labels[i] ? cw.positive : cw.negative;
    return s;
}

double data_loss(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::VectorXd& sample_weights,
                 const Eigen::VectorXd& weights, double intercept) {
    const Eigen::VectorXd eta = (x * weights).array() + intercept;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        total += sample_weights(i) * (softplus(eta(i)) - labels[static_cast<std::size_t>(i)] * eta(i));
    }
    return total / sample_weights.sum();
}

Eigen::VectorXd data_loss_gradient(const Eigen::MatrixXd& x, std::span<const int> labels,
                                   const Eigen::VectorXd& sample_weights, const Eigen::VectorXd& weights,
                                   double intercept) {
    const Eigen::VectorXd eta = (x * weights).array() + intercept;
    Eigen::VectorXd residual(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        residual(i) = sample_weights(i) * (sigmoid(eta(i)) - labels[static_cast<std::size_t>(i)]);
    }
    residual /= sample_weights.sum();
    Eigen::VectorXd grad(weights.size() + 1);
    grad.head(weights.size()) = x.transpose() * residual;
    grad(weights.size()) = residual.sum();
    return grad;
}

double penalty_value(const PenaltyConfig& penalty, const Eigen::VectorXd& weights) {
    const double alpha = penalty.l1_mixing();
    return penalty.strength * (alpha * weights.lpNorm<1>() + 0.5 * (1.0 - alpha) * weights.squaredNorm());
}

double objective(const preprocess::DesignMatrix& data, const LinearModel& model) {
    const auto s = sample_weights(data.labels, model.penalty.class_balanced);
    return data_loss(data.values, data.labels, s, model.weights, model.intercept) +
           penalty_value(model.penalty, model.weights);
}

double lambda_max(const preprocess::DesignMatrix& data, bool class_balanced) {
    check_inputs(data);
    Eigen::VectorXd v = sample_weights(data.labels, class_balanced);
    v /= v.sum();
    double base_rate = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) base_rate += v(i) * data.labels[static_cast<std::size_t>(i)];
    Eigen::VectorXd r(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) r(i) = v(i) * (data.labels[static_cast<std::size_t>(i)] - base_rate);
    return (data.values.transpose() * r).cwiseAbs().maxCoeff();
}

LinearModel fit(const preprocess::DesignMatrix& data, const PenaltyConfig& penalty, const FitOptions& options) {
    penalty.validate();
    check_inputs(data);
    const Eigen::MatrixXd& x = data.values;
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();

    Eigen::VectorXd v = sample_weights(data.labels, penalty.class_balanced);
    v /= v.sum();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = data.labels[static_cast<std::size_t>(i)];

    const double alpha = penalty.l1_mixing();
    const double l1 = penalty.strength * alpha;
    const double l2 = penalty.strength * (1.0 - alpha);

    // per-coordinate curvature bound of the weighted-mean logistic loss
    Eigen::VectorXd curvature(p);
    for (Eigen::Index j = 0; j < p; ++j) curvature(j) = 0.25 * v.dot(x.col(j).cwiseAbs2());

    LinearModel model;
    model.penalty = penalty;
    model.weights = Eigen::VectorXd::Zero(p);
    const double base_rate = v.dot(y);
    model.intercept = std::log(base_rate / (1.0 - base_rate));

    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, model.intercept);
    Eigen::VectorXd resid(n);  // v_i * (p_i - y_i)
    auto refresh = [&] {
        for (Eigen::Index i = 0; i < n; ++i) resid(i) = v(i) * (sigmoid(eta(i)) - y(i));
    };
    refresh();

    auto current_objective = [&] {
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) loss += v(i) * (softplus(eta(i)) - y(i) * eta(i));
        return loss + penalty_value(penalty, model.weights);
    };

    auto update_coordinate = [&](Eigen::Index j) {
        const double lj = curvature(j);
        if (lj == 0.0) return 0.0;
        const double grad = resid.dot(x.col(j));
        const double target = soft_threshold(lj * model.weights(j) - grad, l1) / (lj + l2);
        const double delta = target - model.weights(j);
        if (delta != 0.0) {
            model.weights(j) = target;
            eta += delta * x.col(j);
            refresh();
        }
        return std::abs(delta);
    };

    auto update_intercept = [&] {
        const double delta = -resid.sum() / 0.25;
        model.intercept += delta;
        eta.array() += delta;
        refresh();
        return std::abs(delta);
    };

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::optional<Rng> rng;
    if (options.shuffle_seed) rng.emplace(*options.shuffle_seed);

    model.objective_trace.push_back(current_objective());
    // Full sweeps alternate with sweeps over the current support; the fit
    // has converged when a full sweep moves no coordinate by tol or more.
    bool full_sweep = true;
    while (model.n_iters_run < penalty.max_iters) {
        double max_change = 0.0;
        if (full_sweep) {
            if (rng) rng->shuffle(std::span<Eigen::Index>(order));
            for (auto j : order) max_change = std::max(max_change, update_coordinate(j));
        } else {
            for (auto j : order) {
                if (model.weights(j) != 0.0) max_change = std::max(max_change, update_coordinate(j));
            }
        }
        max_change = std::max(max_change, update_intercept());
        ++model.n_iters_run;
        model.objective_trace.push_back(current_objective());

        if (!std::isfinite(model.objective_trace.back())) {
            throw Error(ErrorKind::NonFiniteInput, kModule, "objective became non-finite");
        }
        if (max_change < penalty.tol) {
            if (full_sweep) {
                model.converged = true;
                break;
            }
            full_sweep = true;
        } else {
            // support sweeps only pay off when the L1 term creates exact zeros
            full_sweep = l1 == 0.0;
        }
    }
    return model;
}

Eigen::VectorXd predict_proba(const LinearModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.weights.size()) {
        throw Error(ErrorKind::DimensionMismatch, kModule,
                    "expected " + std::to_string(model.weights.size()) + " features, got " + std::to_string(x.cols()));
    }
    Eigen::VectorXd eta = (x * model.weights).array() + model.intercept;
    return eta.unaryExpr([](double z) { return sigmoid(z); });
}

}  // namespace hdlss::linear

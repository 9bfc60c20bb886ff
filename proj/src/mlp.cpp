#include "hdlss/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hdlss/error.hpp"
#include "hdlss/linear.hpp"
#include "hdlss/rng.hpp"

namespace hdlss::mlp {
namespace {

constexpr const char* kModule = "mlp";
constexpr double kProbFloor = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct LossParts {
    double data = 0.0;
    double decay = 0.0;
};

LossParts evaluate(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x, std::span<const int> labels,
                   std::span<const double> weights, double weight_decay, std::vector<DenseLayer>* gradient) {
    const Eigen::Index n = x.rows();
    const std::size_t depth = layers.size();

    // activations[l] is the input of layer l
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(depth);
    Eigen::MatrixXd current = x;
    for (std::size_t l = 0; l < depth; ++l) {
        Eigen::MatrixXd z = current * layers[l].weights.transpose();
        z.rowwise() += layers[l].bias.transpose();
        activations.push_back(std::move(current));
        current = (l + 1 < depth) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }

    LossParts parts;
    Eigen::MatrixXd delta(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        const double p = std::clamp(linear::sigmoid(current(i, 0)), kProbFloor, 1.0 - kProbFloor);
        const double y = labels[row];
        parts.data -= weights[row] * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        delta(i, 0) = weights[row] * (linear::sigmoid(current(i, 0)) - y) / static_cast<double>(n);
    }
    parts.data /= static_cast<double>(n);
    for (const auto& layer : layers) parts.decay += 0.5 * weight_decay * layer.weights.squaredNorm();

    if (gradient) {
        gradient->resize(depth);
        for (std::size_t l = depth; l-- > 0;) {
            auto& g = (*gradient)[l];
            g.weights = delta.transpose() * activations[l] + weight_decay * layers[l].weights;
            g.bias = delta.colwise().sum().transpose();
            if (l > 0) {
                Eigen::MatrixXd back = delta * layers[l].weights;
                delta = back.cwiseProduct((activations[l].array() > 0.0).cast<double>().matrix());
            }
        }
    }
    return parts;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> values, std::span<const std::size_t> rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(values[r]);
    return out;
}

struct AdamState {
    std::vector<DenseLayer> first;
    std::vector<DenseLayer> second;
    long step = 0;

    explicit AdamState(const std::vector<DenseLayer>& layers) {
        for (const auto& l : layers) {
            DenseLayer zero{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                            Eigen::VectorXd::Zero(l.bias.size())};
            first.push_back(zero);
            second.push_back(zero);
        }
    }

    void apply(std::vector<DenseLayer>& layers, const std::vector<DenseLayer>& grad, double lr) {
        ++step;
        const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
        auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseAbs2();
            param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
        };
        for (std::size_t l = 0; l < layers.size(); ++l) {
            update(layers[l].weights, grad[l].weights, first[l].weights, second[l].weights);
            update(layers[l].bias, grad[l].bias, first[l].bias, second[l].bias);
        }
    }
};

/// Stratified hold-out: returns (train rows, validation rows), both sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_validation(std::span<const int> labels,
                                                                             double fraction, std::uint64_t seed) {
    std::vector<std::size_t> train, val;
    if (fraction == 0.0) {
        train.resize(labels.size());
        std::iota(train.begin(), train.end(), std::size_t{0});
        return {train, val};
    }
    Rng rng(seed);
    for (int cls : {1, 0}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        const auto held = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size()))));
        if (members.size() <= held) {
            throw Error(ErrorKind::SingleClass, kModule,
                        "class " + std::to_string(cls) + " has too few rows for a stratified validation split");
        }
        rng.shuffle(std::span<std::size_t>(members));
        val.insert(val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(held));
        train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(held), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

}  // namespace

MlpConfig MlpConfig::baseline() { return MlpConfig{}; }

MlpConfig MlpConfig::hybrid() {
    MlpConfig c;
    c.hidden_sizes = {128, 64};
    return c;
}

void MlpConfig::validate() const {
    if (hidden_sizes.empty()) throw Error(ErrorKind::ConfigError, kModule, "at least one hidden layer is required");
    for (int h : hidden_sizes) {
        if (h <= 0) throw Error(ErrorKind::ConfigError, kModule, "hidden sizes must be positive");
    }
    if (!(weight_decay >= 0.0)) throw Error(ErrorKind::ConfigError, kModule, "weight_decay must be >= 0");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::ConfigError, kModule, "learning_rate must be > 0");
    if (batch_size <= 0 || max_epochs <= 0 || patience <= 0) {
        throw Error(ErrorKind::ConfigError, kModule, "batch_size, max_epochs and patience must be positive");
    }
    if (!(val_fraction >= 0.0 && val_fraction <= 0.5)) {
        throw Error(ErrorKind::ConfigError, kModule, "val_fraction must lie in [0, 0.5]");
    }
}

std::vector<DenseLayer> init_layers(Eigen::Index inputs, std::span<const int> hidden_sizes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    Eigen::Index fan_in = inputs;
    auto make = [&](Eigen::Index fan_out, double limit) {
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
        }
        layers.push_back(std::move(layer));
        fan_in = fan_out;
    };
    for (int h : hidden_sizes) make(h, std::sqrt(6.0 / static_cast<double>(fan_in)));
    make(1, std::sqrt(6.0 / static_cast<double>(fan_in + 1)));
    return layers;
}

Eigen::VectorXd forward(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x) {
    if (layers.empty() || x.cols() != layers.front().weights.cols()) {
        throw Error(ErrorKind::DimensionMismatch, kModule,
                    "input has " + std::to_string(x.cols()) + " columns, network expects " +
                        std::to_string(layers.empty() ? 0 : layers.front().weights.cols()));
    }
    Eigen::MatrixXd current = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd z = current * layers[l].weights.transpose();
        z.rowwise() += layers[l].bias.transpose();
        current = (l + 1 < layers.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }
    return current.col(0).unaryExpr([](double z) { return linear::sigmoid(z); });
}

Eigen::VectorXd forward(const MlpModel& model, const Eigen::MatrixXd& x) { return forward(model.layers, x); }

double loss_and_gradient(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x, std::span<const int> labels,
                         std::span<const double> sample_weights, double weight_decay,
                         std::vector<DenseLayer>* gradient) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows() || labels.size() != sample_weights.size()) {
        throw Error(ErrorKind::DimensionMismatch, kModule, "labels, weights and rows disagree in length");
    }
    const auto parts = evaluate(layers, x, labels, sample_weights, weight_decay, gradient);
    return parts.data + parts.decay;
}

MlpModel train(const preprocess::DesignMatrix& data, const MlpConfig& config) {
    config.validate();
    if (static_cast<Eigen::Index>(data.labels.size()) != data.rows()) {
        throw Error(ErrorKind::DimensionMismatch, kModule, "label count does not match row count");
    }
    if (!data.values.allFinite()) throw Error(ErrorKind::NonFiniteInput, kModule, "design matrix has non-finite values");

    const Eigen::VectorXd weight_vec = linear::sample_weights(data.labels, true);
    const std::vector<double> sample_weight(weight_vec.data(), weight_vec.data() + weight_vec.size());
    const std::span<const int> labels(data.labels);

    const auto [train_rows, val_rows] = split_validation(labels, config.val_fraction, mix_seed(config.seed, 1));
    const bool holdout = !val_rows.empty();
    const Eigen::MatrixXd x_train = gather_rows(data.values, train_rows);
    const auto y_train = gather(labels, std::span<const std::size_t>(train_rows));
    const auto w_train = gather(std::span<const double>(sample_weight), std::span<const std::size_t>(train_rows));
    Eigen::MatrixXd x_val;
    std::vector<int> y_val;
    std::vector<double> w_val;
    if (holdout) {
        x_val = gather_rows(data.values, val_rows);
        y_val = gather(labels, std::span<const std::size_t>(val_rows));
        w_val = gather(std::span<const double>(sample_weight), std::span<const std::size_t>(val_rows));
    }

    MlpModel model;
    model.config = config;
    model.layers = init_layers(data.cols(), config.hidden_sizes, mix_seed(config.seed, 2));

    AdamState adam(model.layers);
    Rng batch_rng(mix_seed(config.seed, 3));
    std::vector<std::size_t> order(train_rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(config.batch_size);

    std::vector<DenseLayer> best = model.layers;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<DenseLayer> grad;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        batch_rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::span<const std::size_t> rows(order.data() + start, std::min(batch, order.size() - start));
            const Eigen::MatrixXd xb = gather_rows(x_train, rows);
            const auto yb = gather(std::span<const int>(y_train), rows);
            const auto wb = gather(std::span<const double>(w_train), rows);
            const auto parts = evaluate(model.layers, xb, yb, wb, config.weight_decay, &grad);
            if (!std::isfinite(parts.data + parts.decay)) {
                throw Error(ErrorKind::NonFiniteLoss, kModule, "training diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += parts.data * static_cast<double>(rows.size());
            adam.apply(model.layers, grad, config.learning_rate);
        }
        epoch_loss /= static_cast<double>(order.size());

        double monitored = 0.0;
        if (holdout) {
            monitored = evaluate(model.layers, x_val, y_val, w_val, 0.0, nullptr).data;
        } else {
            const auto parts = evaluate(model.layers, x_train, y_train, w_train, config.weight_decay, nullptr);
            monitored = parts.data + parts.decay;
        }
        if (!std::isfinite(monitored) || !std::isfinite(epoch_loss)) {
            throw Error(ErrorKind::NonFiniteLoss, kModule, "non-finite loss at epoch " + std::to_string(epoch));
        }
        model.train_trace.push_back({epoch, epoch_loss, monitored});

        if (monitored < best_loss) {
            best_loss = monitored;
            best = model.layers;
            model.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    model.layers = std::move(best);
    return model;
}

double gradient_check(const MlpConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::Index inputs = 2 + static_cast<Eigen::Index>(rng.index(7));
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.index(13));
    std::vector<int> hidden;
    for (int h : config.hidden_sizes) hidden.push_back(std::min(h, 8));
    if (hidden.empty()) hidden.push_back(4);

    auto layers = init_layers(inputs, hidden, mix_seed(seed, 1));
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * rng.normal();
    }
    Eigen::MatrixXd x(n, inputs);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < inputs; ++j) x(i, j) = rng.normal();
    }
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<double> weights(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<int>(i % 2);
        weights[i] = rng.uniform(0.5, 2.0);
    }

    std::vector<DenseLayer> analytic;
    loss_and_gradient(layers, x, labels, weights, config.weight_decay, &analytic);

    constexpr double step = 1e-5;
    double worst = 0.0;
    auto probe = [&](double& param, double exact) {
        const double saved = param;
        param = saved + step;
        const double up = loss_and_gradient(layers, x, labels, weights, config.weight_decay, nullptr);
        param = saved - step;
        const double down = loss_and_gradient(layers, x, labels, weights, config.weight_decay, nullptr);
        param = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(exact - numeric) / scale);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (Eigen::Index r = 0; r < layers[l].weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layers[l].weights.cols(); ++c) {
                probe(layers[l].weights(r, c), analytic[l].weights(r, c));
            }
            probe(layers[l].bias(r), analytic[l].bias(r));
        }
    }
    return worst;
}

}  // namespace hdlss::mlp

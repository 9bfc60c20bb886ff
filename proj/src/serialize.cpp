#include "hdlss/serialize.hpp"

#include "hdlss/error.hpp"

namespace {

using nlohmann::json;

/// Overwrites `field` only when `key` is present, so partial documents
/// layer over defaults.
template <typename T>
void read_if(const json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

namespace hdlss::preprocess {

void to_json(json& j, const PreprocessPlan& plan) {
    json kept = json::array();
    for (const auto& c : plan.kept_columns) {
        kept.push_back({{"name", c.name}, {"kind", c.kind == ColumnKind::Numeric ? "numeric" : "categorical"}});
    }
    j = {{"missingness_threshold", plan.missingness_threshold},
         {"kept_columns", kept},
         {"numeric_medians", plan.numeric_medians},
         {"categorical_modes", plan.categorical_modes},
         {"onehot_vocab", plan.onehot_vocab},
         {"feature_names", plan.feature_names},
         {"standardize_mean", vector_json(plan.standardize_mean)},
         {"standardize_scale", vector_json(plan.standardize_scale)}};
}

void from_json(const json& j, PreprocessPlan& plan) {
    plan.missingness_threshold = j.at("missingness_threshold").get<double>();
    plan.kept_columns.clear();
    for (const auto& c : j.at("kept_columns")) {
        plan.kept_columns.push_back({c.at("name").get<std::string>(),
                                     c.at("kind").get<std::string>() == "numeric" ? ColumnKind::Numeric
                                                                                  : ColumnKind::Categorical});
    }
    j.at("numeric_medians").get_to(plan.numeric_medians);
    j.at("categorical_modes").get_to(plan.categorical_modes);
    j.at("onehot_vocab").get_to(plan.onehot_vocab);
    j.at("feature_names").get_to(plan.feature_names);
    plan.standardize_mean = vector_from(j.at("standardize_mean"));
    plan.standardize_scale = vector_from(j.at("standardize_scale"));
}

}  // namespace hdlss::preprocess

namespace hdlss::linear {

void to_json(json& j, const PenaltyConfig& config) {
    j = {{"kind", to_string(config.kind)},
         {"strength", config.strength},
         {"mixing", config.mixing},
         {"max_iters", config.max_iters},
         {"tol", config.tol},
         {"class_balanced", config.class_balanced}};
}

void from_json(const json& j, PenaltyConfig& config) {
    if (j.contains("kind")) config.kind = penalty_kind_from_string(j.at("kind").get<std::string>());
    read_if(j, "strength", config.strength);
    read_if(j, "mixing", config.mixing);
    read_if(j, "max_iters", config.max_iters);
    read_if(j, "tol", config.tol);
    read_if(j, "class_balanced", config.class_balanced);
}

void to_json(json& j, const LinearModel& model) {
    j = {{"weights", vector_json(model.weights)},
         {"intercept", model.intercept},
         {"penalty", model.penalty},
         {"n_iters_run", model.n_iters_run},
         {"converged", model.converged}};
}

void from_json(const json& j, LinearModel& model) {
    model.weights = vector_from(j.at("weights"));
    model.intercept = j.at("intercept").get<double>();
    model.penalty = j.at("penalty").get<PenaltyConfig>();
    model.n_iters_run = j.at("n_iters_run").get<int>();
    model.converged = j.at("converged").get<bool>();
    model.objective_trace.clear();
}

}  // namespace hdlss::linear

namespace hdlss::mlp {

void to_json(json& j, const MlpConfig& config) {
    j = {{"hidden_sizes", config.hidden_sizes},
         {"weight_decay", config.weight_decay},
         {"learning_rate", config.learning_rate},
         {"batch_size", config.batch_size},
         {"max_epochs", config.max_epochs},
         {"patience", config.patience},
         {"val_fraction", config.val_fraction},
         {"seed", config.seed}};
}

void from_json(const json& j, MlpConfig& config) {
    read_if(j, "hidden_sizes", config.hidden_sizes);
    read_if(j, "weight_decay", config.weight_decay);
    read_if(j, "learning_rate", config.learning_rate);
    read_if(j, "batch_size", config.batch_size);
    read_if(j, "max_epochs", config.max_epochs);
    read_if(j, "patience", config.patience);
    read_if(j, "val_fraction", config.val_fraction);
    read_if(j, "seed", config.seed);
}

void to_json(json& j, const MlpModel& model) {
    json layers = json::array();
    for (const auto& layer : model.layers) {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(layer.weights.size()));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) flat.push_back(layer.weights(r, c));
        }
        layers.push_back({{"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"weights", flat},
                          {"bias", vector_json(layer.bias)}});
    }
    json trace = json::array();
    for (const auto& e : model.train_trace) trace.push_back({e.epoch, e.train_loss, e.val_loss});
    j = {{"layers", layers}, {"config", model.config}, {"best_epoch", model.best_epoch}, {"train_trace", trace}};
}

void from_json(const json& j, MlpModel& model) {
    model.layers.clear();
    for (const auto& l : j.at("layers")) {
        const auto rows = l.at("rows").get<Eigen::Index>();
        const auto cols = l.at("cols").get<Eigen::Index>();
        const auto flat = l.at("weights").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
            throw Error(ErrorKind::DimensionMismatch, "mlp", "layer weight array does not match its shape");
        }
        DenseLayer layer{Eigen::MatrixXd(rows, cols), vector_from(l.at("bias"))};
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
        }
        model.layers.push_back(std::move(layer));
    }
    model.config = j.at("config").get<MlpConfig>();
    model.best_epoch = j.at("best_epoch").get<int>();
    model.train_trace.clear();
    for (const auto& e : j.at("train_trace")) {
        model.train_trace.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }
}

}  // namespace hdlss::mlp

namespace hdlss::select {

void to_json(json& j, const SelectionConfig& config) {
    j = {{"method", to_string(config.method)},
         {"k", config.k},
         {"mi_bins", config.mi_bins},
         {"fallback_k", config.fallback_k},
         {"inner_penalty", config.inner_penalty}};
}

void from_json(const json& j, SelectionConfig& config) {
    if (j.contains("method")) config.method = method_from_string(j.at("method").get<std::string>());
    read_if(j, "k", config.k);
    read_if(j, "mi_bins", config.mi_bins);
    read_if(j, "fallback_k", config.fallback_k);
    if (j.contains("inner_penalty")) linear::from_json(j.at("inner_penalty"), config.inner_penalty);
}

void to_json(json& j, const SelectionResult& result) {
    j = {{"method", result.method},
         {"selected_indices", result.selected_indices},
         {"selected_names", result.selected_names},
         {"scores", vector_json(result.scores)},
         {"fold_id", result.fold_id ? json(*result.fold_id) : json(nullptr)}};
}

void from_json(const json& j, SelectionResult& result) {
    j.at("method").get_to(result.method);
    j.at("selected_indices").get_to(result.selected_indices);
    j.at("selected_names").get_to(result.selected_names);
    result.scores = vector_from(j.at("scores"));
    result.fold_id.reset();
    if (!j.at("fold_id").is_null()) result.fold_id = j.at("fold_id").get<int>();
}

}  // namespace hdlss::select

namespace hdlss::ingest {

void to_json(json& j, const LabelRule& rule) {
    j = {{"mode", rule.mode == LabelMode::Refined ? "refined" : "prototype"},
         {"glucose_threshold", rule.glucose_threshold},
         {"hba1c_threshold", rule.hba1c_threshold},
         {"self_report_column", rule.self_report_column},
         {"glucose_column", rule.glucose_column},
         {"hba1c_column", rule.hba1c_column},
         {"positive_code", rule.positive_code},
         {"negative_code", rule.negative_code}};
}

void from_json(const json& j, LabelRule& rule) {
    if (j.contains("mode")) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode != "refined" && mode != "prototype") {
            throw Error(ErrorKind::ConfigError, "ingest", "unknown label mode '" + mode + "'");
        }
        rule.mode = mode == "refined" ? LabelMode::Refined : LabelMode::Prototype;
    }
    read_if(j, "glucose_threshold", rule.glucose_threshold);
    read_if(j, "hba1c_threshold", rule.hba1c_threshold);
    read_if(j, "self_report_column", rule.self_report_column);
    read_if(j, "glucose_column", rule.glucose_column);
    read_if(j, "hba1c_column", rule.hba1c_column);
    read_if(j, "positive_code", rule.positive_code);
    read_if(j, "negative_code", rule.negative_code);
}

void to_json(json& j, const SampleSpec& spec) {
    j = {{"max_rows_per_table", spec.max_rows_per_table ? json(*spec.max_rows_per_table) : json(nullptr)},
         {"keep_fraction", spec.keep_fraction},
         {"seed", spec.seed}};
}

void from_json(const json& j, SampleSpec& spec) {
    if (auto it = j.find("max_rows_per_table"); it != j.end()) {
        if (it->is_null()) {
            spec.max_rows_per_table.reset();
        } else {
            spec.max_rows_per_table = it->get<std::size_t>();
        }
    }
    read_if(j, "keep_fraction", spec.keep_fraction);
    read_if(j, "seed", spec.seed);
}

}  // namespace hdlss::ingest

namespace hdlss::synth {

void to_json(json& j, const SynthSpec& spec) {
    j = {{"n_samples", spec.n_samples},
         {"n_features", spec.n_features},
         {"n_informative", spec.n_informative},
         {"coefficient_scale", spec.coefficient_scale},
         {"noise_std", spec.noise_std},
         {"missing_fraction", spec.missing_fraction},
         {"categorical_fraction", spec.categorical_fraction},
         {"positive_rate_target", spec.positive_rate_target},
         {"seed", spec.seed}};
}

void from_json(const json& j, SynthSpec& spec) {
    read_if(j, "n_samples", spec.n_samples);
    read_if(j, "n_features", spec.n_features);
    read_if(j, "n_informative", spec.n_informative);
    read_if(j, "coefficient_scale", spec.coefficient_scale);
    read_if(j, "noise_std", spec.noise_std);
    read_if(j, "missing_fraction", spec.missing_fraction);
    read_if(j, "categorical_fraction", spec.categorical_fraction);
    read_if(j, "positive_rate_target", spec.positive_rate_target);
    read_if(j, "seed", spec.seed);
}

}  // namespace hdlss::synth

namespace hdlss::eval {

void to_json(json& j, const Metrics& m) {
    j = {{"accuracy", m.accuracy},
         {"precision", m.precision},
         {"recall", m.recall},
         {"f1", m.f1},
         {"auc", m.auc},
         {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}}},
         {"threshold", m.threshold}};
}

void to_json(json& j, const RocCurve& curve) {
    j = json::array();
    for (const auto& p : curve.points) j.push_back({p.fpr, p.tpr, p.threshold});
}

void to_json(json& j, const FoldReport& fold) {
    j = {{"fold_id", fold.fold_id},
         {"test_rows", fold.test_rows},
         {"per_model", fold.per_model},
         {"per_model_roc", fold.per_model_roc},
         {"selection", fold.selection ? json(*fold.selection) : json(nullptr)}};
}

void to_json(json& j, const RunReport& report) {
    json stability = json::array();
    for (const auto& s : report.selection_stability) {
        stability.push_back({{"fold_a", s.fold_a}, {"fold_b", s.fold_b}, {"jaccard", s.jaccard}});
    }
    j = {{"folds", report.folds},
         {"mean_metrics", report.mean_metrics},
         {"selection_stability", stability},
         {"metadata", report.metadata}};
}

void to_json(json& j, const Importance& imp) {
    j = {{"feature_name", imp.feature_name},
         {"feature_index", imp.feature_index},
         {"importance_mean", imp.mean},
         {"importance_std", imp.std}};
}

}  // namespace hdlss::eval

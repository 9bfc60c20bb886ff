#include "hdlss/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "hdlss/error.hpp"
#include "hdlss/rng.hpp"

namespace hdlss::eval {
namespace {

constexpr const char* kModule = "eval";

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

template <typename T>
std::vector<T> pick(std::span<const T> values, std::span<const std::size_t> rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(values[r]);
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void score_model(FoldReport& report, const std::string& name, std::span<const int> labels,
                 const Eigen::VectorXd& probs, double threshold) {
    auto values = to_std(probs);
    auto metrics = confusion_metrics(labels, values, threshold);
    auto roc = roc_auc(labels, values);
    metrics.auc = roc.auc;
    report.per_model[name] = metrics;
    report.per_model_roc[name] = std::move(roc.curve);
    report.test_probs[name] = std::move(values);
}

mlp::MlpConfig reseeded(mlp::MlpConfig config, std::uint64_t stream) {
    config.seed = mix_seed(config.seed, stream);
    return config;
}

FoldReport run_fold(const ingest::LabeledTable& data, const Fold& fold, int fold_id, const CvConfig& config) {
    FoldReport report;
    report.fold_id = fold_id;
    report.train_rows = fold.train;
    report.test_rows = fold.test;

    const Table train_table = data.features.select_rows(fold.train);
    const Table test_table = data.features.select_rows(fold.test);
    auto plan = preprocess::fit_plan(train_table, config.missingness_threshold);
    auto train = preprocess::apply_plan(plan, train_table, true);
    auto test = preprocess::apply_plan(plan, test_table, true);
    train.labels = pick(std::span<const int>(data.labels), std::span<const std::size_t>(fold.train));
    test.labels = pick(std::span<const int>(data.labels), std::span<const std::size_t>(fold.test));

    FoldArtifacts artifacts;
    artifacts.plan = std::move(plan);
    artifacts.l1 = linear::fit(train, config.l1);
    score_model(report, kL1Logistic, test.labels, linear::predict_proba(artifacts.l1, test.values), config.threshold);
    artifacts.l2 = linear::fit(train, config.l2);
    score_model(report, kL2Logistic, test.labels, linear::predict_proba(artifacts.l2, test.values), config.threshold);
    artifacts.mlp_full = mlp::train(train, reseeded(config.mlp_full, 100 + static_cast<std::uint64_t>(fold_id)));
    score_model(report, kMlpFull, test.labels, mlp::forward(artifacts.mlp_full, test.values), config.threshold);

    auto selection = select::select_features(train, config.selection);
    selection.fold_id = fold_id;
    const auto train_sel = train.select_columns(selection.selected_indices);
    const auto test_sel = test.select_columns(selection.selected_indices);
    artifacts.hybrid = mlp::train(train_sel, reseeded(config.mlp_hybrid, 200 + static_cast<std::uint64_t>(fold_id)));
    const char* hybrid_name = config.pipeline == Pipeline::Refined ? kHybridTopK : kHybridPrototype;
    score_model(report, hybrid_name, test.labels, mlp::forward(artifacts.hybrid, test_sel.values), config.threshold);

    report.selection = std::move(selection);
    report.artifacts = std::move(artifacts);
    return report;
}

}  // namespace

Metrics confusion_metrics(std::span<const int> labels, std::span<const double> probs, double threshold) {
    if (labels.size() != probs.size()) {
        throw Error(ErrorKind::LengthMismatch, kModule,
                    std::to_string(labels.size()) + " labels vs " + std::to_string(probs.size()) + " scores");
    }
    Metrics m;
    m.threshold = threshold;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = probs[i] >= threshold;
        if (labels[i] == 1) {
            predicted ? ++m.confusion.tp : ++m.confusion.fn;
        } else {
            predicted ? ++m.confusion.fp : ++m.confusion.tn;
        }
    }
    const auto [tp, fp, tn, fn] = m.confusion;
    m.accuracy = ratio(static_cast<double>(tp + tn), static_cast<double>(labels.size()));
    m.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    m.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    if (tp + fn > 0 && tn + fp > 0) m.auc = roc_auc(labels, probs).auc;
    return m;
}

RocResult roc_auc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw Error(ErrorKind::LengthMismatch, kModule, "labels and scores differ in length");
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    const auto negatives = static_cast<long>(labels.size()) - positives;
    if (positives == 0 || negatives == 0) throw Error(ErrorKind::SingleClass, kModule, "ROC needs both classes");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult result;
    const double top = scores[order.front()];
    result.curve.points.push_back({0.0, 0.0, top + 1.0});
    long tp = 0, fp = 0;
    // twice the area in units of (pair counts), kept integral until the end
    long double doubled_area = 0.0L;
    for (std::size_t i = 0; i < order.size();) {
        const double score = scores[order[i]];
        const long tp_before = tp, fp_before = fp;
        while (i < order.size() && scores[order[i]] == score) {
            labels[order[i]] == 1 ? ++tp : ++fp;
            ++i;
        }
        doubled_area += static_cast<long double>(fp - fp_before) * static_cast<long double>(tp + tp_before);
        result.curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                                       static_cast<double>(tp) / static_cast<double>(positives), score});
    }
    result.auc = static_cast<double>(doubled_area / (2.0L * positives * negatives));
    return result;
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

std::vector<Fold> stratified_folds(std::span<const int> labels, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw Error(ErrorKind::ConfigError, kModule, "n_folds must be at least 2");
    std::vector<std::vector<std::size_t>> test(static_cast<std::size_t>(n_folds));
    Rng rng(seed);
    std::size_t next = 0;
    for (int cls : {1, 0}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        if (members.size() < static_cast<std::size_t>(n_folds)) {
            throw Error(ErrorKind::ClassTooSmall, kModule,
                        "class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                            " rows, fewer than " + std::to_string(n_folds) + " folds");
        }
        rng.shuffle(std::span<std::size_t>(members));
        // continue the round robin where the previous class stopped so the
        // fold sizes stay balanced overall
        for (auto m : members) {
            test[next].push_back(m);
            next = (next + 1) % test.size();
        }
    }
    std::vector<Fold> folds(test.size());
    for (std::size_t f = 0; f < test.size(); ++f) {
        std::sort(test[f].begin(), test[f].end());
        folds[f].test = test[f];
        std::vector<bool> held(labels.size(), false);
        for (auto i : test[f]) held[i] = true;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!held[i]) folds[f].train.push_back(i);
        }
    }
    return folds;
}

std::string to_string(Pipeline pipeline) { return pipeline == Pipeline::Refined ? "refined" : "prototype"; }

Pipeline pipeline_from_string(const std::string& text) {
    if (text == "refined") return Pipeline::Refined;
    if (text == "prototype") return Pipeline::Prototype;
    throw Error(ErrorKind::ConfigError, kModule, "unknown pipeline '" + text + "'");
}

void CvConfig::validate() const {
    if (n_folds < 2) throw Error(ErrorKind::ConfigError, kModule, "n_folds must be at least 2");
    if (!(missingness_threshold >= 0.0 && missingness_threshold <= 1.0)) {
        throw Error(ErrorKind::ConfigError, kModule, "missingness threshold must lie in [0, 1]");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorKind::ConfigError, kModule, "threshold must lie in [0, 1]");
    if (importance_repeats <= 0) throw Error(ErrorKind::ConfigError, kModule, "importance_repeats must be positive");
    if (l1.kind != linear::PenaltyKind::L1) throw Error(ErrorKind::ConfigError, kModule, "l1 baseline needs an l1 penalty");
    if (l2.kind != linear::PenaltyKind::L2) throw Error(ErrorKind::ConfigError, kModule, "l2 baseline needs an l2 penalty");
    const bool prototype_method = selection.method == select::Method::PrototypeL1Nonzero;
    if ((pipeline == Pipeline::Prototype) != prototype_method) {
        throw Error(ErrorKind::ConfigError, kModule,
                    "selection method '" + select::to_string(selection.method) + "' does not fit the " +
                        to_string(pipeline) + " pipeline");
    }
    l1.validate();
    l2.validate();
    mlp_full.validate();
    mlp_hybrid.validate();
    selection.validate();
}

std::vector<std::string> CvConfig::model_names() const {
    return {kL1Logistic, kL2Logistic, kMlpFull, pipeline == Pipeline::Refined ? kHybridTopK : kHybridPrototype};
}

std::map<std::string, Metrics> mean_over_folds(const std::vector<FoldReport>& folds) {
    std::map<std::string, Metrics> sums;
    std::map<std::string, int> counts;
    for (const auto& fold : folds) {
        for (const auto& [name, m] : fold.per_model) {
            auto& s = sums[name];
            s.accuracy += m.accuracy;
            s.precision += m.precision;
            s.recall += m.recall;
            s.f1 += m.f1;
            s.auc += m.auc;
            s.confusion.tp += m.confusion.tp;
            s.confusion.fp += m.confusion.fp;
            s.confusion.tn += m.confusion.tn;
            s.confusion.fn += m.confusion.fn;
            s.threshold = m.threshold;
            ++counts[name];
        }
    }
    for (auto& [name, s] : sums) {
        const double k = counts[name];
        s.accuracy /= k;
        s.precision /= k;
        s.recall /= k;
        s.f1 /= k;
        s.auc /= k;
    }
    return sums;
}

std::vector<Importance> permutation_importance(const Predictor& model, const Eigen::MatrixXd& x,
                                               std::span<const int> labels, std::span<const std::string> names,
                                               int repeats, std::uint64_t seed) {
    if (repeats <= 0) throw Error(ErrorKind::ConfigError, kModule, "repeats must be positive");
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
        throw Error(ErrorKind::LengthMismatch, kModule, "label count does not match row count");
    }
    const double baseline = roc_auc(labels, to_std(model(x))).auc;

    std::vector<Importance> out;
    Eigen::MatrixXd shuffled = x;
    std::vector<double> column(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
        std::vector<double> drops;
        for (int r = 0; r < repeats; ++r) {
            Eigen::Map<Eigen::VectorXd>(column.data(), x.rows()) = x.col(j);
            rng.shuffle(std::span<double>(column));
            shuffled.col(j) = Eigen::Map<const Eigen::VectorXd>(column.data(), x.rows());
            drops.push_back(baseline - roc_auc(labels, to_std(model(shuffled))).auc);
        }
        shuffled.col(j) = x.col(j);
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / repeats;
        double var = 0.0;
        for (double d : drops) var += (d - mean) * (d - mean);
        const auto idx = static_cast<std::size_t>(j);
        out.push_back({idx < names.size() ? names[idx] : std::to_string(idx), idx, mean, std::sqrt(var / repeats)});
    }
    std::stable_sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) { return a.mean > b.mean; });
    return out;
}

ingest::LabeledTable prepare(const Table& table, const ingest::LabelRule& rule, const std::string& key_column) {
    auto labeled = ingest::derive_label(table, rule);
    const std::string drop[] = {key_column};
    labeled.features = labeled.features.without_columns(drop);
    return labeled;
}

RunReport run_cv(const Table& table, const ingest::LabelRule& rule, const CvConfig& config) {
    config.validate();
    return run_cv(prepare(table, rule, config.key_column), config);
}

RunReport run_cv(const ingest::LabeledTable& data, const CvConfig& config) {
    config.validate();
    const auto folds = stratified_folds(data.labels, config.n_folds, config.seed);
    return run_cv(data, config, folds);
}

RunReport run_cv(const ingest::LabeledTable& data, const CvConfig& config, std::span<const Fold> folds) {
    config.validate();
    for (const auto& fold : folds) {
        for (auto i : fold.train) {
            if (i >= data.labels.size()) throw Error(ErrorKind::DimensionMismatch, kModule, "fold row out of range");
        }
        for (auto i : fold.test) {
            if (i >= data.labels.size()) throw Error(ErrorKind::DimensionMismatch, kModule, "fold row out of range");
        }
    }

    RunReport report;
    report.labels = data.labels;
    report.folds.resize(folds.size());
    std::vector<std::exception_ptr> failures(folds.size());

    auto work = [&](std::size_t f) {
        try {
            report.folds[f] = run_fold(data, folds[f], static_cast<int>(f) + 1, config);
        } catch (...) {
            failures[f] = std::current_exception();
        }
    };
    if (config.parallel_folds) {
        std::vector<std::thread> workers;
        for (std::size_t f = 0; f < folds.size(); ++f) workers.emplace_back(work, f);
        for (auto& w : workers) w.join();
    } else {
        for (std::size_t f = 0; f < folds.size(); ++f) {
            work(f);
            if (failures[f]) break;
        }
    }
    for (std::size_t f = 0; f < failures.size(); ++f) {
        if (!failures[f]) continue;
        const std::string where = "fold " + std::to_string(f + 1) + ": ";
        try {
            std::rethrow_exception(failures[f]);
        } catch (const Error& e) {
            throw Error(e.kind(), e.module(), where + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorKind::NonFiniteInput, kModule, where + e.what());
        }
    }

    report.mean_metrics = mean_over_folds(report.folds);
    for (std::size_t a = 0; a < report.folds.size(); ++a) {
        for (std::size_t b = a + 1; b < report.folds.size(); ++b) {
            report.selection_stability.push_back({report.folds[a].fold_id, report.folds[b].fold_id,
                                                  select::jaccard(*report.folds[a].selection, *report.folds[b].selection)});
        }
    }
    const auto positives = std::count(data.labels.begin(), data.labels.end(), 1);
    report.metadata = {{"n_rows", data.labels.size()},
                       {"n_positive", positives},
                       {"n_source_columns", data.features.columns.size()},
                       {"pipeline", to_string(config.pipeline)},
                       {"n_folds", folds.size()},
                       {"seed", config.seed}};
    return report;
}

FinalArtifacts final_refit(const Table& table, const ingest::LabelRule& rule, const CvConfig& config) {
    config.validate();
    return final_refit(prepare(table, rule, config.key_column), config);
}

FinalArtifacts final_refit(const ingest::LabeledTable& data, const CvConfig& config) {
    config.validate();
    FinalArtifacts out;
    out.plan = preprocess::fit_plan(data.features, config.missingness_threshold);
    auto full = preprocess::apply_plan(out.plan, data.features, true);
    full.labels = data.labels;
    out.selection = select::select_features(full, config.selection);
    const auto reduced = full.select_columns(out.selection.selected_indices);
    out.model = mlp::train(reduced, reseeded(config.mlp_hybrid, 999));
    const auto& model = out.model;
    out.importance = permutation_importance([&](const Eigen::MatrixXd& x) { return mlp::forward(model, x); },
                                            reduced.values, reduced.labels, reduced.feature_names,
                                            config.importance_repeats, mix_seed(config.seed, 777));
    return out;
}

}  // namespace hdlss::eval

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hdlss/ingest.hpp"
#include "hdlss/linear.hpp"
#include "hdlss/mlp.hpp"
#include "hdlss/preprocess.hpp"
#include "hdlss/select.hpp"

namespace hdlss::eval {

inline constexpr const char* kL1Logistic = "l1_logistic";
inline constexpr const char* kL2Logistic = "l2_logistic";
inline constexpr const char* kMlpFull = "mlp_full";
inline constexpr const char* kHybridTopK = "hybrid_topk";
inline constexpr const char* kHybridPrototype = "hybrid_prototype";

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    Confusion confusion;
    double threshold = 0.5;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

/// Starts at (0, 0) and ends at (1, 1). The first point's threshold is one
/// above the highest score.
struct RocCurve {
    std::vector<RocPoint> points;
};

/// Predicts positive iff prob >= threshold. Precision, recall and F1 are 0
/// when their denominators vanish. `auc` is filled when both classes occur.
Metrics confusion_metrics(std::span<const int> labels, std::span<const double> probs, double threshold = 0.5);

struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};

/// Thresholds at each distinct score (ties grouped); trapezoidal AUC, which
/// equals the Mann-Whitney statistic with ties counted as 1/2.
RocResult roc_auc(std::span<const int> labels, std::span<const double> scores);

/// Trapezoidal area under an arbitrary ROC curve.
double trapezoid_area(const RocCurve& curve);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class seeded shuffle followed by round-robin assignment. Throws
/// ClassTooSmall when a class has fewer members than folds.
std::vector<Fold> stratified_folds(std::span<const int> labels, int n_folds, std::uint64_t seed);

enum class Pipeline { Prototype, Refined };

std::string to_string(Pipeline pipeline);
Pipeline pipeline_from_string(const std::string& text);

struct CvConfig {
    Pipeline pipeline = Pipeline::Refined;
    /// Dropped from the features before preprocessing when present.
    std::string key_column = "SEQN";
    double missingness_threshold = 0.5;
    linear::PenaltyConfig l1{linear::PenaltyKind::L1};
    linear::PenaltyConfig l2{linear::PenaltyKind::L2};
    mlp::MlpConfig mlp_full = mlp::MlpConfig::baseline();
    mlp::MlpConfig mlp_hybrid = mlp::MlpConfig::hybrid();
    select::SelectionConfig selection;
    int n_folds = 3;
    std::uint64_t seed = 42;
    double threshold = 0.5;
    int importance_repeats = 5;
    bool parallel_folds = false;

    void validate() const;
    std::vector<std::string> model_names() const;
};

/// Models and fitted state of one fold, kept so reports can be persisted
/// and re-scored.
struct FoldArtifacts {
    preprocess::PreprocessPlan plan;
    linear::LinearModel l1;
    linear::LinearModel l2;
    mlp::MlpModel mlp_full;
    mlp::MlpModel hybrid;
};

struct FoldReport {
    int fold_id = 0;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::map<std::string, Metrics> per_model;
    std::map<std::string, RocCurve> per_model_roc;
    /// Test-fold probabilities per model, aligned with test_rows.
    std::map<std::string, std::vector<double>> test_probs;
    std::optional<select::SelectionResult> selection;
    std::optional<FoldArtifacts> artifacts;
};

struct StabilityEntry {
    int fold_a = 0;
    int fold_b = 0;
    double jaccard = 0.0;
};

struct RunReport {
    std::vector<FoldReport> folds;
    std::map<std::string, Metrics> mean_metrics;
    std::vector<StabilityEntry> selection_stability;
    /// Labels of the rows that survived label derivation (row ids index this).
    std::vector<int> labels;
    nlohmann::json metadata;
};

/// Arithmetic mean over folds; confusion counts are summed.
std::map<std::string, Metrics> mean_over_folds(const std::vector<FoldReport>& folds);

/// Scores rows of a feature matrix.
using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct Importance {
    std::string feature_name;
    std::size_t feature_index = 0;
    double mean = 0.0;
    double std = 0.0;
};

/// AUC drop when each column is shuffled `repeats` times; sorted by
/// descending mean (ties by ascending index).
std::vector<Importance> permutation_importance(const Predictor& model, const Eigen::MatrixXd& x,
                                               std::span<const int> labels, std::span<const std::string> names,
                                               int repeats, std::uint64_t seed);

/// Cross-validated comparison of the four models. Everything fitted inside a
/// fold (preprocessing, selection, models) sees only that fold's training
/// rows. A failing fold aborts the run with its id in the message.
RunReport run_cv(const Table& table, const ingest::LabelRule& rule, const CvConfig& config);

/// Same as above on data whose labels are already derived.
RunReport run_cv(const ingest::LabeledTable& data, const CvConfig& config);

/// Same, with caller-supplied folds instead of stratified_folds.
RunReport run_cv(const ingest::LabeledTable& data, const CvConfig& config, std::span<const Fold> folds);

struct FinalArtifacts {
    preprocess::PreprocessPlan plan;
    select::SelectionResult selection;
    mlp::MlpModel model;
    std::vector<Importance> importance;
};

/// Refits preprocessing, selection and the hybrid head on all rows and
/// ranks the selected features by permutation importance.
FinalArtifacts final_refit(const Table& table, const ingest::LabelRule& rule, const CvConfig& config);
FinalArtifacts final_refit(const ingest::LabeledTable& data, const CvConfig& config);

/// Labeled rows with the key column removed, as used by run_cv.
ingest::LabeledTable prepare(const Table& table, const ingest::LabelRule& rule, const std::string& key_column);

}  // namespace hdlss::eval

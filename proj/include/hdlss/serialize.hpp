#pragma once

#include <nlohmann/json.hpp>

#include "hdlss/eval.hpp"
#include "hdlss/ingest.hpp"
#include "hdlss/linear.hpp"
#include "hdlss/mlp.hpp"
#include "hdlss/preprocess.hpp"
#include "hdlss/select.hpp"
#include "hdlss/synth.hpp"

// JSON mappings for persisted artifacts. Doubles are written in shortest
// round-trip form, so a reloaded model predicts bit-identically.

namespace hdlss::preprocess {
void to_json(nlohmann::json& j, const PreprocessPlan& plan);
void from_json(const nlohmann::json& j, PreprocessPlan& plan);
}  // namespace hdlss::preprocess

namespace hdlss::linear {
void to_json(nlohmann::json& j, const PenaltyConfig& config);
void from_json(const nlohmann::json& j, PenaltyConfig& config);
void to_json(nlohmann::json& j, const LinearModel& model);
void from_json(const nlohmann::json& j, LinearModel& model);
}  // namespace hdlss::linear

namespace hdlss::mlp {
void to_json(nlohmann::json& j, const MlpConfig& config);
void from_json(const nlohmann::json& j, MlpConfig& config);
void to_json(nlohmann::json& j, const MlpModel& model);
void from_json(const nlohmann::json& j, MlpModel& model);
}  // namespace hdlss::mlp

namespace hdlss::select {
void to_json(nlohmann::json& j, const SelectionConfig& config);
void from_json(const nlohmann::json& j, SelectionConfig& config);
void to_json(nlohmann::json& j, const SelectionResult& result);
void from_json(const nlohmann::json& j, SelectionResult& result);
}  // namespace hdlss::select

namespace hdlss::ingest {
void to_json(nlohmann::json& j, const LabelRule& rule);
void from_json(const nlohmann::json& j, LabelRule& rule);
void to_json(nlohmann::json& j, const SampleSpec& spec);
void from_json(const nlohmann::json& j, SampleSpec& spec);
}  // namespace hdlss::ingest

namespace hdlss::synth {
void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);
}  // namespace hdlss::synth

namespace hdlss::eval {
void to_json(nlohmann::json& j, const Metrics& metrics);
void to_json(nlohmann::json& j, const RocCurve& curve);
void to_json(nlohmann::json& j, const FoldReport& fold);
void to_json(nlohmann::json& j, const RunReport& report);
void to_json(nlohmann::json& j, const Importance& importance);
}  // namespace hdlss::eval

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdlss/eval.hpp"
#include "hdlss/ingest.hpp"
#include "hdlss/synth.hpp"

namespace hdlss::pipeline {

/// Everything one end-to-end run needs. JSON schema: see README.
struct RunConfig {
    eval::Pipeline pipeline = eval::Pipeline::Refined;
    std::filesystem::path data_dir = ".";
    std::vector<std::string> file_names = synth::default_file_names();
    std::string key_column = "SEQN";
    ingest::CsvOptions csv;
    /// Item table pivoted into indicator columns; disabled when column is empty.
    std::string pivot_file = "medications.csv";
    std::string pivot_column;
    ingest::LabelRule label;
    /// Only applied by the prototype pipeline.
    ingest::SampleSpec sample;
    eval::CvConfig cv;
    std::filesystem::path output_dir = "out";

    /// Checks everything that can be checked without touching the data.
    void validate() const;
};

RunConfig default_config(eval::Pipeline pipeline);

/// Command-line overrides; unset members leave the config untouched.
struct Overrides {
    std::optional<std::string> pipeline;
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> folds;
    std::optional<int> k;
    std::optional<std::string> select_method;
};

/// Defaults for the pipeline, then the document, then the overrides.
RunConfig make_config(const nlohmann::json& document, const Overrides& overrides = {});
RunConfig load_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides = {});

nlohmann::json to_json(const RunConfig& config);

/// Loads the component files, truncates / pivots / merges them and, for the
/// prototype pipeline, subsamples the merged rows.
Table load_dataset(const RunConfig& config);

struct RunResult {
    eval::RunReport report;
    eval::FinalArtifacts final;
};

/// ingest -> label -> cross-validation -> final refit -> artifacts on disk.
RunResult run(const RunConfig& config);

/// Writes every report file for an already computed result.
void write_outputs(const RunConfig& config, const RunResult& result);

/// Pooled out-of-fold probabilities and labels for one model, fold order.
std::pair<std::vector<int>, std::vector<double>> pooled_predictions(const eval::RunReport& report,
                                                                    const std::string& model);

/// Generates a synthetic dataset and writes the component CSV layout.
void gen_synth(const synth::SynthSpec& spec, const std::filesystem::path& out_dir);

/// printf("%.6g"), the fixed precision used by every CSV output.
std::string format_g6(double value);

}  // namespace hdlss::pipeline

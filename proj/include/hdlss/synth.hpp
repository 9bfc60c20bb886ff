#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdlss/ingest.hpp"
#include "hdlss/table.hpp"

namespace hdlss::synth {

struct SynthSpec {
    int n_samples = 1000;
    int n_features = 800;
    int n_informative = 20;
    double coefficient_scale = 1.0;
    double noise_std = 0.0;
    double missing_fraction = 0.0;
    double categorical_fraction = 0.0;
    double positive_rate_target = 0.3;
    std::uint64_t seed = 42;

    void validate() const;
};

struct SynthData {
    /// Key column "SEQN" (1..n) followed by the feature columns.
    Table table;
    std::vector<int> labels;
    /// Indices into the feature columns (0-based, excluding the key).
    std::vector<std::size_t> informative_indices;
    std::vector<std::string> informative_names;
    std::vector<std::string> feature_names;
    double intercept = 0.0;
};

/// Standard-normal features; logits from signed informative coefficients
/// plus an intercept bisected so the mean sampled probability matches the
/// target rate; Bernoulli labels; tercile categoricals; uniform missingness.
SynthData generate(const SynthSpec& spec);

/// Name of feature `index` for a problem with `count` features.
std::string feature_name(std::size_t index, std::size_t count);

/// Adds self-report / glucose / HbA1c columns consistent with the labels
/// under both label modes of `rule`.
Table with_label_columns(const SynthData& data, const ingest::LabelRule& rule, std::uint64_t seed);

/// Default component file names.
std::vector<std::string> default_file_names();

/// Writes the labeled table as component CSVs sharing the key column:
/// features are split into contiguous chunks, label columns go to the labs
/// and questionnaire files. Also writes ground_truth.json.
void write_layout(const SynthData& data, const SynthSpec& spec, const std::filesystem::path& dir,
                  const ingest::LabelRule& rule = {}, const std::vector<std::string>& file_names = default_file_names());

/// Serializes a table as CSV (missing cells empty, numbers round-trip).
std::string to_csv(const Table& table);

}  // namespace hdlss::synth

#include "hdlss/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hdlss/error.hpp"
#include "hdlss/linear.hpp"
#include "hdlss/rng.hpp"

namespace hdlss::synth {
namespace {

constexpr const char* kModule = "synth";

enum Stream : std::uint64_t { kFeatures = 1, kInformative, kLabels, kCategorical, kMissing, kLabelColumns };

/// k distinct indices from [0, n), ascending.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

double mean_probability(const std::vector<double>& logits, double shift) {
    double total = 0.0;
    for (double z : logits) total += linear::sigmoid(z + shift);
    return total / static_cast<double>(logits.size());
}

std::string quote_csv(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write " + path.string());
    out << contents;
    if (!out) throw Error(ErrorKind::IoError, kModule, "failed writing " + path.string());
}

}  // namespace

void SynthSpec::validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidSpec, kModule, why); };
    if (n_samples <= 0) fail("n_samples must be positive");
    if (n_features <= 0) fail("n_features must be positive");
    if (n_informative <= 0 || n_informative > n_features) fail("n_informative must lie in [1, n_features]");
    if (!(coefficient_scale >= 0.0)) fail("coefficient_scale must be non-negative");
    if (!(noise_std >= 0.0)) fail("noise_std must be non-negative");
    if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) fail("missing_fraction must lie in [0, 1)");
    if (!(categorical_fraction >= 0.0 && categorical_fraction <= 1.0)) fail("categorical_fraction must lie in [0, 1]");
    if (!(positive_rate_target > 0.0 && positive_rate_target < 1.0)) fail("positive_rate_target must lie in (0, 1)");
}

std::string feature_name(std::size_t index, std::size_t count) {
    std::size_t width = 4;
    for (std::size_t c = count > 0 ? count - 1 : 0; c >= 10000; c /= 10) ++width;
    std::string digits = std::to_string(index);
    return "F" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

SynthData generate(const SynthSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.n_samples);
    const auto p = static_cast<std::size_t>(spec.n_features);

    // column-major feature values
    std::vector<std::vector<double>> x(p, std::vector<double>(n));
    {
        Rng rng(mix_seed(spec.seed, kFeatures));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) x[j][i] = rng.normal();
        }
    }

    SynthData data;
    Rng pick(mix_seed(spec.seed, kInformative));
    data.informative_indices = choose(p, static_cast<std::size_t>(spec.n_informative), pick);
    std::vector<double> signs;
    for (std::size_t k = 0; k < data.informative_indices.size(); ++k) signs.push_back(pick.bernoulli(0.5) ? 1.0 : -1.0);

    Rng label_rng(mix_seed(spec.seed, kLabels));
    std::vector<double> logits(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < data.informative_indices.size(); ++k) {
            logits[i] += signs[k] * spec.coefficient_scale * x[data.informative_indices[k]][i];
        }
        logits[i] += spec.noise_std * label_rng.normal();
    }
    double lo = -60.0, hi = 60.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (mean_probability(logits, mid) < spec.positive_rate_target ? lo : hi) = mid;
    }
    data.intercept = 0.5 * (lo + hi);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) data.labels[i] = label_rng.bernoulli(linear::sigmoid(logits[i] + data.intercept)) ? 1 : 0;

    std::vector<bool> categorical(p, false);
    {
        Rng rng(mix_seed(spec.seed, kCategorical));
        const auto count = static_cast<std::size_t>(std::llround(spec.categorical_fraction * static_cast<double>(p)));
        for (auto j : choose(p, count, rng)) categorical[j] = true;
    }

    Rng miss(mix_seed(spec.seed, kMissing));
    std::vector<std::optional<double>> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = static_cast<double>(i + 1);
    data.table.name = "synthetic";
    data.table.row_count = n;
    data.table.columns.push_back(Column::numeric("SEQN", std::move(keys)));
    for (std::size_t j = 0; j < p; ++j) {
        const std::string name = feature_name(j, p);
        data.feature_names.push_back(name);
        if (categorical[j]) {
            std::vector<std::size_t> rank(n);
            std::iota(rank.begin(), rank.end(), std::size_t{0});
            std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return x[j][a] < x[j][b]; });
            std::vector<std::optional<std::string>> cells(n);
            for (std::size_t r = 0; r < n; ++r) {
                const std::size_t tercile = 3 * r / n;
                cells[rank[r]] = tercile == 0 ? "low" : (tercile == 1 ? "mid" : "high");
            }
            for (auto& c : cells) {
                if (miss.bernoulli(spec.missing_fraction)) c.reset();
            }
            data.table.columns.push_back(Column::categorical(name, std::move(cells)));
        } else {
            std::vector<std::optional<double>> cells(x[j].begin(), x[j].end());
            for (auto& c : cells) {
                if (miss.bernoulli(spec.missing_fraction)) c.reset();
            }
            data.table.columns.push_back(Column::numeric(name, std::move(cells)));
        }
    }
    for (auto j : data.informative_indices) data.informative_names.push_back(data.feature_names[j]);
    return data;
}

Table with_label_columns(const SynthData& data, const ingest::LabelRule& rule, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kLabelColumns));
    const std::size_t n = data.labels.size();
    std::vector<std::optional<double>> self_report(n), glucose(n), hba1c(n);
    auto tenth = [](double v) { return std::round(v * 10.0) / 10.0; };
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = data.labels[i] == 1;
        self_report[i] = positive ? rule.positive_code : rule.negative_code;
        glucose[i] = positive ? tenth(rng.uniform(rule.glucose_threshold, rule.glucose_threshold + 80.0))
                              : tenth(rng.uniform(70.0, rule.glucose_threshold - 1.0));
        hba1c[i] = positive ? tenth(rng.uniform(rule.hba1c_threshold, rule.hba1c_threshold + 3.5))
                            : tenth(rng.uniform(4.0, rule.hba1c_threshold - 0.1));
    }
    Table table = data.table;
    table.columns.push_back(Column::numeric(rule.glucose_column, std::move(glucose)));
    table.columns.push_back(Column::numeric(rule.hba1c_column, std::move(hba1c)));
    table.columns.push_back(Column::numeric(rule.self_report_column, std::move(self_report)));
    return table;
}

std::vector<std::string> default_file_names() {
    return {"demo.csv", "exam.csv", "labs.csv", "medications.csv", "questionnaire.csv"};
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out.push_back(',');
        out += quote_csv(table.columns[c].name);
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < table.row_count; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out.push_back(',');
            if (auto cell = table.columns[c].text(r)) out += quote_csv(*cell);
        }
        out.push_back('\n');
    }
    return out;
}

void write_layout(const SynthData& data, const SynthSpec& spec, const std::filesystem::path& dir,
                  const ingest::LabelRule& rule, const std::vector<std::string>& file_names) {
    if (file_names.empty()) throw Error(ErrorKind::InvalidSpec, kModule, "need at least one output file name");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, kModule, "cannot create " + dir.string() + ": " + ec.message());

    const Table labeled = with_label_columns(data, rule, spec.seed);
    const std::size_t files = file_names.size();
    const std::size_t p = data.feature_names.size();
    const std::size_t lab_file = std::min<std::size_t>(2, files - 1);

    std::vector<Table> parts(files);
    std::size_t next = 1;  // column 0 is the key
    for (std::size_t f = 0; f < files; ++f) {
        parts[f].name = std::filesystem::path(file_names[f]).stem().string();
        parts[f].row_count = labeled.row_count;
        parts[f].columns.push_back(labeled.columns.front());
        const std::size_t take = p / files + (f < p % files ? 1 : 0);
        for (std::size_t k = 0; k < take; ++k) parts[f].columns.push_back(labeled.columns[next++]);
    }
    parts[lab_file].columns.push_back(*labeled.find(rule.glucose_column));
    parts[lab_file].columns.push_back(*labeled.find(rule.hba1c_column));
    parts.back().columns.push_back(*labeled.find(rule.self_report_column));

    for (std::size_t f = 0; f < files; ++f) write_file(dir / file_names[f], to_csv(parts[f]));

    const auto positives = std::count(data.labels.begin(), data.labels.end(), 1);
    nlohmann::ordered_json truth = {
        {"spec",
         {{"n_samples", spec.n_samples},
          {"n_features", spec.n_features},
          {"n_informative", spec.n_informative},
          {"coefficient_scale", spec.coefficient_scale},
          {"noise_std", spec.noise_std},
          {"missing_fraction", spec.missing_fraction},
          {"categorical_fraction", spec.categorical_fraction},
          {"positive_rate_target", spec.positive_rate_target},
          {"seed", spec.seed}}},
        {"informative_indices", data.informative_indices},
        {"informative_names", data.informative_names},
        {"label_columns", rule.source_columns()},
        {"key_column", "SEQN"},
        {"intercept", data.intercept},
        {"n_positive", positives},
    };
    write_file(dir / "ground_truth.json", truth.dump(2) + "\n");
}

}  // namespace hdlss::synth

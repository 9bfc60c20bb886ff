#include "hdlss/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hdlss/error.hpp"
#include "hdlss/serialize.hpp"

namespace hdlss::pipeline {
namespace {

constexpr const char* kModule = "cli";
using nlohmann::json;

template <typename T>
void read_if(const json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, kModule, "failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

void set_seed(RunConfig& config, std::uint64_t seed) {
    config.cv.seed = seed;
    config.sample.seed = seed;
    config.cv.mlp_full.seed = seed;
    config.cv.mlp_hybrid.seed = seed;
}

std::string roc_svg(const std::vector<std::pair<std::string, eval::RocResult>>& curves) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
    constexpr double size = 400.0, margin = 50.0;
    auto px = [&](double fpr) { return margin + fpr * size; };
    auto py = [&](double tpr) { return margin + (1.0 - tpr) * size; };
    char buf[256];
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin + 160 << "\" height=\""
        << size + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  margin, margin, size, size);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n", px(0),
                  py(0), px(1), py(1));
    svg << buf;
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.1f</text>\n", px(v),
                      margin + size + 16, v);
        svg << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.1f</text>\n", margin - 6,
                      py(v) + 4, v);
        svg << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">False positive rate</text>\n",
                  margin + size / 2, margin + size + 36);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"14\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 14 %g)\">True positive "
                  "rate</text>\n",
                  margin + size / 2, margin + size / 2);
    svg << buf;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const char* color = colors[c % 5];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : curves[c].second.curve.points) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.fpr), py(p.tpr));
            svg << buf;
        }
        svg << "\"/>\n";
        const double ly = margin + 20.0 + 20.0 * static_cast<double>(c);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                      "<text x=\"%g\" y=\"%g\">%s (AUC %.4f)</text>\n",
                      margin + size + 12, ly, margin + size + 32, ly, color, margin + size + 36, ly + 4,
                      curves[c].first.c_str(), curves[c].second.auc);
        svg << buf;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::string format_g6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void RunConfig::validate() const {
    if (file_names.empty()) throw Error(ErrorKind::ConfigError, kModule, "file_names must not be empty");
    if (key_column.empty()) throw Error(ErrorKind::ConfigError, kModule, "key_column must not be empty");
    if (output_dir.empty()) throw Error(ErrorKind::ConfigError, kModule, "output_dir must not be empty");
    const bool label_matches = (label.mode == ingest::LabelMode::Refined) == (pipeline == eval::Pipeline::Refined);
    if (!label_matches) throw Error(ErrorKind::ConfigError, kModule, "label mode does not match the pipeline");
    if (cv.pipeline != pipeline) throw Error(ErrorKind::ConfigError, kModule, "cv pipeline does not match");
    if (cv.key_column != key_column) throw Error(ErrorKind::ConfigError, kModule, "cv key column does not match");
    label.validate();
    sample.validate();
    cv.validate();
}

RunConfig default_config(eval::Pipeline pipeline) {
    RunConfig config;
    config.pipeline = pipeline;
    config.cv.pipeline = pipeline;
    if (pipeline == eval::Pipeline::Prototype) {
        config.label.mode = ingest::LabelMode::Prototype;
        config.sample.max_rows_per_table = 5000;
        config.sample.keep_fraction = 0.4;
        config.cv.selection.method = select::Method::PrototypeL1Nonzero;
        // the prototype keeps the baseline lasso's non-zero set
        config.cv.selection.inner_penalty = config.cv.l1;
        config.cv.mlp_hybrid = mlp::MlpConfig::baseline();
    } else {
        config.label.mode = ingest::LabelMode::Refined;
    }
    return config;
}

RunConfig make_config(const json& document, const Overrides& overrides) {
    if (!document.is_object() && !document.is_null()) {
        throw Error(ErrorKind::ConfigError, kModule, "config must be a JSON object");
    }
    const json doc = document.is_null() ? json::object() : document;
    try {
        std::string pipeline_name = doc.value("pipeline", std::string("refined"));
        if (overrides.pipeline) pipeline_name = *overrides.pipeline;
        const auto pipeline = eval::pipeline_from_string(pipeline_name);
        RunConfig config = default_config(pipeline);

        if (doc.contains("seed")) set_seed(config, doc.at("seed").get<std::uint64_t>());
        if (doc.contains("data_dir")) config.data_dir = doc.at("data_dir").get<std::string>();
        read_if(doc, "file_names", config.file_names);
        read_if(doc, "key_column", config.key_column);
        read_if(doc, "missing_tokens", config.csv.missing_tokens);
        read_if(doc, "numeric_sentinels", config.csv.numeric_sentinels);
        if (auto it = doc.find("pivot"); it != doc.end()) {
            read_if(*it, "file", config.pivot_file);
            read_if(*it, "column", config.pivot_column);
        }
        if (doc.contains("label")) ingest::from_json(doc.at("label"), config.label);
        if (doc.contains("sample")) ingest::from_json(doc.at("sample"), config.sample);
        if (auto it = doc.find("preprocess"); it != doc.end()) {
            read_if(*it, "missingness_threshold", config.cv.missingness_threshold);
        }
        if (doc.contains("selection")) select::from_json(doc.at("selection"), config.cv.selection);
        if (auto it = doc.find("linear"); it != doc.end()) {
            if (it->contains("l1")) linear::from_json(it->at("l1"), config.cv.l1);
            if (it->contains("l2")) linear::from_json(it->at("l2"), config.cv.l2);
        }
        if (doc.contains("mlp_full")) mlp::from_json(doc.at("mlp_full"), config.cv.mlp_full);
        if (doc.contains("mlp_hybrid")) mlp::from_json(doc.at("mlp_hybrid"), config.cv.mlp_hybrid);
        read_if(doc, "n_folds", config.cv.n_folds);
        read_if(doc, "threshold", config.cv.threshold);
        read_if(doc, "importance_repeats", config.cv.importance_repeats);
        read_if(doc, "parallel_folds", config.cv.parallel_folds);
        if (doc.contains("output_dir")) config.output_dir = doc.at("output_dir").get<std::string>();

        if (overrides.data_dir) config.data_dir = *overrides.data_dir;
        if (overrides.output_dir) config.output_dir = *overrides.output_dir;
        if (overrides.seed) set_seed(config, *overrides.seed);
        if (overrides.folds) config.cv.n_folds = *overrides.folds;
        if (overrides.k) config.cv.selection.k = *overrides.k;
        if (overrides.select_method) config.cv.selection.method = select::method_from_string(*overrides.select_method);

        // the pipeline owns these
        config.label.mode = pipeline == eval::Pipeline::Refined ? ingest::LabelMode::Refined : ingest::LabelMode::Prototype;
        config.cv.key_column = config.key_column;
        config.validate();
        return config;
    } catch (const Error& e) {
        if (e.category() == ErrorCategory::Config) throw;
        throw Error(ErrorKind::ConfigError, e.module(), e.what());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, kModule, std::string("invalid config value: ") + e.what());
    }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides) {
    json document = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw Error(ErrorKind::ConfigError, kModule, "cannot open config " + path->string());
        try {
            document = json::parse(in);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigError, kModule, "config is not valid JSON: " + std::string(e.what()));
        }
    }
    return make_config(document, overrides);
}

json to_json(const RunConfig& config) {
    json j = {{"pipeline", eval::to_string(config.pipeline)},
              {"data_dir", config.data_dir.string()},
              {"file_names", config.file_names},
              {"key_column", config.key_column},
              {"missing_tokens", config.csv.missing_tokens},
              {"numeric_sentinels", config.csv.numeric_sentinels},
              {"pivot", {{"file", config.pivot_file}, {"column", config.pivot_column}}},
              {"label", config.label},
              {"sample", config.sample},
              {"preprocess", {{"missingness_threshold", config.cv.missingness_threshold}}},
              {"selection", config.cv.selection},
              {"linear", {{"l1", config.cv.l1}, {"l2", config.cv.l2}}},
              {"mlp_full", config.cv.mlp_full},
              {"mlp_hybrid", config.cv.mlp_hybrid},
              {"n_folds", config.cv.n_folds},
              {"seed", config.cv.seed},
              {"threshold", config.cv.threshold},
              {"importance_repeats", config.cv.importance_repeats},
              {"parallel_folds", config.cv.parallel_folds},
              {"output_dir", config.output_dir.string()}};
    return j;
}

Table load_dataset(const RunConfig& config) {
    const bool prototype = config.pipeline == eval::Pipeline::Prototype;
    std::vector<Table> tables;
    for (const auto& name : config.file_names) {
        Table t = ingest::load_csv(config.data_dir / name, config.key_column, config.csv);
        if (prototype && config.sample.max_rows_per_table) t = ingest::truncate(t, *config.sample.max_rows_per_table);
        if (!config.pivot_column.empty() && name == config.pivot_file) {
            t = ingest::pivot_wide(t, config.key_column, config.pivot_column);
        }
        tables.push_back(std::move(t));
    }
    Table merged = ingest::merge_on_key(tables, config.key_column);
    if (prototype) merged = ingest::subsample(merged, config.sample);
    return merged;
}

std::pair<std::vector<int>, std::vector<double>> pooled_predictions(const eval::RunReport& report,
                                                                    const std::string& model) {
    std::vector<int> labels;
    std::vector<double> probs;
    for (const auto& fold : report.folds) {
        const auto& p = fold.test_probs.at(model);
        for (std::size_t i = 0; i < fold.test_rows.size(); ++i) {
            labels.push_back(report.labels[fold.test_rows[i]]);
            probs.push_back(p[i]);
        }
    }
    return {labels, probs};
}

RunResult run(const RunConfig& config) {
    config.validate();
    const Table table = load_dataset(config);
    const auto labeled = eval::prepare(table, config.label, config.key_column);
    RunResult result;
    result.report = eval::run_cv(labeled, config.cv);
    result.final = eval::final_refit(labeled, config.cv);
    write_outputs(config, result);
    return result;
}

void write_outputs(const RunConfig& config, const RunResult& result) {
    const auto& out = config.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(out / "models", ec);
    if (ec) throw Error(ErrorKind::IoError, kModule, "cannot create " + out.string() + ": " + ec.message());

    const auto& report = result.report;
    const auto models = config.cv.model_names();

    json doc = report;
    doc["metadata"]["config"] = to_json(config);
    doc["metadata"]["final_selection"] = result.final.selection.selected_names;
    write_json(out / "run_report.json", doc);

    std::string metrics = "model,fold,acc,prec,rec,f1,auc\n";
    auto metric_row = [&](const std::string& model, const std::string& fold, const eval::Metrics& m) {
        metrics += model + "," + fold + "," + format_g6(m.accuracy) + "," + format_g6(m.precision) + "," +
                   format_g6(m.recall) + "," + format_g6(m.f1) + "," + format_g6(m.auc) + "\n";
    };
    for (const auto& model : models) {
        for (const auto& fold : report.folds) metric_row(model, std::to_string(fold.fold_id), fold.per_model.at(model));
        metric_row(model, "mean", report.mean_metrics.at(model));
    }
    write_text(out / "metrics.csv", metrics);

    std::vector<std::pair<std::string, eval::RocResult>> pooled;
    for (const auto& model : models) {
        const auto [labels, probs] = pooled_predictions(report, model);
        auto roc = eval::roc_auc(labels, probs);
        std::string csv = "fpr,tpr,threshold\n";
        for (const auto& p : roc.curve.points) {
            csv += format_g6(p.fpr) + "," + format_g6(p.tpr) + "," + format_g6(p.threshold) + "\n";
        }
        write_text(out / ("roc_" + model + ".csv"), csv);
        pooled.emplace_back(model, std::move(roc));
    }
    write_text(out / "roc.svg", roc_svg(pooled));

    std::string selection = "fold_id,rank,feature_name,score\n";
    auto selection_rows = [&](const std::string& fold, const select::SelectionResult& s) {
        for (std::size_t r = 0; r < s.selected_indices.size(); ++r) {
            selection += fold + "," + std::to_string(r + 1) + "," + s.selected_names[r] + "," +
                         format_g6(s.scores(static_cast<Eigen::Index>(s.selected_indices[r]))) + "\n";
        }
    };
    for (const auto& fold : report.folds) selection_rows(std::to_string(fold.fold_id), *fold.selection);
    selection_rows("final", result.final.selection);
    write_text(out / "selection_folds.csv", selection);

    std::string importance = "rank,feature_name,importance_mean,importance_std\n";
    for (std::size_t r = 0; r < result.final.importance.size(); ++r) {
        const auto& imp = result.final.importance[r];
        importance += std::to_string(r + 1) + "," + imp.feature_name + "," + format_g6(imp.mean) + "," +
                      format_g6(imp.std) + "\n";
    }
    write_text(out / "importance.csv", importance);

    write_json(out / "plan.json", result.final.plan);
    const auto hybrid = models.back();
    for (const auto& fold : report.folds) {
        const auto prefix = "fold" + std::to_string(fold.fold_id) + "_";
        const auto& a = *fold.artifacts;
        write_json(out / "models" / (prefix + "plan.json"), a.plan);
        write_json(out / "models" / (prefix + eval::kL1Logistic + ".json"), a.l1);
        write_json(out / "models" / (prefix + eval::kL2Logistic + ".json"), a.l2);
        write_json(out / "models" / (prefix + eval::kMlpFull + ".json"), a.mlp_full);
        write_json(out / "models" / (prefix + hybrid + ".json"), a.hybrid);
        write_json(out / "models" / (prefix + "selection.json"), *fold.selection);
    }
    write_json(out / "models" / "final_hybrid.json", result.final.model);
    write_json(out / "models" / "final_selection.json", result.final.selection);
}

void gen_synth(const synth::SynthSpec& spec, const std::filesystem::path& out_dir) {
    const auto data = synth::generate(spec);
    synth::write_layout(data, spec, out_dir);
}

}  // namespace hdlss::pipeline

// hdlss: run the cross-validated pipelines or generate synthetic data.
//
//   hdlss run --config run.json --out results
//   hdlss gen-synth --n 1000 --p 800 --out data
//   hdlss default-config --pipeline prototype

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hdlss/error.hpp"
#include "hdlss/pipeline.hpp"
#include "hdlss/serialize.hpp"

namespace {

int exit_code(hdlss::ErrorCategory category) {
    switch (category) {
        case hdlss::ErrorCategory::Config: return 2;
        case hdlss::ErrorCategory::Data: return 3;
        case hdlss::ErrorCategory::Train: return 4;
        case hdlss::ErrorCategory::Io: return 5;
    }
    return 1;
}

template <typename T>
void set_optional(CLI::App* app, const char* flag, std::optional<T>& target, const char* help) {
    app->add_option_function<T>(flag, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HDLSS diabetes-prediction pipelines"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "cross-validate the four models, refit, and write reports");
    std::optional<std::string> config_path;
    hdlss::pipeline::Overrides overrides;
    run->add_option("--config", config_path, "JSON run configuration");
    set_optional(run, "--pipeline", overrides.pipeline, "refined or prototype");
    set_optional(run, "--data-dir", overrides.data_dir, "directory holding the component CSVs");
    set_optional(run, "--out", overrides.output_dir, "output directory");
    set_optional(run, "--seed", overrides.seed, "seed for folds, sampling and network init");
    set_optional(run, "--folds", overrides.folds, "number of CV folds");
    set_optional(run, "--k", overrides.k, "features kept by top-k selection");
    set_optional(run, "--select-method", overrides.select_method, "l1, elasticnet, mutual_info or prototype_l1_nonzero");

    auto* synth = app.add_subcommand("gen-synth", "write a synthetic dataset in the component CSV layout");
    hdlss::synth::SynthSpec spec;
    std::optional<std::string> synth_config;
    std::string synth_out = "synth";
    synth->add_option("--config", synth_config, "JSON SynthSpec (flags override it)");
    synth->add_option("--n", spec.n_samples, "samples");
    synth->add_option("--p", spec.n_features, "features");
    synth->add_option("--informative", spec.n_informative, "informative features");
    synth->add_option("--scale", spec.coefficient_scale, "coefficient magnitude");
    synth->add_option("--noise", spec.noise_std, "logit noise std");
    synth->add_option("--missing", spec.missing_fraction, "missing cell fraction");
    synth->add_option("--categorical", spec.categorical_fraction, "fraction of tercile categoricals");
    synth->add_option("--positive-rate", spec.positive_rate_target, "target positive rate");
    synth->add_option("--seed", spec.seed, "generator seed");
    synth->add_option("--out", synth_out, "output directory");

    auto* defaults = app.add_subcommand("default-config", "print the default configuration as JSON");
    std::string default_pipeline = "refined";
    defaults->add_option("--pipeline", default_pipeline, "refined or prototype");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::optional<std::filesystem::path> path;
            if (config_path) path = *config_path;
            const auto config = hdlss::pipeline::load_config(path, overrides);
            const auto result = hdlss::pipeline::run(config);
            for (const auto& model : config.cv.model_names()) {
                const auto& m = result.report.mean_metrics.at(model);
                std::printf("%-18s acc %.4f  prec %.4f  rec %.4f  f1 %.4f  auc %.4f\n", model.c_str(), m.accuracy,
                            m.precision, m.recall, m.f1, m.auc);
            }
            std::printf("reports written to %s\n", config.output_dir.string().c_str());
        } else if (synth->parsed()) {
            if (synth_config) {
                std::ifstream in(*synth_config);
                if (!in) throw hdlss::Error(hdlss::ErrorKind::ConfigError, "cli", "cannot open " + *synth_config);
                hdlss::synth::SynthSpec from_file;
                try {
                    hdlss::synth::from_json(nlohmann::json::parse(in), from_file);
                } catch (const nlohmann::json::exception& e) {
                    throw hdlss::Error(hdlss::ErrorKind::ConfigError, "cli", e.what());
                }
                // explicit flags win over the file
                auto keep = [&](const char* flag, auto& field, const auto& value) {
                    if (synth->count(flag) == 0) field = value;
                };
                keep("--n", spec.n_samples, from_file.n_samples);
                keep("--p", spec.n_features, from_file.n_features);
                keep("--informative", spec.n_informative, from_file.n_informative);
                keep("--scale", spec.coefficient_scale, from_file.coefficient_scale);
                keep("--noise", spec.noise_std, from_file.noise_std);
                keep("--missing", spec.missing_fraction, from_file.missing_fraction);
                keep("--categorical", spec.categorical_fraction, from_file.categorical_fraction);
                keep("--positive-rate", spec.positive_rate_target, from_file.positive_rate_target);
                keep("--seed", spec.seed, from_file.seed);
            }
            hdlss::pipeline::gen_synth(spec, synth_out);
            std::printf("synthetic data written to %s\n", synth_out.c_str());
        } else if (defaults->parsed()) {
            hdlss::pipeline::Overrides o;
            o.pipeline = default_pipeline;
            std::cout << hdlss::pipeline::to_json(hdlss::pipeline::make_config(nlohmann::json::object(), o)).dump(2)
                      << "\n";
        }
    } catch (const hdlss::Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.module().c_str(), e.what());
        return exit_code(e.category());
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error [cli]: IoError: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error [cli]: %s\n", e.what());
        return 1;
    }
    return 0;
}

#include <doctest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "hdlss/error.hpp"
#include "hdlss/pipeline.hpp"
#include "hdlss/serialize.hpp"

using namespace hdlss;
using namespace hdlss::pipeline;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const std::filesystem::path& path) { return json::parse(slurp(path)); }

int cli(const std::string& args) {
    const std::string cmd = std::string(HDLSS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

synth::SynthSpec small_spec() {
    synth::SynthSpec spec;
    spec.n_samples = 150;
    spec.n_features = 60;
    spec.n_informative = 5;
    spec.coefficient_scale = 2.0;
    spec.missing_fraction = 0.05;
    spec.categorical_fraction = 0.1;
    spec.seed = 11;
    return spec;
}

json small_document(const std::filesystem::path& data, const std::filesystem::path& out) {
    return {{"data_dir", data.string()},
            {"output_dir", out.string()},
            {"seed", 5},
            {"selection", {{"k", 8}}},
            {"mlp_full", {{"hidden_sizes", {8}}, {"max_epochs", 8}, {"learning_rate", 0.01}}},
            {"mlp_hybrid", {{"hidden_sizes", {8, 4}}, {"max_epochs", 8}, {"learning_rate", 0.01}}},
            {"importance_repeats", 2}};
}

// CSV rows keyed by "model,fold" -> auc column
std::map<std::string, std::string> metric_aucs(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    std::istringstream in(slurp(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto second = line.find(',', line.find(',') + 1);
        out[line.substr(0, second)] = line.substr(line.rfind(',') + 1);
    }
    return out;
}

struct Fixture {
    std::filesystem::path data;
    Fixture() : data(fixtures::temp_dir("pipeline_data")) { gen_synth(small_spec(), data); }
    ~Fixture() { std::filesystem::remove_all(data); }
};

}  // namespace

TEST_CASE("make_config layers defaults, document and overrides") {
    json doc = {{"seed", 9}, {"n_folds", 4}, {"selection", {{"k", 12}, {"method", "mutual_info"}}}};
    Overrides o;
    o.k = 20;
    o.output_dir = "elsewhere";
    auto c = make_config(doc, o);
    CHECK(c.pipeline == eval::Pipeline::Refined);
    CHECK(c.cv.seed == 9);
    CHECK(c.cv.mlp_hybrid.seed == 9);
    CHECK(c.cv.n_folds == 4);
    CHECK(c.cv.selection.k == 20);
    CHECK(c.cv.selection.method == select::Method::MutualInfo);
    CHECK(c.output_dir == "elsewhere");
    CHECK(c.cv.mlp_hybrid.hidden_sizes == std::vector<int>{128, 64});

    auto p = make_config(json{{"pipeline", "prototype"}});
    CHECK(p.label.mode == ingest::LabelMode::Prototype);
    CHECK(p.cv.selection.method == select::Method::PrototypeL1Nonzero);
    CHECK(p.sample.keep_fraction == 0.4);

    // the serialized form reads back to the same config
    auto again = make_config(to_json(c));
    CHECK(to_json(again) == to_json(c));
}

TEST_CASE("bad configs fail before any data is read") {
    auto config_error = [](const json& doc) {
        try {
            make_config(doc);
        } catch (const Error& e) {
            return e.kind() == ErrorKind::ConfigError;
        }
        return false;
    };
    CHECK(config_error({{"data_dir", "/nonexistent/dir"}, {"n_folds", 1}}));
    CHECK(config_error({{"pipeline", "refined"}, {"selection", {{"method", "prototype_l1_nonzero"}}}}));
    CHECK(config_error({{"pipeline", "prototype"}, {"selection", {{"method", "l1"}}}}));
    CHECK(config_error({{"pipeline", "neither"}}));
    CHECK(config_error({{"selection", {{"k", 0}}}}));
    CHECK(config_error({{"mlp_full", {{"hidden_sizes", json::array()}}}}));
    CHECK(config_error({{"n_folds", "three"}}));
    CHECK(config_error(json::array()));
    CHECK_THROWS_AS(load_config(std::filesystem::path("/nonexistent/config.json")), Error);
}

TEST_CASE("refined end-to-end run writes every artifact") {
    Fixture fx;
    const auto out = fixtures::temp_dir("pipeline_out");
    const auto config = make_config(small_document(fx.data, out));
    const auto result = run(config);

    for (const char* f : {"run_report.json", "metrics.csv", "roc.svg", "selection_folds.csv", "importance.csv",
                          "plan.json", "roc_l1_logistic.csv", "roc_l2_logistic.csv", "roc_mlp_full.csv",
                          "roc_hybrid_topk.csv", "models/final_hybrid.json", "models/final_selection.json"}) {
        INFO(f);
        CHECK(std::filesystem::exists(out / f));
    }
    for (int fold = 1; fold <= 3; ++fold) {
        for (const char* m : {"plan", "l1_logistic", "l2_logistic", "mlp_full", "hybrid_topk", "selection"}) {
            const auto path = out / "models" / ("fold" + std::to_string(fold) + "_" + m + ".json");
            INFO(path.string());
            REQUIRE(std::filesystem::exists(path));
            CHECK_NOTHROW(read_json(path));
        }
    }
    const auto report = read_json(out / "run_report.json");
    CHECK(report.at("metadata").at("config").at("pipeline") == "refined");
    CHECK(report.at("metadata").at("final_selection").size() == 8);

    const auto aucs = metric_aucs(out / "metrics.csv");
    CHECK(aucs.size() == 4 * 4);
    CHECK(aucs.at("l1_logistic,mean") == format_g6(result.report.mean_metrics.at("l1_logistic").auc));
    CHECK(result.report.mean_metrics.at("l1_logistic").auc > 0.75);
    CHECK(slurp(out / "roc.svg").rfind("<svg", 0) == 0);

    // fold metrics recomputed from the persisted plan, models and test rows
    const auto table = load_dataset(config);
    const auto labeled = eval::prepare(table, config.label, config.key_column);
    for (const auto& fold : report.at("folds")) {
        const int id = fold.at("fold_id");
        const auto rows = fold.at("test_rows").get<std::vector<std::size_t>>();
        const auto prefix = out / "models" / ("fold" + std::to_string(id) + "_");
        const auto plan = read_json(prefix.string() + "plan.json").get<preprocess::PreprocessPlan>();
        auto test = preprocess::apply_plan(plan, labeled.features.select_rows(rows));
        std::vector<int> y;
        for (auto r : rows) y.push_back(labeled.labels[r]);

        const auto l1 = read_json(prefix.string() + "l1_logistic.json").get<linear::LinearModel>();
        const auto p1 = linear::predict_proba(l1, test.values);
        const double auc1 = eval::roc_auc(y, std::vector<double>(p1.data(), p1.data() + p1.size())).auc;
        CHECK(format_g6(auc1) == aucs.at("l1_logistic," + std::to_string(id)));

        const auto sel = read_json(prefix.string() + "selection.json").get<select::SelectionResult>();
        const auto hybrid = read_json(prefix.string() + "hybrid_topk.json").get<mlp::MlpModel>();
        const auto ph = mlp::forward(hybrid, test.select_columns(sel.selected_indices).values);
        const double auch = eval::roc_auc(y, std::vector<double>(ph.data(), ph.data() + ph.size())).auc;
        CHECK(format_g6(auch) == aucs.at("hybrid_topk," + std::to_string(id)));
    }

    // same config, same bytes
    const auto first = slurp(out / "run_report.json");
    const auto metrics = slurp(out / "metrics.csv");
    run(config);
    CHECK(slurp(out / "run_report.json") == first);
    CHECK(slurp(out / "metrics.csv") == metrics);
    std::filesystem::remove_all(out);
}

TEST_CASE("prototype run reports the prototype hybrid") {
    Fixture fx;
    const auto out = fixtures::temp_dir("pipeline_proto");
    auto doc = small_document(fx.data, out);
    doc["pipeline"] = "prototype";
    doc["selection"] = {{"fallback_k", 8}};
    doc["sample"] = {{"keep_fraction", 0.9}};
    const auto result = run(make_config(doc));
    CHECK(result.report.mean_metrics.count("hybrid_prototype") == 1);
    CHECK(result.report.mean_metrics.count("hybrid_topk") == 0);
    CHECK(std::filesystem::exists(out / "roc_hybrid_prototype.csv"));
    CHECK(result.report.labels.size() == 135);
    std::filesystem::remove_all(out);
}

TEST_CASE("missing data file is a data error naming the file") {
    Fixture fx;
    std::filesystem::remove(fx.data / "exam.csv");
    const auto out = fixtures::temp_dir("pipeline_missing");
    try {
        run(make_config(small_document(fx.data, out)));
        FAIL("expected FileNotFound");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileNotFound);
        CHECK(std::string(e.what()).find("exam.csv") != std::string::npos);
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("cli exit codes") {
    Fixture fx;
    const auto out = fixtures::temp_dir("pipeline_cli");
    const auto config = out / "config.json";
    std::ofstream(config) << small_document(fx.data, out / "run").dump();

    CHECK(cli("--help") == 0);
    CHECK(cli("default-config --pipeline prototype") == 0);
    CHECK(cli("run --config " + config.string() + " --folds 1") == 2);
    CHECK(cli("run --config /nonexistent.json") == 2);
    CHECK(cli("run --config " + config.string() + " --data-dir /nonexistent/data") == 3);
    CHECK(cli("gen-synth --n 0 --out " + (out / "bad").string()) == 2);
    CHECK(cli("gen-synth --n 80 --p 30 --informative 3 --seed 4 --out " + (out / "synth").string()) == 0);
    CHECK(std::filesystem::exists(out / "synth" / "ground_truth.json"));
    CHECK(cli("run --config " + config.string() + " --k 5") == 0);
    CHECK(read_json(out / "run" / "models" / "final_selection.json").at("selected_names").size() == 5);
    std::filesystem::remove_all(out);
}

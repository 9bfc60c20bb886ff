#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "hdlss/error.hpp"
#include "hdlss/eval.hpp"
#include "hdlss/synth.hpp"

using namespace hdlss;
using namespace hdlss::eval;

namespace {

double mann_whitney(const std::vector<int>& y, const std::vector<double>& s) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

ingest::LabeledTable synth_labeled(int n, int p, int informative, double scale, std::uint64_t seed) {
    synth::SynthSpec spec;
    spec.n_samples = n;
    spec.n_features = p;
    spec.n_informative = informative;
    spec.coefficient_scale = scale;
    spec.seed = seed;
    auto data = synth::generate(spec);
    ingest::LabeledTable out;
    const std::string key[] = {"SEQN"};
    out.features = data.table.without_columns(key);
    out.labels = data.labels;
    for (int i = 0; i < n; ++i) out.source_rows.push_back(std::size_t(i));
    return out;
}

CvConfig quick_config() {
    CvConfig c;
    c.selection.k = 10;
    for (auto* m : {&c.mlp_full, &c.mlp_hybrid}) {
        m->max_epochs = 40;
        m->hidden_sizes = {16, 8};
        m->learning_rate = 1e-2;
    }
    c.importance_repeats = 2;
    return c;
}

}  // namespace

TEST_CASE("confusion_metrics hand-counted fixture") {
    // tp=2 fp=1 fn=1 tn=6
    std::vector<int> y{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    std::vector<double> p{0.9, 0.6, 0.2, 0.7, 0.1, 0.1, 0.3, 0.4, 0.2, 0.0};
    auto m = confusion_metrics(y, p);
    CHECK(m.confusion.tp == 2);
    CHECK(m.confusion.fp == 1);
    CHECK(m.confusion.fn == 1);
    CHECK(m.confusion.tn == 6);
    CHECK(m.precision == doctest::Approx(2.0 / 3));
    CHECK(m.recall == doctest::Approx(2.0 / 3));
    CHECK(m.f1 == doctest::Approx(2.0 / 3));
    CHECK(m.accuracy == doctest::Approx(0.8));
}

TEST_CASE("confusion_metrics edge conventions") {
    std::vector<int> y{1, 0, 1, 0};
    std::vector<double> perfect{0.9, 0.1, 0.5, 0.49};
    auto m = confusion_metrics(y, perfect);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.auc == 1.0);
    std::vector<double> none{0.1, 0.1, 0.2, 0.3};
    auto z = confusion_metrics(y, none);
    CHECK(z.precision == 0.0);
    CHECK(z.recall == 0.0);
    CHECK(z.f1 == 0.0);
    std::vector<double> short_probs{0.1};
    CHECK_THROWS_AS(confusion_metrics(y, short_probs), Error);
}

TEST_CASE("roc_auc examples") {
    std::vector<int> y{0, 0, 1, 1};
    std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    CHECK(roc_auc(y, s).auc == doctest::Approx(0.75));
    std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
    CHECK(roc_auc(y, sep).auc == 1.0);
    std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    auto r = roc_auc(y, flat);
    CHECK(r.auc == 0.5);
    CHECK(r.curve.points.size() == 2);
    std::vector<int> single{1, 1};
    std::vector<double> two{0.1, 0.2};
    try {
        roc_auc(single, two);
        FAIL("expected SingleClass");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingleClass);
    }
}

TEST_CASE("roc_auc equals the pairwise oracle, is rank-only and its curve is well formed") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + int(rng.index(199));
        std::vector<int> y(n);
        std::vector<double> s(n), t(n);
        for (int i = 0; i < n; ++i) {
            y[i] = rng.bernoulli(0.4);
            s[i] = trial % 2 ? double(rng.index(5)) / 4.0 : rng.uniform();
            t[i] = std::exp(3 * s[i]) - 7;  // strictly increasing transform
        }
        y[0] = 1;
        y[1] = 0;
        auto r = roc_auc(y, s);
        CHECK(std::abs(r.auc - mann_whitney(y, s)) <= 1e-12);
        CHECK(std::abs(roc_auc(y, t).auc - r.auc) <= 1e-12);
        CHECK(std::abs(trapezoid_area(r.curve) - r.auc) <= 1e-12);
        const auto& pts = r.curve.points;
        CHECK(pts.front().fpr == 0.0);
        CHECK(pts.front().tpr == 0.0);
        CHECK(pts.back().fpr == 1.0);
        CHECK(pts.back().tpr == 1.0);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(pts[i].fpr >= pts[i - 1].fpr);
            CHECK(pts[i].tpr >= pts[i - 1].tpr);
            CHECK(pts[i].threshold < pts[i - 1].threshold);
        }
    }
}

TEST_CASE("stratified_folds") {
    std::vector<int> y{1, 0, 0, 1, 0, 0, 1, 0, 0};
    auto folds = stratified_folds(y, 3, 5);
    REQUIRE(folds.size() == 3);
    std::multiset<std::size_t> all;
    for (const auto& f : folds) {
        int pos = 0;
        for (auto i : f.test) pos += y[i];
        CHECK(pos == 1);
        all.insert(f.test.begin(), f.test.end());
        CHECK(f.train.size() + f.test.size() == y.size());
        std::set<std::size_t> train(f.train.begin(), f.train.end());
        for (auto i : f.test) CHECK(train.count(i) == 0);
    }
    CHECK(all.size() == 9);
    CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 9);

    auto again = stratified_folds(y, 3, 5);
    for (std::size_t f = 0; f < 3; ++f) CHECK(again[f].test == folds[f].test);

    std::vector<int> few{1, 1, 0, 0, 0};
    try {
        stratified_folds(few, 3, 1);
        FAIL("expected ClassTooSmall");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ClassTooSmall);
    }
}

TEST_CASE("stratified_folds balance positives within one") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 20 + int(rng.index(100));
        const int k = 2 + int(rng.index(4));
        std::vector<int> y(n);
        for (auto& v : y) v = rng.bernoulli(0.3);
        for (int i = 0; i < k; ++i) y[i] = 1, y[k + i] = 0;
        auto folds = stratified_folds(y, k, trial);
        int lo = n, hi = 0;
        for (const auto& f : folds) {
            int pos = 0;
            for (auto i : f.test) pos += y[i];
            lo = std::min(lo, pos);
            hi = std::max(hi, pos);
        }
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("permutation importance") {
    auto d = fixtures::y_copy_design(60, 5, 2, 3);
    // linear predictor that ignores feature 4
    Eigen::VectorXd w(5);
    w << 0.3, -0.2, 2.0, 0.1, 0.0;
    Predictor model = [&](const Eigen::MatrixXd& x) {
        Eigen::VectorXd z = x * w;
        return Eigen::VectorXd(z.unaryExpr([](double v) { return 1 / (1 + std::exp(-v)); }));
    };
    auto imp = permutation_importance(model, d.values, d.labels, d.feature_names, 5, 9);
    REQUIRE(imp.size() == 5);
    CHECK(imp.front().feature_name == "x2");
    for (const auto& e : imp) {
        if (e.feature_index == 4) {
            CHECK(e.mean == 0.0);
            CHECK(e.std == 0.0);
        }
    }
    for (std::size_t i = 1; i < imp.size(); ++i) CHECK(imp[i].mean <= imp[i - 1].mean);
}

TEST_CASE("run_cv refined on separable synthetic data") {
    auto data = synth_labeled(240, 40, 4, 6.0, 5);
    auto cfg = quick_config();
    auto report = run_cv(data, cfg);
    REQUIRE(report.folds.size() == 3);
    for (const auto& f : report.folds) {
        REQUIRE(f.selection);
        CHECK(f.selection->selected_indices.size() == 10);
        for (const auto& name : cfg.model_names()) {
            REQUIRE(f.per_model.count(name));
            INFO(name);
            // small heads, 40 epochs; the full-width one overfits 160 rows quickly
            const double floor = name == kMlpFull ? 0.6 : (name == kHybridTopK ? 0.85 : 0.95);
            CHECK(f.per_model.at(name).auc > floor);
        }
    }
    // arithmetic means over folds, inside the per-fold range
    for (const auto& name : cfg.model_names()) {
        double sum = 0, lo = 1, hi = 0;
        for (const auto& f : report.folds) {
            const double a = f.per_model.at(name).auc;
            sum += a;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        const double mean = report.mean_metrics.at(name).auc;
        CHECK(mean == doctest::Approx(sum / 3).epsilon(1e-14));
        CHECK(mean >= lo);
        CHECK(mean <= hi);
    }
    CHECK(report.mean_metrics.at(kHybridTopK).auc >= report.mean_metrics.at(kMlpFull).auc);
    CHECK(report.selection_stability.size() == 3);
    CHECK(report.metadata.at("seed") == 42);
}

TEST_CASE("run_cv selection ignores test-fold labels") {
    auto data = synth_labeled(150, 30, 3, 2.0, 8);
    auto cfg = quick_config();
    cfg.mlp_full.max_epochs = 2;
    cfg.mlp_hybrid.max_epochs = 2;
    const auto folds = stratified_folds(data.labels, cfg.n_folds, cfg.seed);
    auto base = run_cv(data, cfg, folds);
    auto tampered = data;
    Rng rng(3);
    for (auto i : folds[0].test) tampered.labels[i] = rng.bernoulli(0.5);
    auto after = run_cv(tampered, cfg, folds);
    CHECK(after.folds[0].selection->selected_names == base.folds[0].selection->selected_names);
    CHECK(after.folds[0].selection->scores == base.folds[0].selection->scores);
}

TEST_CASE("parallel folds reproduce the serial report") {
    auto data = synth_labeled(150, 25, 3, 2.0, 4);
    auto cfg = quick_config();
    auto serial = run_cv(data, cfg);
    cfg.parallel_folds = true;
    auto parallel = run_cv(data, cfg);
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(serial.folds[f].test_probs == parallel.folds[f].test_probs);
        CHECK(serial.folds[f].selection->selected_names == parallel.folds[f].selection->selected_names);
    }
}

TEST_CASE("prototype run_cv uses the non-zero L1 set") {
    auto data = synth_labeled(200, 40, 4, 2.0, 6);
    auto cfg = quick_config();
    cfg.pipeline = Pipeline::Prototype;
    cfg.selection.method = select::Method::PrototypeL1Nonzero;
    cfg.selection.inner_penalty = cfg.l1;
    auto report = run_cv(data, cfg);
    for (const auto& f : report.folds) {
        CHECK(f.per_model.count(kHybridPrototype));
        CHECK(f.selection->method == "prototype_l1_nonzero");
        CHECK(f.selection->selected_indices.size() ==
              std::size_t((f.artifacts->l1.weights.array() != 0.0).count()));
    }
}

TEST_CASE("run_cv failure names the fold") {
    auto data = synth_labeled(60, 10, 2, 1.0, 2);
    auto cfg = quick_config();
    cfg.selection.k = 500;
    try {
        run_cv(data, cfg);
        FAIL("expected KTooLarge");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::KTooLarge);
        CHECK(std::string(e.what()).find("fold 1") != std::string::npos);
    }
}

TEST_CASE("config validation") {
    CvConfig c;
    c.n_folds = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = CvConfig{};
    c.selection.method = select::Method::PrototypeL1Nonzero;
    CHECK_THROWS_AS(c.validate(), Error);
    c.pipeline = Pipeline::Prototype;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("final_refit") {
    auto data = synth_labeled(150, 30, 3, 3.0, 3);
    auto cfg = quick_config();
    auto fin = final_refit(data, cfg);
    CHECK(fin.selection.selected_indices.size() == 10);
    CHECK(fin.importance.size() == 10);
    std::set<std::string> sel(fin.selection.selected_names.begin(), fin.selection.selected_names.end());
    for (const auto& imp : fin.importance) CHECK(sel.count(imp.feature_name));
    CHECK(fin.model.input_size() == 10);
}

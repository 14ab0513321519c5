#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maslda/classification.hpp"
#include "maslda/corpus.hpp"
#include "maslda/model_io.hpp"
#include "maslda/regression.hpp"
#include "maslda/simulate.hpp"

using namespace maslda;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "maslda_cli_test";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MASLDA_CLI_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct Fixture {
    fs::path dir = work_dir();
    fs::path docs, vocab, class_ann, real_ann, truth;

    Fixture() {
        SyntheticConfig config;
        config.num_topics = 2;
        config.vocab_size = 12;
        config.num_docs = 20;
        config.doc_length = 10;
        config.seed = 404;
        Mat gen_eta(2, 2);
        gen_eta << 2.0, -2.0, -2.0, 2.0;
        const ClassSynthetic data = generate_synthetic_classification(config, gen_eta);
        docs = dir / "docs.txt";
        vocab = dir / "vocab.txt";
        serialize_corpus(data.corpus, docs.string(), vocab.string());

        std::vector<ClassLabel> records;
        for (int d = 0; d < 20; ++d) records.push_back({d, 0, data.labels[d]});
        class_ann = dir / "class_ann.csv";
        serialize_class_annotations(make_class_annotations(records, 2, 20), class_ann.string());

        std::vector<RealAnswer> answers;
        for (int d = 0; d < 20; ++d) answers.push_back({d, 0, 0.5 * data.labels[d] + 0.1 * d});
        real_ann = dir / "real_ann.csv";
        serialize_real_annotations(make_real_annotations(answers, 20), real_ann.string());

        truth = dir / "truth.csv";
        std::ofstream t(truth);
        for (int d = 0; d < 20; ++d) t << d << ',' << data.labels[d] << '\n';
    }
};

}  // namespace

TEST_CASE("classification model JSON round-trips every field exactly") {
    SyntheticConfig config;
    config.num_topics = 3;
    config.vocab_size = 10;
    config.num_docs = 12;
    config.doc_length = 8;
    config.seed = 21;
    Mat gen_eta(2, 3);
    gen_eta << 1.0, -0.5, 0.0, -1.0, 0.5, 0.0;
    const ClassSynthetic data = generate_synthetic_classification(config, gen_eta);
    ConfusionAnnotatorSet set;
    set.confusion.assign(2, confusion_from_accuracy(0.7, 2));
    set.seed = 21;
    const ClassAnnotations ann = simulate_confusion_annotators(data.labels, 2, set);
    ClassFitOptions opts;
    opts.max_iter = 3;
    const ClassFitResult fit = fit_batch(data.corpus, ann, 3, {0.3, 0.7, 1.3}, opts);

    const auto path = (work_dir() / "class_model.json").string();
    save_model(fit.model, path);
    CHECK(model_kind(path) == "maslda-classify");
    const ClassificationModel loaded = load_classification_model(path);
    CHECK(loaded.num_topics == fit.model.num_topics);
    CHECK(loaded.num_classes == fit.model.num_classes);
    CHECK(loaded.vocab_size == fit.model.vocab_size);
    CHECK(loaded.num_annotators == fit.model.num_annotators);
    CHECK(loaded.hyper.alpha == fit.model.hyper.alpha);
    CHECK(loaded.hyper.tau == fit.model.hyper.tau);
    CHECK(loaded.hyper.omega == fit.model.hyper.omega);
    CHECK(loaded.annotator_ids == fit.model.annotator_ids);
    CHECK(loaded.eta == fit.model.eta);
    CHECK(loaded.zeta == fit.model.zeta);
    for (int r = 0; r < loaded.num_annotators; ++r) CHECK(loaded.xi[r] == fit.model.xi[r]);

    CHECK_THROWS(load_regression_model(path));
}

TEST_CASE("regression model JSON round-trips every field exactly") {
    SyntheticConfig config;
    config.num_topics = 2;
    config.vocab_size = 8;
    config.num_docs = 10;
    config.doc_length = 8;
    config.seed = 22;
    Vec gen_eta(2);
    gen_eta << 1.0, -1.0;
    const RegSynthetic data = generate_synthetic_regression(config, gen_eta, 0.1);
    GaussianAnnotatorSet set;
    set.annotators = {{0.3, 2.0}, {0.0, 6.0}};
    set.seed = 22;
    const RealAnnotations ann = simulate_gaussian_annotators(data.targets, set);
    RegFitOptions opts;
    opts.max_iter = 3;
    const RegFitResult fit = fit_batch_r(data.corpus, ann, 2, {0.5, 0.5, 1.0}, 0.8, opts);

    const auto path = (work_dir() / "reg_model.json").string();
    save_model(fit.model, path);
    CHECK(model_kind(path) == "maslda-regress");
    const RegressionModel loaded = load_regression_model(path);
    CHECK(loaded.eta == fit.model.eta);
    CHECK(loaded.bias == fit.model.bias);
    CHECK(loaded.precision == fit.model.precision);
    CHECK(loaded.zeta == fit.model.zeta);
    CHECK(loaded.sigma2 == fit.model.sigma2);
}

TEST_CASE("cli usage errors exit with code 2") {
    CHECK(run_cli("fit --task classify --topics 2") == 2);                 // missing paths
    CHECK(run_cli("fit --task juggle --topics 2 --corpus a --vocab b --annotations c --out d") ==
          2);
    CHECK(run_cli("nonsense") == 2);
}

TEST_CASE("cli fit/predict/evaluate round trip with deterministic outputs") {
    const Fixture fx;
    const auto model = fx.dir / "model.json";
    const auto trace = fx.dir / "trace.csv";
    const std::string fit_args = "fit --task classify --mode batch --topics 2 --alpha 0.5"
                                 " --max-iter 4 --seed 33 --corpus " + fx.docs.string() +
                                 " --vocab " + fx.vocab.string() +
                                 " --annotations " + fx.class_ann.string() +
                                 " --out " + model.string() + " --trace " + trace.string();
    REQUIRE(run_cli(fit_args) == 0);
    REQUIRE(fs::exists(model));
    REQUIRE(fs::exists(trace));
    const ClassificationModel reloaded = load_classification_model(model.string());
    CHECK(reloaded.num_topics == 2);

    // identical seed, byte-identical artifacts
    const auto model2 = fx.dir / "model2.json";
    const std::string fit2 = "fit --task classify --mode batch --topics 2 --alpha 0.5"
                             " --max-iter 4 --seed 33 --corpus " + fx.docs.string() +
                             " --vocab " + fx.vocab.string() +
                             " --annotations " + fx.class_ann.string() +
                             " --out " + model2.string();
    REQUIRE(run_cli(fit2) == 0);
    CHECK(slurp(model) == slurp(model2));

    const auto preds = fx.dir / "preds.csv";
    REQUIRE(run_cli("predict --model " + model.string() + " --corpus " + fx.docs.string() +
                    " --vocab " + fx.vocab.string() + " --out " + preds.string()) == 0);
    std::ifstream pf(preds);
    std::string line;
    int rows = 0;
    while (std::getline(pf, line)) {
        if (line.empty()) continue;
        const int label = std::stoi(line.substr(line.find(',') + 1));
        CHECK(label >= 0);
        CHECK(label < 2);
        ++rows;
    }
    CHECK(rows == 20);

    const auto metrics = fx.dir / "metrics.csv";
    fs::remove(metrics);
    REQUIRE(run_cli("evaluate --preds " + preds.string() + " --truth " + fx.truth.string() +
                    " --metric accuracy --out " + metrics.string()) == 0);
    std::ifstream mf(metrics);
    std::getline(mf, line);
    CHECK(line == "run,seed,K,metric,value");
    REQUIRE(std::getline(mf, line));
    CHECK(line.find("accuracy") != std::string::npos);
}

TEST_CASE("cli svi fit and regression fit succeed end to end") {
    const Fixture fx;
    const auto model = fx.dir / "svi_model.json";
    REQUIRE(run_cli("fit --task classify --mode svi --topics 2 --batch-size 8 --max-iter 2"
                    " --seed 5 --corpus " + fx.docs.string() + " --vocab " + fx.vocab.string() +
                    " --annotations " + fx.class_ann.string() + " --out " + model.string()) == 0);
    CHECK(model_kind(model.string()) == "maslda-classify");

    const auto reg_model = fx.dir / "reg_model_cli.json";
    const auto reg_preds = fx.dir / "reg_preds.csv";
    REQUIRE(run_cli("fit --task regress --topics 2 --max-iter 3 --seed 5 --corpus " +
                    fx.docs.string() + " --vocab " + fx.vocab.string() + " --annotations " +
                    fx.real_ann.string() + " --out " + reg_model.string()) == 0);
    REQUIRE(run_cli("predict --model " + reg_model.string() + " --corpus " + fx.docs.string() +
                    " --vocab " + fx.vocab.string() + " --out " + reg_preds.string()) == 0);
    REQUIRE(run_cli("evaluate --preds " + reg_preds.string() + " --truth " + fx.truth.string() +
                    " --metric r2 --out " + (fx.dir / "reg_metrics.csv").string()) == 0);
}

TEST_CASE("cli predict rejects a vocabulary-size mismatch with exit 1") {
    const Fixture fx;
    const auto model = fx.dir / "mismatch_model.json";
    REQUIRE(run_cli("fit --task classify --topics 2 --max-iter 2 --seed 1 --corpus " +
                    fx.docs.string() + " --vocab " + fx.vocab.string() + " --annotations " +
                    fx.class_ann.string() + " --out " + model.string()) == 0);

    // corpus over a smaller vocabulary
    const auto small_docs = fx.dir / "small_docs.txt";
    const auto small_vocab = fx.dir / "small_vocab.txt";
    {
        std::ofstream d(small_docs);
        d << "1 0:2\n";
        std::ofstream v(small_vocab);
        v << "only\n";
    }
    CHECK(run_cli("predict --model " + model.string() + " --corpus " + small_docs.string() +
                  " --vocab " + small_vocab.string() + " --out " +
                  (fx.dir / "bad_preds.csv").string()) == 1);
}

TEST_CASE("cli simulate produces annotations consistent with the profile") {
    const Fixture fx;
    const auto profile = fx.dir / "profile.json";
    {
        std::ofstream p(profile);
        p << R"({"type": "gaussian", "annotators": [
              {"bias": 0.1, "precision": 10}, {"bias": -0.3, "precision": 3},
              {"bias": -2.5, "precision": 10}, {"bias": 0.1, "precision": 0.5},
              {"bias": 1.0, "precision": 0.25}]})";
    }
    const auto out = fx.dir / "sim_ann.csv";
    REQUIRE(run_cli("simulate --profile " + profile.string() + " --truth " + fx.truth.string() +
                    " --seed 3 --out " + out.string()) == 0);
    const RealAnnotations ann = parse_real_annotations(out.string(), 20);
    CHECK(ann.num_annotators == 5);
    CHECK(ann.records.size() == 100);

    // identity confusion profile reproduces the truth for every record
    const auto id_profile = fx.dir / "identity.json";
    {
        std::ofstream p(id_profile);
        p << R"({"type": "confusion", "classes": 2,
                 "annotators": [{"accuracy": 1.0}]})";
    }
    const auto id_out = fx.dir / "id_ann.csv";
    REQUIRE(run_cli("simulate --profile " + id_profile.string() + " --truth " + fx.truth.string() +
                    " --seed 3 --out " + id_out.string()) == 0);
    const ClassAnnotations id_ann = parse_class_annotations(id_out.string(), 2, 20);
    std::ifstream tf(fx.truth);
    std::string line;
    std::vector<int> truth;
    while (std::getline(tf, line)) truth.push_back(std::stoi(line.substr(line.find(',') + 1)));
    for (const auto& rec : id_ann.records) CHECK(rec.label == truth[rec.doc]);

    // malformed profile JSON is a usage error
    const auto bad = fx.dir / "bad.json";
    {
        std::ofstream p(bad);
        p << "{ not json";
    }
    CHECK(run_cli("simulate --profile " + bad.string() + " --truth " + fx.truth.string() +
                  " --out " + out.string()) == 2);
}

TEST_CASE("cli evaluate rejects a prediction/truth length mismatch with exit 1") {
    const Fixture fx;
    const auto preds = fx.dir / "short_preds.csv";
    {
        std::ofstream p(preds);
        p << "0,1\n1,0\n";
    }
    CHECK(run_cli("evaluate --preds " + preds.string() + " --truth " + fx.truth.string() +
                  " --metric accuracy --out " + (fx.dir / "m.csv").string()) == 1);
}

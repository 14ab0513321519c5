#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maslda/classification.hpp"
#include "maslda/corpus.hpp"
#include "maslda/evaluate.hpp"
#include "maslda/model_io.hpp"
#include "maslda/regression.hpp"
#include "maslda/simulate.hpp"

namespace {

using namespace maslda;
using nlohmann::json;

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_trace(const std::vector<double>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "iteration,elbo\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << (i + 1) << ',' << format_double(trace[i]) << '\n';
    }
}

// Headerless "doc_id,value" rows covering exactly 0..n-1.
std::vector<double> read_truth_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::pair<int, double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream fields(line);
        std::string token;
        if (!std::getline(fields, token, ',')) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        const int doc = std::stoi(token);
        if (!std::getline(fields, token, ',')) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        rows.emplace_back(doc, std::stod(token));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no rows");
    std::vector<double> values(rows.size());
    std::vector<char> seen(rows.size(), 0);
    for (const auto& [doc, value] : rows) {
        if (doc < 0 || doc >= static_cast<int>(rows.size()) || seen[doc]) {
            throw std::runtime_error(path + ": doc ids must cover 0.." +
                                     std::to_string(rows.size() - 1) + " exactly once");
        }
        seen[doc] = 1;
        values[doc] = value;
    }
    return values;
}

std::vector<double> read_prediction_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream fields(line);
        std::string doc_id, value;
        std::getline(fields, doc_id, ',');
        if (!std::getline(fields, value, ',')) {
            throw std::runtime_error(path + ": malformed prediction row");
        }
        values.push_back(std::stod(value));
    }
    if (values.empty()) throw std::runtime_error(path + ": no predictions");
    return values;
}

struct FitArgs {
    std::string task;
    std::string mode = "batch";
    int topics = 10;
    int classes = 0;  // 0 = infer from the annotation file
    double alpha = 1.0, tau = 1.0, omega = 1.0, sigma2 = 1.0;
    int batch_size = 500;
    double kappa = 0.6, delay = 1.0;
    int max_iter = 50;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string corpus_path, vocab_path, annotations_path, out_path, trace_path;
};

int run_fit(const FitArgs& args) {
    const Corpus corpus = parse_corpus(args.corpus_path, args.vocab_path);
    Hyperparameters hyper{args.alpha, args.tau, args.omega};

    if (args.task == "classify") {
        int num_classes = args.classes;
        if (num_classes == 0) {
            // infer C from the labels present
            std::ifstream in(args.annotations_path);
            if (!in) throw std::runtime_error("cannot open file: " + args.annotations_path);
            std::string line;
            int max_label = 0;
            while (std::getline(in, line)) {
                const auto last = line.rfind(',');
                if (last != std::string::npos) {
                    max_label = std::max(max_label, std::stoi(line.substr(last + 1)));
                }
            }
            num_classes = std::max(2, max_label + 1);
        }
        const ClassAnnotations ann =
            parse_class_annotations(args.annotations_path, num_classes, corpus.num_docs());
        ClassFitOptions opts;
        opts.max_iter = args.max_iter;
        opts.tol = args.tol;
        opts.seed = args.seed;
        opts.threads = args.threads;
        ClassFitResult result;
        if (args.mode == "batch") {
            result = fit_batch(corpus, ann, args.topics, hyper, opts);
        } else {
            SviConfig svi;
            svi.kappa = args.kappa;
            svi.delay = args.delay;
            svi.batch_size = std::min(args.batch_size, corpus.num_docs());
            svi.max_epochs = args.max_iter;
            svi.seed = args.seed;
            result = fit_svi(corpus, ann, args.topics, hyper, svi, opts);
        }
        save_model(result.model, args.out_path);
        if (!args.trace_path.empty()) write_trace(result.elbo_trace, args.trace_path);
    } else {
        const RealAnnotations ann = parse_real_annotations(args.annotations_path, corpus.num_docs());
        RegFitOptions opts;
        opts.max_iter = args.max_iter;
        opts.tol = args.tol;
        opts.seed = args.seed;
        opts.threads = args.threads;
        RegFitResult result;
        if (args.mode == "batch") {
            result = fit_batch_r(corpus, ann, args.topics, hyper, args.sigma2, opts);
        } else {
            SviConfig svi;
            svi.kappa = args.kappa;
            svi.delay = args.delay;
            svi.batch_size = std::min(args.batch_size, corpus.num_docs());
            svi.max_epochs = args.max_iter;
            svi.seed = args.seed;
            result = fit_svi_r(corpus, ann, args.topics, hyper, args.sigma2, svi, opts);
        }
        save_model(result.model, args.out_path);
        if (!args.trace_path.empty()) write_trace(result.elbo_trace, args.trace_path);
    }
    return 0;
}

struct PredictArgs {
    std::string model_path, corpus_path, vocab_path, out_path;
};

int run_predict(const PredictArgs& args) {
    const Corpus corpus = parse_corpus(args.corpus_path, args.vocab_path);
    const std::string kind = model_kind(args.model_path);
    std::ofstream out(args.out_path);
    if (!out) throw std::runtime_error("cannot write file: " + args.out_path);

    if (kind == "maslda-classify") {
        const ClassificationModel model = load_classification_model(args.model_path);
        if (model.vocab_size != corpus.vocab_size()) {
            throw std::runtime_error("vocabulary size mismatch: model has " +
                                     std::to_string(model.vocab_size) + ", corpus has " +
                                     std::to_string(corpus.vocab_size()));
        }
        for (int d = 0; d < corpus.num_docs(); ++d) {
            const ClassPrediction pred = predict_class(corpus.documents[d], model);
            out << d << ',' << pred.label;
            for (Eigen::Index c = 0; c < pred.scores.size(); ++c) {
                out << ',' << format_double(pred.scores[c]);
            }
            out << '\n';
        }
    } else {
        const RegressionModel model = load_regression_model(args.model_path);
        if (model.vocab_size != corpus.vocab_size()) {
            throw std::runtime_error("vocabulary size mismatch: model has " +
                                     std::to_string(model.vocab_size) + ", corpus has " +
                                     std::to_string(corpus.vocab_size()));
        }
        for (int d = 0; d < corpus.num_docs(); ++d) {
            out << d << ',' << format_double(predict_target(corpus.documents[d], model)) << '\n';
        }
    }
    return 0;
}

AssignmentPolicy parse_policy(const std::string& name) {
    if (name == "all") return AssignmentPolicy::kAllDocs;
    if (name == "partition") return AssignmentPolicy::kPartitionRoundRobin;
    if (name == "per_doc") return AssignmentPolicy::kPerDocCount;
    throw std::runtime_error("unknown assignment policy: " + name);
}

struct SimulateArgs {
    std::string profile_path, truth_path, out_path;
    std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& args) {
    std::ifstream in(args.profile_path);
    if (!in) throw std::runtime_error("cannot open file: " + args.profile_path);
    json profile;
    try {
        in >> profile;
    } catch (const json::parse_error& e) {
        // malformed profile is a usage error
        std::cerr << "invalid profile JSON: " << e.what() << "\n";
        return 2;
    }

    const std::string type = profile.at("type").get<std::string>();
    const std::vector<double> truth = read_truth_values(args.truth_path);

    if (type == "confusion") {
        const int num_classes = profile.at("classes").get<int>();
        ConfusionAnnotatorSet set;
        set.seed = args.seed;
        set.assignment = parse_policy(profile.value("assignment", "all"));
        set.labels_per_doc = profile.value("labels_per_doc", 1);
        for (const auto& entry : profile.at("annotators")) {
            if (entry.contains("accuracy")) {
                set.confusion.push_back(
                    confusion_from_accuracy(entry.at("accuracy").get<double>(), num_classes));
            } else {
                const auto rows = entry.at("confusion").get<std::vector<std::vector<double>>>();
                Mat conf(num_classes, num_classes);
                if (static_cast<int>(rows.size()) != num_classes) {
                    throw std::runtime_error("confusion matrix must have C rows");
                }
                for (int c = 0; c < num_classes; ++c) {
                    if (static_cast<int>(rows[c].size()) != num_classes) {
                        throw std::runtime_error("confusion matrix must have C columns");
                    }
                    for (int l = 0; l < num_classes; ++l) conf(c, l) = rows[c][l];
                }
                set.confusion.push_back(std::move(conf));
            }
        }
        std::vector<int> labels(truth.size());
        for (std::size_t d = 0; d < truth.size(); ++d) labels[d] = static_cast<int>(truth[d]);
        const ClassAnnotations ann = simulate_confusion_annotators(labels, num_classes, set);
        serialize_class_annotations(ann, args.out_path);
    } else if (type == "gaussian") {
        GaussianAnnotatorSet set;
        set.seed = args.seed;
        set.assignment = parse_policy(profile.value("assignment", "all"));
        set.labels_per_doc = profile.value("labels_per_doc", 1);
        for (const auto& entry : profile.at("annotators")) {
            set.annotators.push_back(
                {entry.at("bias").get<double>(), entry.at("precision").get<double>()});
        }
        const RealAnnotations ann = simulate_gaussian_annotators(truth, set);
        serialize_real_annotations(ann, args.out_path);
    } else {
        std::cerr << "unknown profile type: " << type << "\n";
        return 2;
    }
    return 0;
}

struct EvaluateArgs {
    std::string preds_path, truth_path, metric, out_path;
    std::string run = "eval";
    std::uint64_t seed = 0;
    int topics = 0;
};

int run_evaluate(const EvaluateArgs& args) {
    const std::vector<double> truth = read_truth_values(args.truth_path);
    const std::vector<double> preds = read_prediction_values(args.preds_path);
    if (preds.size() != truth.size()) {
        throw std::runtime_error("prediction count " + std::to_string(preds.size()) +
                                 " does not match truth count " + std::to_string(truth.size()));
    }
    double value = 0.0;
    if (args.metric == "accuracy") {
        std::vector<int> p(preds.size()), t(truth.size());
        for (std::size_t i = 0; i < preds.size(); ++i) {
            p[i] = static_cast<int>(preds[i]);
            t[i] = static_cast<int>(truth[i]);
        }
        value = accuracy(p, t);
    } else {
        value = r_squared(preds, truth);
    }
    emit_report({{args.run, args.seed, args.topics, args.metric, value}}, args.out_path);
    std::cout << args.metric << " = " << format_double(value) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-annotator supervised topic models (classification and regression)"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "Fit a model with batch EM or SVI");
    fit->add_option("--task", fit_args.task, "classify or regress")
        ->required()
        ->check(CLI::IsMember({"classify", "regress"}));
    fit->add_option("--mode", fit_args.mode, "batch or svi")
        ->check(CLI::IsMember({"batch", "svi"}));
    fit->add_option("--topics", fit_args.topics, "number of topics K")->required();
    fit->add_option("--classes", fit_args.classes, "number of classes (default: infer)");
    fit->add_option("--alpha", fit_args.alpha);
    fit->add_option("--tau", fit_args.tau);
    fit->add_option("--omega", fit_args.omega);
    fit->add_option("--sigma2", fit_args.sigma2);
    fit->add_option("--batch-size", fit_args.batch_size);
    fit->add_option("--kappa", fit_args.kappa);
    fit->add_option("--delay", fit_args.delay);
    fit->add_option("--max-iter", fit_args.max_iter, "EM iterations (batch) or epochs (svi)");
    fit->add_option("--tol", fit_args.tol);
    fit->add_option("--seed", fit_args.seed);
    fit->add_option("--threads", fit_args.threads);
    fit->add_option("--corpus", fit_args.corpus_path)->required();
    fit->add_option("--vocab", fit_args.vocab_path)->required();
    fit->add_option("--annotations", fit_args.annotations_path)->required();
    fit->add_option("--out", fit_args.out_path)->required();
    fit->add_option("--trace", fit_args.trace_path, "ELBO trace CSV");

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand("predict", "Predict labels or targets");
    predict->add_option("--model", predict_args.model_path)->required();
    predict->add_option("--corpus", predict_args.corpus_path)->required();
    predict->add_option("--vocab", predict_args.vocab_path)->required();
    predict->add_option("--out", predict_args.out_path)->required();

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Simulate annotator answers");
    simulate->add_option("--profile", sim_args.profile_path)->required();
    simulate->add_option("--truth", sim_args.truth_path)->required();
    simulate->add_option("--seed", sim_args.seed);
    simulate->add_option("--out", sim_args.out_path)->required();

    EvaluateArgs eval_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against truth");
    evaluate->add_option("--preds", eval_args.preds_path)->required();
    evaluate->add_option("--truth", eval_args.truth_path)->required();
    evaluate->add_option("--metric", eval_args.metric)
        ->required()
        ->check(CLI::IsMember({"accuracy", "r2"}));
    evaluate->add_option("--out", eval_args.out_path)->required();
    evaluate->add_option("--run", eval_args.run);
    evaluate->add_option("--seed", eval_args.seed);
    evaluate->add_option("--topics", eval_args.topics);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (fit->parsed()) return run_fit(fit_args);
        if (predict->parsed()) return run_predict(predict_args);
        if (simulate->parsed()) return run_simulate(sim_args);
        if (evaluate->parsed()) return run_evaluate(eval_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

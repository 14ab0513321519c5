#include "maslda/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "maslda/rng.hpp"

namespace maslda {

namespace {

// doc -> annotators assigned to label it, deterministic under the seed.
std::vector<std::vector<int>> assign_annotators(int num_docs, int num_annotators,
                                                AssignmentPolicy policy, int labels_per_doc,
                                                std::uint64_t seed) {
    std::vector<std::vector<int>> assigned(num_docs);
    switch (policy) {
        case AssignmentPolicy::kAllDocs: {
            for (int d = 0; d < num_docs; ++d) {
                assigned[d].resize(num_annotators);
                std::iota(assigned[d].begin(), assigned[d].end(), 0);
            }
            break;
        }
        case AssignmentPolicy::kPartitionRoundRobin: {
            std::vector<int> order(num_docs);
            std::iota(order.begin(), order.end(), 0);
            auto rng = make_stream(seed, "assignment");
            std::shuffle(order.begin(), order.end(), rng);
            for (int i = 0; i < num_docs; ++i) {
                assigned[order[i]].push_back(i % num_annotators);
            }
            break;
        }
        case AssignmentPolicy::kPerDocCount: {
            if (labels_per_doc < 1 || labels_per_doc > num_annotators) {
                throw std::invalid_argument("labels_per_doc must lie in [1, R]");
            }
            auto rng = make_stream(seed, "assignment");
            std::vector<int> pool(num_annotators);
            for (int d = 0; d < num_docs; ++d) {
                std::iota(pool.begin(), pool.end(), 0);
                std::shuffle(pool.begin(), pool.end(), rng);
                assigned[d].assign(pool.begin(), pool.begin() + labels_per_doc);
                std::sort(assigned[d].begin(), assigned[d].end());
            }
            break;
        }
    }
    return assigned;
}

int sample_categorical(const Vec& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

Vec sample_dirichlet(double concentration, int dim, std::mt19937_64& rng) {
    std::gamma_distribution<double> gamma(concentration, 1.0);
    Vec draw(dim);
    for (int i = 0; i < dim; ++i) draw[i] = std::max(gamma(rng), 1e-12);
    return draw / draw.sum();
}

struct SampledDocs {
    Corpus corpus;
    std::vector<Vec> zbar;  // empirical topic frequencies per document
    Mat beta;
};

SampledDocs sample_corpus(const SyntheticConfig& config) {
    if (config.num_topics < 1 || config.vocab_size < 2 || config.num_docs < 1 ||
        config.doc_length < 1) {
        throw std::invalid_argument("degenerate synthetic corpus configuration");
    }
    auto topic_rng = make_stream(config.seed, "topics");
    Mat beta(config.num_topics, config.vocab_size);
    for (int k = 0; k < config.num_topics; ++k) {
        beta.row(k) = sample_dirichlet(config.topic_sparsity, config.vocab_size, topic_rng)
                          .transpose();
    }

    auto doc_rng = make_stream(config.seed, "documents");
    SampledDocs out;
    out.beta = beta;
    out.corpus.vocabulary.terms.reserve(config.vocab_size);
    for (int j = 0; j < config.vocab_size; ++j) {
        out.corpus.vocabulary.terms.push_back("w" + std::to_string(j));
    }
    for (int d = 0; d < config.num_docs; ++d) {
        const Vec theta = sample_dirichlet(config.alpha, config.num_topics, doc_rng);
        std::map<int, int> counts;
        Vec topic_freq = Vec::Zero(config.num_topics);
        for (int n = 0; n < config.doc_length; ++n) {
            const int z = sample_categorical(theta, doc_rng);
            const int w = sample_categorical(beta.row(z).transpose(), doc_rng);
            topic_freq[z] += 1.0;
            counts[w] += 1;
        }
        Document doc;
        for (const auto& [term, count] : counts) {
            doc.entries.push_back({term, count});
            doc.total_tokens += count;
        }
        out.corpus.documents.push_back(std::move(doc));
        out.zbar.push_back(topic_freq / static_cast<double>(config.doc_length));
    }
    return out;
}

}  // namespace

Mat confusion_from_accuracy(double accuracy, int num_classes) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
        throw std::invalid_argument("accuracy must lie in [0, 1]");
    }
    if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
    const double off = (1.0 - accuracy) / (num_classes - 1);
    Mat confusion = Mat::Constant(num_classes, num_classes, off);
    confusion.diagonal().setConstant(accuracy);
    return confusion;
}

ClassAnnotations simulate_confusion_annotators(const std::vector<int>& true_labels,
                                               int num_classes, const ConfusionAnnotatorSet& set) {
    const int num_docs = static_cast<int>(true_labels.size());
    const int num_annotators = static_cast<int>(set.confusion.size());
    if (num_annotators == 0) throw std::invalid_argument("no annotators specified");
    for (const Mat& conf : set.confusion) {
        if (conf.rows() != num_classes || conf.cols() != num_classes) {
            throw std::invalid_argument("confusion matrix dimension mismatch");
        }
        for (int c = 0; c < num_classes; ++c) {
            if (std::fabs(conf.row(c).sum() - 1.0) > 1e-12 || conf.row(c).minCoeff() < 0.0) {
                throw std::invalid_argument("confusion rows must be probability vectors");
            }
        }
    }

    const auto assigned = assign_annotators(num_docs, num_annotators, set.assignment,
                                            set.labels_per_doc, set.seed);
    // One stream per annotator, consumed in ascending document order.
    std::vector<std::mt19937_64> streams;
    streams.reserve(num_annotators);
    for (int r = 0; r < num_annotators; ++r) {
        streams.push_back(make_stream(set.seed, "annotator-" + std::to_string(r)));
    }
    std::vector<ClassLabel> records;
    for (int d = 0; d < num_docs; ++d) {
        const int c = true_labels[d];
        if (c < 0 || c >= num_classes) throw std::invalid_argument("true label out of range");
        for (int r : assigned[d]) {
            const int label = sample_categorical(set.confusion[r].row(c).transpose(), streams[r]);
            records.push_back({d, r, label});
        }
    }
    return make_class_annotations(std::move(records), num_classes, num_docs);
}

RealAnnotations simulate_gaussian_annotators(const std::vector<double>& true_targets,
                                             const GaussianAnnotatorSet& set) {
    const int num_docs = static_cast<int>(true_targets.size());
    const int num_annotators = static_cast<int>(set.annotators.size());
    if (num_annotators == 0) throw std::invalid_argument("no annotators specified");
    for (const auto& spec : set.annotators) {
        if (!(spec.precision > 0.0)) throw std::invalid_argument("precision must be positive");
    }

    const auto assigned = assign_annotators(num_docs, num_annotators, set.assignment,
                                            set.labels_per_doc, set.seed);
    std::vector<std::mt19937_64> streams;
    streams.reserve(num_annotators);
    for (int r = 0; r < num_annotators; ++r) {
        streams.push_back(make_stream(set.seed, "annotator-" + std::to_string(r)));
    }
    std::normal_distribution<double> standard_normal(0.0, 1.0);
    std::vector<RealAnswer> records;
    for (int d = 0; d < num_docs; ++d) {
        for (int r : assigned[d]) {
            const auto& spec = set.annotators[r];
            const double noise = standard_normal(streams[r]) / std::sqrt(spec.precision);
            records.push_back({d, r, true_targets[d] + spec.bias + noise});
        }
    }
    return make_real_annotations(std::move(records), num_docs);
}

ClassSynthetic generate_synthetic_classification(const SyntheticConfig& config, const Mat& eta) {
    if (eta.cols() != config.num_topics) {
        throw std::invalid_argument("eta column count must equal the number of topics");
    }
    if (eta.rows() < 2) throw std::invalid_argument("need at least 2 classes");
    SampledDocs sampled = sample_corpus(config);
    auto label_rng = make_stream(config.seed, "labels");

    ClassSynthetic out;
    out.corpus = std::move(sampled.corpus);
    out.beta = std::move(sampled.beta);
    out.eta = eta;
    out.labels.reserve(config.num_docs);
    for (const Vec& zbar : sampled.zbar) {
        const Vec scores = eta * zbar;
        const Vec probs = (scores.array() - log_sum_exp(scores)).exp();
        out.labels.push_back(sample_categorical(probs, label_rng));
    }
    return out;
}

RegSynthetic generate_synthetic_regression(const SyntheticConfig& config, const Vec& eta,
                                           double sigma2) {
    if (eta.size() != config.num_topics) {
        throw std::invalid_argument("eta size must equal the number of topics");
    }
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be nonnegative");
    SampledDocs sampled = sample_corpus(config);
    auto target_rng = make_stream(config.seed, "targets");
    std::normal_distribution<double> standard_normal(0.0, 1.0);

    RegSynthetic out;
    out.corpus = std::move(sampled.corpus);
    out.beta = std::move(sampled.beta);
    out.eta = eta;
    out.sigma2 = sigma2;
    out.targets.reserve(config.num_docs);
    for (const Vec& zbar : sampled.zbar) {
        out.targets.push_back(eta.dot(zbar) + std::sqrt(sigma2) * standard_normal(target_rng));
    }
    return out;
}

}  // namespace maslda

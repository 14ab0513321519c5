#pragma once

#include <cstdint>
#include <vector>

#include "maslda/corpus.hpp"
#include "maslda/numerics.hpp"

namespace maslda {

enum class AssignmentPolicy {
    kAllDocs,             // every annotator labels every document
    kPartitionRoundRobin, // one annotator per document, round-robin over a seeded shuffle
    kPerDocCount,         // labels_per_doc distinct annotators per document, seeded
};

// Categorical annotators: given the true class c, annotator r reports label l
// with probability confusion[r](c, l).
struct ConfusionAnnotatorSet {
    std::vector<Mat> confusion;  // per annotator, C x C, rows on the simplex
    AssignmentPolicy assignment = AssignmentPolicy::kAllDocs;
    int labels_per_doc = 1;  // used by kPerDocCount
    std::uint64_t seed = 0;
};

// Row-stochastic confusion with the given diagonal and the remaining mass
// split evenly over the other labels.
Mat confusion_from_accuracy(double accuracy, int num_classes);

ClassAnnotations simulate_confusion_annotators(const std::vector<int>& true_labels,
                                               int num_classes, const ConfusionAnnotatorSet& set);

// Gaussian annotators: answer = target + bias + noise with variance
// 1/precision.
struct GaussianAnnotatorSet {
    struct Spec {
        double bias = 0.0;
        double precision = 1.0;
    };
    std::vector<Spec> annotators;
    AssignmentPolicy assignment = AssignmentPolicy::kAllDocs;
    int labels_per_doc = 1;
    std::uint64_t seed = 0;
};

RealAnnotations simulate_gaussian_annotators(const std::vector<double>& true_targets,
                                             const GaussianAnnotatorSet& set);

// Synthetic bag-of-words corpora sampled from the generative model: topics
// drawn once from a sparse Dirichlet, per-document proportions from
// Dir(alpha), and the latent response from the supervised head.
struct SyntheticConfig {
    int num_topics = 5;
    int vocab_size = 100;
    int num_docs = 100;
    int doc_length = 50;
    double alpha = 0.3;           // document topic-proportion concentration
    double topic_sparsity = 0.1;  // Dirichlet concentration of the topics
    std::uint64_t seed = 0;
};

struct ClassSynthetic {
    Corpus corpus;
    std::vector<int> labels;  // latent true class per document
    Mat beta;                 // K x V topics used by the generator
    Mat eta;                  // C x K
};

struct RegSynthetic {
    Corpus corpus;
    std::vector<double> targets;
    Mat beta;
    Vec eta;
    double sigma2 = 0.0;
};

// eta is C x K; the true class is sampled from softmax(eta . zbar).
ClassSynthetic generate_synthetic_classification(const SyntheticConfig& config, const Mat& eta);

// The latent target is eta . zbar plus Gaussian noise with variance sigma2.
RegSynthetic generate_synthetic_regression(const SyntheticConfig& config, const Vec& eta,
                                           double sigma2);

}  // namespace maslda

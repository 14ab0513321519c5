#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace maslda {

struct Vocabulary {
    std::vector<std::string> terms;

    int size() const { return static_cast<int>(terms.size()); }
};

// Sparse bag-of-words document: (term_id, count) entries with term ids
// strictly increasing and counts >= 1.
struct Document {
    struct Entry {
        int term = 0;
        int count = 0;
    };
    std::vector<Entry> entries;
    int total_tokens = 0;  // N_d

    int num_slots() const { return static_cast<int>(entries.size()); }
};

struct Corpus {
    Vocabulary vocabulary;
    std::vector<Document> documents;

    int num_docs() const { return static_cast<int>(documents.size()); }
    int vocab_size() const { return vocabulary.size(); }
};

// One categorical label given by one annotator to one document.
struct ClassLabel {
    int doc = 0;
    int annotator = 0;
    int label = 0;
};

struct ClassAnnotations {
    int num_docs = 0;
    int num_classes = 0;     // C
    int num_annotators = 0;  // R, inferred as max annotator id + 1
    std::vector<ClassLabel> records;
    // per_doc[d] lists (annotator, label) pairs; per_annotator[r] lists (doc, label).
    std::vector<std::vector<std::pair<int, int>>> per_doc;
    std::vector<std::vector<std::pair<int, int>>> per_annotator;
};

struct RealAnswer {
    int doc = 0;
    int annotator = 0;
    double value = 0.0;
};

struct RealAnnotations {
    int num_docs = 0;
    int num_annotators = 0;
    std::vector<RealAnswer> records;
    std::vector<std::vector<std::pair<int, double>>> per_doc;        // (annotator, value)
    std::vector<std::vector<std::pair<int, double>>> per_annotator;  // (doc, value)
};

// Parsers. All throw std::runtime_error with the offending line/document in
// the message.
//
// Document file: one document per line, "M id:count id:count ...", ids
// zero-based; M is the number of distinct terms. Vocabulary file: one token
// per line (line number = term id).
Corpus parse_corpus(const std::string& doc_path, const std::string& vocab_path);
Vocabulary parse_vocabulary(const std::string& vocab_path);
Corpus parse_documents(const std::string& doc_path, Vocabulary vocab);

void serialize_corpus(const Corpus& corpus, const std::string& doc_path,
                      const std::string& vocab_path);

// Headerless CSV "doc_id,annotator_id,label". Rejects duplicate
// (doc, annotator) pairs, labels outside [0, C), and doc ids outside [0, D).
ClassAnnotations parse_class_annotations(const std::string& path, int num_classes, int num_docs);
ClassAnnotations make_class_annotations(std::vector<ClassLabel> records, int num_classes,
                                        int num_docs);

// Headerless CSV "doc_id,annotator_id,value"; non-finite values rejected.
RealAnnotations parse_real_annotations(const std::string& path, int num_docs);
RealAnnotations make_real_annotations(std::vector<RealAnswer> records, int num_docs);

void serialize_class_annotations(const ClassAnnotations& ann, const std::string& path);
void serialize_real_annotations(const RealAnnotations& ann, const std::string& path);

// Per-document modal label; ties broken toward the lowest label index.
// Throws if some document has no label.
std::vector<int> majority_vote(const ClassAnnotations& ann);

// Per-document arithmetic mean of answers. Throws if some document has none.
std::vector<double> mean_answer(const RealAnnotations& ann);

struct SplitIndices {
    std::vector<int> train_ids;
    std::vector<int> test_ids;
};

// Deterministic shuffled split of [0, D). train_fraction must lie in (0, 1).
SplitIndices split_indices(int num_docs, double train_fraction, std::uint64_t seed);

Corpus subset_corpus(const Corpus& corpus, const std::vector<int>& doc_ids);
// Keeps only records whose document is in doc_ids, renumbering documents to
// their position in doc_ids. Annotator ids are preserved.
ClassAnnotations restrict_annotations(const ClassAnnotations& ann, const std::vector<int>& doc_ids);
RealAnnotations restrict_annotations(const RealAnnotations& ann, const std::vector<int>& doc_ids);

template <typename Annotations>
struct TrainTestSplit {
    Corpus train_corpus;
    Annotations train_annotations;
    std::vector<int> train_ids;
    Corpus test_corpus;
    std::vector<int> test_ids;  // positions in the original corpus (held-out truth lookup)
};

template <typename Annotations>
TrainTestSplit<Annotations> train_test_split(const Corpus& corpus, const Annotations& ann,
                                             double train_fraction, std::uint64_t seed) {
    SplitIndices idx = split_indices(corpus.num_docs(), train_fraction, seed);
    return TrainTestSplit<Annotations>{subset_corpus(corpus, idx.train_ids),
                                       restrict_annotations(ann, idx.train_ids),
                                       std::move(idx.train_ids),
                                       subset_corpus(corpus, idx.test_ids),
                                       std::move(idx.test_ids)};
}

}  // namespace maslda

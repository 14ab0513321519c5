#include "maslda/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "maslda/rng.hpp"

namespace maslda {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::ifstream open_or_fail(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open file: " + path);
    return in;
}

int parse_int(std::string_view token, const std::string& context) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        fail(context + ": expected integer, got '" + std::string(token) + "'");
    }
    return value;
}

double parse_double(std::string_view token, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(std::string(token), &pos);
        if (pos != token.size()) fail(context + ": trailing characters in '" + std::string(token) + "'");
        return value;
    } catch (const std::logic_error&) {
        fail(context + ": expected number, got '" + std::string(token) + "'");
    }
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= line.size()) {
        const std::size_t end = line.find(sep, start);
        if (end == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

}  // namespace

Vocabulary parse_vocabulary(const std::string& vocab_path) {
    std::ifstream in = open_or_fail(vocab_path);
    Vocabulary vocab;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string term(trim(line));
        if (term.empty()) fail(vocab_path + ":" + std::to_string(line_no) + ": empty vocabulary term");
        if (!seen.insert(term).second) {
            fail(vocab_path + ":" + std::to_string(line_no) + ": duplicate vocabulary term '" + term + "'");
        }
        vocab.terms.push_back(term);
    }
    if (vocab.terms.empty()) fail(vocab_path + ": empty vocabulary");
    return vocab;
}

Corpus parse_documents(const std::string& doc_path, Vocabulary vocab) {
    std::ifstream in = open_or_fail(doc_path);
    Corpus corpus;
    corpus.vocabulary = std::move(vocab);
    const int v_size = corpus.vocab_size();

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (content.empty()) continue;
        const std::string where = doc_path + ":" + std::to_string(line_no);

        std::istringstream fields{std::string(content)};
        std::string token;
        if (!(fields >> token)) fail(where + ": malformed line");
        const int declared = parse_int(token, where);

        std::map<int, int> counts;  // sorted, merging duplicate term ids
        int n_entries = 0;
        while (fields >> token) {
            const std::size_t colon = token.find(':');
            if (colon == std::string::npos) fail(where + ": expected id:count, got '" + token + "'");
            const int term = parse_int(std::string_view(token).substr(0, colon), where);
            const int count = parse_int(std::string_view(token).substr(colon + 1), where);
            if (term < 0 || term >= v_size) {
                fail(where + ": term id out of range: " + std::to_string(term) +
                     " (vocabulary size " + std::to_string(v_size) + ")");
            }
            if (count < 1) fail(where + ": count must be positive, got " + std::to_string(count));
            counts[term] += count;
            ++n_entries;
        }
        if (n_entries != declared) {
            fail(where + ": declared " + std::to_string(declared) + " entries, found " +
                 std::to_string(n_entries));
        }

        Document doc;
        for (const auto& [term, count] : counts) {
            doc.entries.push_back({term, count});
            doc.total_tokens += count;
        }
        if (doc.total_tokens == 0) {
            fail(doc_path + ": empty document at index " + std::to_string(corpus.num_docs()));
        }
        corpus.documents.push_back(std::move(doc));
    }
    if (corpus.documents.empty()) fail(doc_path + ": no documents");
    return corpus;
}

Corpus parse_corpus(const std::string& doc_path, const std::string& vocab_path) {
    return parse_documents(doc_path, parse_vocabulary(vocab_path));
}

void serialize_corpus(const Corpus& corpus, const std::string& doc_path,
                      const std::string& vocab_path) {
    {
        std::ofstream out(vocab_path);
        if (!out) fail("cannot write file: " + vocab_path);
        for (const auto& term : corpus.vocabulary.terms) out << term << '\n';
    }
    std::ofstream out(doc_path);
    if (!out) fail("cannot write file: " + doc_path);
    for (const Document& doc : corpus.documents) {
        out << doc.entries.size();
        for (const auto& e : doc.entries) out << ' ' << e.term << ':' << e.count;
        out << '\n';
    }
}

ClassAnnotations make_class_annotations(std::vector<ClassLabel> records, int num_classes,
                                        int num_docs) {
    if (num_classes < 2) fail("class annotations require at least 2 classes");
    if (records.empty()) fail("no annotations");
    ClassAnnotations ann;
    ann.num_docs = num_docs;
    ann.num_classes = num_classes;
    std::set<std::pair<int, int>> seen;
    int max_annotator = -1;
    for (const ClassLabel& rec : records) {
        if (rec.doc < 0 || rec.doc >= num_docs) {
            fail("annotation doc id out of range: " + std::to_string(rec.doc));
        }
        if (rec.annotator < 0) fail("negative annotator id");
        if (rec.label < 0 || rec.label >= num_classes) {
            fail("label out of range: " + std::to_string(rec.label) + " (C=" +
                 std::to_string(num_classes) + ")");
        }
        if (!seen.insert({rec.doc, rec.annotator}).second) {
            fail("duplicate annotation for (doc " + std::to_string(rec.doc) + ", annotator " +
                 std::to_string(rec.annotator) + ")");
        }
        max_annotator = std::max(max_annotator, rec.annotator);
    }
    ann.num_annotators = max_annotator + 1;
    ann.records = std::move(records);
    ann.per_doc.resize(num_docs);
    ann.per_annotator.resize(ann.num_annotators);
    for (const ClassLabel& rec : ann.records) {
        ann.per_doc[rec.doc].emplace_back(rec.annotator, rec.label);
        ann.per_annotator[rec.annotator].emplace_back(rec.doc, rec.label);
    }
    return ann;
}

ClassAnnotations parse_class_annotations(const std::string& path, int num_classes, int num_docs) {
    std::ifstream in = open_or_fail(path);
    std::vector<ClassLabel> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (content.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto cols = split(content, ',');
        if (cols.size() != 3) fail(where + ": expected doc_id,annotator_id,label");
        records.push_back({parse_int(trim(cols[0]), where), parse_int(trim(cols[1]), where),
                           parse_int(trim(cols[2]), where)});
    }
    if (records.empty()) fail(path + ": no annotations");
    return make_class_annotations(std::move(records), num_classes, num_docs);
}

RealAnnotations make_real_annotations(std::vector<RealAnswer> records, int num_docs) {
    if (records.empty()) fail("no annotations");
    RealAnnotations ann;
    ann.num_docs = num_docs;
    std::set<std::pair<int, int>> seen;
    int max_annotator = -1;
    for (const RealAnswer& rec : records) {
        if (rec.doc < 0 || rec.doc >= num_docs) {
            fail("annotation doc id out of range: " + std::to_string(rec.doc));
        }
        if (rec.annotator < 0) fail("negative annotator id");
        if (!std::isfinite(rec.value)) {
            fail("non-finite answer for (doc " + std::to_string(rec.doc) + ", annotator " +
                 std::to_string(rec.annotator) + ")");
        }
        if (!seen.insert({rec.doc, rec.annotator}).second) {
            fail("duplicate annotation for (doc " + std::to_string(rec.doc) + ", annotator " +
                 std::to_string(rec.annotator) + ")");
        }
        max_annotator = std::max(max_annotator, rec.annotator);
    }
    ann.num_annotators = max_annotator + 1;
    ann.records = std::move(records);
    ann.per_doc.resize(num_docs);
    ann.per_annotator.resize(ann.num_annotators);
    for (const RealAnswer& rec : ann.records) {
        ann.per_doc[rec.doc].emplace_back(rec.annotator, rec.value);
        ann.per_annotator[rec.annotator].emplace_back(rec.doc, rec.value);
    }
    return ann;
}

RealAnnotations parse_real_annotations(const std::string& path, int num_docs) {
    std::ifstream in = open_or_fail(path);
    std::vector<RealAnswer> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (content.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto cols = split(content, ',');
        if (cols.size() != 3) fail(where + ": expected doc_id,annotator_id,value");
        const double value = parse_double(trim(cols[2]), where);
        if (!std::isfinite(value)) fail(where + ": non-finite value");
        records.push_back({parse_int(trim(cols[0]), where), parse_int(trim(cols[1]), where), value});
    }
    if (records.empty()) fail(path + ": no annotations");
    return make_real_annotations(std::move(records), num_docs);
}

void serialize_class_annotations(const ClassAnnotations& ann, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write file: " + path);
    for (const ClassLabel& rec : ann.records) {
        out << rec.doc << ',' << rec.annotator << ',' << rec.label << '\n';
    }
}

void serialize_real_annotations(const RealAnnotations& ann, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write file: " + path);
    char buf[64];
    for (const RealAnswer& rec : ann.records) {
        std::snprintf(buf, sizeof buf, "%.17g", rec.value);
        out << rec.doc << ',' << rec.annotator << ',' << buf << '\n';
    }
}

std::vector<int> majority_vote(const ClassAnnotations& ann) {
    std::vector<int> result(ann.num_docs, -1);
    std::vector<int> counts(ann.num_classes);
    for (int d = 0; d < ann.num_docs; ++d) {
        if (ann.per_doc[d].empty()) {
            fail("majority_vote: document " + std::to_string(d) + " has no labels");
        }
        std::fill(counts.begin(), counts.end(), 0);
        for (const auto& [annotator, label] : ann.per_doc[d]) ++counts[label];
        int best = 0;
        for (int c = 1; c < ann.num_classes; ++c) {
            if (counts[c] > counts[best]) best = c;
        }
        result[d] = best;
    }
    return result;
}

std::vector<double> mean_answer(const RealAnnotations& ann) {
    std::vector<double> result(ann.num_docs, 0.0);
    for (int d = 0; d < ann.num_docs; ++d) {
        if (ann.per_doc[d].empty()) {
            fail("mean_answer: document " + std::to_string(d) + " has no answers");
        }
        double sum = 0.0;
        for (const auto& [annotator, value] : ann.per_doc[d]) sum += value;
        result[d] = sum / static_cast<double>(ann.per_doc[d].size());
    }
    return result;
}

SplitIndices split_indices(int num_docs, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail("train fraction must lie strictly between 0 and 1, got " +
             std::to_string(train_fraction));
    }
    std::vector<int> ids(num_docs);
    std::iota(ids.begin(), ids.end(), 0);
    auto rng = make_stream(seed, "train-test-split");
    std::shuffle(ids.begin(), ids.end(), rng);
    const int n_train = std::max(1, static_cast<int>(std::floor(train_fraction * num_docs)));
    if (n_train >= num_docs) fail("train fraction leaves no test documents");
    SplitIndices out;
    out.train_ids.assign(ids.begin(), ids.begin() + n_train);
    out.test_ids.assign(ids.begin() + n_train, ids.end());
    std::sort(out.train_ids.begin(), out.train_ids.end());
    std::sort(out.test_ids.begin(), out.test_ids.end());
    return out;
}

Corpus subset_corpus(const Corpus& corpus, const std::vector<int>& doc_ids) {
    Corpus out;
    out.vocabulary = corpus.vocabulary;
    out.documents.reserve(doc_ids.size());
    for (int id : doc_ids) {
        if (id < 0 || id >= corpus.num_docs()) fail("subset_corpus: doc id out of range");
        out.documents.push_back(corpus.documents[id]);
    }
    return out;
}

namespace {

std::vector<int> position_map(const std::vector<int>& doc_ids, int num_docs) {
    std::vector<int> pos(num_docs, -1);
    for (std::size_t i = 0; i < doc_ids.size(); ++i) pos[doc_ids[i]] = static_cast<int>(i);
    return pos;
}

}  // namespace

ClassAnnotations restrict_annotations(const ClassAnnotations& ann, const std::vector<int>& doc_ids) {
    const std::vector<int> pos = position_map(doc_ids, ann.num_docs);
    std::vector<ClassLabel> records;
    for (const ClassLabel& rec : ann.records) {
        if (pos[rec.doc] >= 0) records.push_back({pos[rec.doc], rec.annotator, rec.label});
    }
    return make_class_annotations(std::move(records), ann.num_classes,
                                  static_cast<int>(doc_ids.size()));
}

RealAnnotations restrict_annotations(const RealAnnotations& ann, const std::vector<int>& doc_ids) {
    const std::vector<int> pos = position_map(doc_ids, ann.num_docs);
    std::vector<RealAnswer> records;
    for (const RealAnswer& rec : ann.records) {
        if (pos[rec.doc] >= 0) records.push_back({pos[rec.doc], rec.annotator, rec.value});
    }
    return make_real_annotations(std::move(records), static_cast<int>(doc_ids.size()));
}

}  // namespace maslda

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "maslda/corpus.hpp"
#include "maslda/rng.hpp"

using namespace maslda;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

std::string vocab5() {
    return write_temp("vocab5.txt", "apple\nbanana\ncherry\ndate\nelder\n");
}

Corpus random_corpus(std::mt19937_64& rng, int vocab_size, int num_docs) {
    Corpus corpus;
    for (int j = 0; j < vocab_size; ++j) corpus.vocabulary.terms.push_back("t" + std::to_string(j));
    std::uniform_int_distribution<int> n_terms(1, std::min(6, vocab_size));
    std::uniform_int_distribution<int> term(0, vocab_size - 1);
    std::uniform_int_distribution<int> count(1, 5);
    for (int d = 0; d < num_docs; ++d) {
        std::set<int> terms;
        const int want = n_terms(rng);
        while (static_cast<int>(terms.size()) < want) terms.insert(term(rng));
        Document doc;
        for (int t : terms) {
            const int c = count(rng);
            doc.entries.push_back({t, c});
            doc.total_tokens += c;
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

}  // namespace

TEST_CASE("parse_corpus reads sparse count lines") {
    const auto doc_path = write_temp("docs_ok.txt", "2 0:1 3:4\n1 2:2\n");
    const Corpus corpus = parse_corpus(doc_path, vocab5());
    REQUIRE(corpus.num_docs() == 2);
    CHECK(corpus.vocab_size() == 5);
    const Document& d0 = corpus.documents[0];
    REQUIRE(d0.num_slots() == 2);
    CHECK(d0.entries[0].term == 0);
    CHECK(d0.entries[0].count == 1);
    CHECK(d0.entries[1].term == 3);
    CHECK(d0.entries[1].count == 4);
    CHECK(d0.total_tokens == 5);
}

TEST_CASE("parse_corpus rejects out-of-range term ids with the line number") {
    const auto doc_path = write_temp("docs_bad_term.txt", "1 0:1\n1 7:1\n");
    CHECK_THROWS_WITH_AS(parse_corpus(doc_path, vocab5()),
                         doctest::Contains("term id out of range"), std::runtime_error);
    try {
        parse_corpus(doc_path, vocab5());
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("parse_corpus rejects malformed and empty documents") {
    CHECK_THROWS(parse_corpus(write_temp("docs_malformed.txt", "2 0:1\n"), vocab5()));
    CHECK_THROWS(parse_corpus(write_temp("docs_zero.txt", "1 0:0\n"), vocab5()));
    CHECK_THROWS(parse_corpus(write_temp("docs_nocolon.txt", "1 05\n"), vocab5()));
}

TEST_CASE("corpus round-trips through serialization") {
    auto rng = make_stream(123, "corpus-roundtrip");
    for (int trial = 0; trial < 100; ++trial) {
        const Corpus original = random_corpus(rng, 12, 8);
        const auto doc_path = write_temp("roundtrip_docs.txt", "");
        const auto vocab_path = write_temp("roundtrip_vocab.txt", "");
        serialize_corpus(original, doc_path, vocab_path);
        const Corpus reparsed = parse_corpus(doc_path, vocab_path);
        REQUIRE(reparsed.num_docs() == original.num_docs());
        REQUIRE(reparsed.vocabulary.terms == original.vocabulary.terms);
        long total_counts = 0;
        for (int d = 0; d < original.num_docs(); ++d) {
            REQUIRE(reparsed.documents[d].num_slots() == original.documents[d].num_slots());
            for (int s = 0; s < original.documents[d].num_slots(); ++s) {
                CHECK(reparsed.documents[d].entries[s].term == original.documents[d].entries[s].term);
                CHECK(reparsed.documents[d].entries[s].count ==
                      original.documents[d].entries[s].count);
                total_counts += original.documents[d].entries[s].count;
            }
        }
        long total_tokens = 0;
        for (const auto& doc : reparsed.documents) total_tokens += doc.total_tokens;
        CHECK(total_tokens == total_counts);
    }
}

TEST_CASE("class annotations build per-document and per-annotator indices") {
    const auto path = write_temp("ann_ok.csv", "0,0,1\n0,1,2\n");
    const ClassAnnotations ann = parse_class_annotations(path, 3, 2);
    CHECK(ann.num_annotators == 2);
    REQUIRE(ann.per_doc[0].size() == 2);
    CHECK(ann.per_doc[1].empty());
    REQUIRE(ann.per_annotator[0].size() == 1);
    CHECK(ann.per_annotator[0][0] == std::pair<int, int>{0, 1});
    CHECK(ann.per_annotator[1][0] == std::pair<int, int>{0, 2});
}

TEST_CASE("class annotation constraint violations") {
    CHECK_THROWS_WITH_AS(
        parse_class_annotations(write_temp("ann_dup.csv", "0,0,1\n0,0,2\n"), 3, 2),
        doctest::Contains("duplicate"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_class_annotations(write_temp("ann_empty.csv", ""), 3, 2),
                         doctest::Contains("no annotations"), std::runtime_error);
    CHECK_THROWS(parse_class_annotations(write_temp("ann_label.csv", "0,0,5\n"), 3, 2));
    CHECK_THROWS(parse_class_annotations(write_temp("ann_doc.csv", "9,0,1\n"), 3, 2));
}

TEST_CASE("a movie-review-sized answer file parses with every record intact") {
    // 1500 documents, just under five answers each on average
    auto rng = make_stream(2024, "bulk-answers");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<RealAnswer> records;
    for (int d = 0; d < 1500; ++d) {
        for (int r = 0; r < 5; ++r) {
            if (r == 0 || unit(rng) < 0.99) {  // ~4.96 answers per doc
                records.push_back({d, r, 1.0 + 9.0 * unit(rng)});
            }
        }
    }
    const auto expected = records.size();
    CHECK(std::fabs(static_cast<double>(expected) / 1500.0 - 4.96) < 0.05);
    const auto path = (std::filesystem::temp_directory_path() / "bulk_answers.csv").string();
    serialize_real_annotations(make_real_annotations(records, 1500), path);
    const RealAnnotations parsed = parse_real_annotations(path, 1500);
    CHECK(parsed.records.size() == expected);
    CHECK(parsed.num_annotators == 5);
}

TEST_CASE("real annotations reject non-finite values") {
    const auto ok = write_temp("reals_ok.csv", "0,0,3.5\n");
    const RealAnnotations ann = parse_real_annotations(ok, 1);
    REQUIRE(ann.records.size() == 1);
    CHECK(ann.records[0].value == 3.5);
    CHECK_THROWS(parse_real_annotations(write_temp("reals_nan.csv", "0,0,NaN\n"), 1));
    CHECK_THROWS(parse_real_annotations(write_temp("reals_inf.csv", "0,0,inf\n"), 1));
}

TEST_CASE("majority vote picks the mode and breaks ties low") {
    std::vector<ClassLabel> records{{0, 0, 1}, {0, 1, 1}, {0, 2, 2}, {1, 0, 0}, {1, 1, 1}};
    const ClassAnnotations ann = make_class_annotations(records, 3, 2);
    const std::vector<int> votes = majority_vote(ann);
    CHECK(votes[0] == 1);  // {1,1,2} -> 1
    CHECK(votes[1] == 0);  // {0,1} tie -> lowest label
}

TEST_CASE("majority vote matches a naive recount on random inputs") {
    auto rng = make_stream(5, "mv-prop");
    std::uniform_int_distribution<int> n_labels(1, 7);
    std::uniform_int_distribution<int> label(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ClassLabel> records;
        const int docs = 5;
        for (int d = 0; d < docs; ++d) {
            const int n = n_labels(rng);
            for (int r = 0; r < n; ++r) records.push_back({d, r, label(rng)});
        }
        const ClassAnnotations ann = make_class_annotations(records, 4, docs);
        const std::vector<int> votes = majority_vote(ann);
        for (int d = 0; d < docs; ++d) {
            int counts[4] = {0, 0, 0, 0};
            for (const auto& rec : records) {
                if (rec.doc == d) ++counts[rec.label];
            }
            int best = 0;
            for (int c = 1; c < 4; ++c) {
                if (counts[c] > counts[best]) best = c;
            }
            CHECK(votes[d] == best);
        }
    }
}

TEST_CASE("majority vote requires every document labeled") {
    std::vector<ClassLabel> records{{0, 0, 1}};
    const ClassAnnotations ann = make_class_annotations(records, 2, 2);
    CHECK_THROWS_WITH_AS(majority_vote(ann), doctest::Contains("no labels"), std::runtime_error);
}

TEST_CASE("mean answer averages per document") {
    std::vector<RealAnswer> records{{0, 0, 2.0}, {0, 1, 4.0}, {1, 0, -1.25}};
    const RealAnnotations ann = make_real_annotations(records, 2);
    const std::vector<double> means = mean_answer(ann);
    CHECK(means[0] == doctest::Approx(3.0));
    CHECK(means[1] == doctest::Approx(-1.25));

    std::vector<RealAnswer> partial{{0, 0, 1.0}};
    CHECK_THROWS(mean_answer(make_real_annotations(partial, 2)));
}

TEST_CASE("train/test split is deterministic and seed-sensitive") {
    CHECK_THROWS(split_indices(100, 1.0, 0));
    CHECK_THROWS(split_indices(100, 0.0, 0));

    const SplitIndices a = split_indices(100, 0.75, 42);
    const SplitIndices b = split_indices(100, 0.75, 42);
    CHECK(a.train_ids == b.train_ids);
    CHECK(a.test_ids == b.test_ids);
    CHECK(a.train_ids.size() == 75);
    CHECK(a.test_ids.size() == 25);

    const SplitIndices c = split_indices(100, 0.75, 43);
    CHECK(a.train_ids != c.train_ids);
}

TEST_CASE("train_test_split restricts annotations to train documents") {
    auto rng = make_stream(9, "split");
    const Corpus corpus = random_corpus(rng, 10, 20);
    std::vector<ClassLabel> records;
    for (int d = 0; d < 20; ++d) records.push_back({d, d % 3, d % 2});
    const ClassAnnotations ann = make_class_annotations(records, 2, 20);

    const auto split = train_test_split(corpus, ann, 0.75, 7);
    CHECK(split.train_corpus.num_docs() == 15);
    CHECK(split.test_corpus.num_docs() == 5);
    CHECK(split.train_annotations.num_docs == 15);
    for (const auto& rec : split.train_annotations.records) {
        CHECK(rec.doc < 15);
        // the renumbered record matches the original document's label
        CHECK(rec.label == split.train_ids[rec.doc] % 2);
    }
}

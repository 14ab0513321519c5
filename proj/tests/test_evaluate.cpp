#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "maslda/evaluate.hpp"
#include "maslda/rng.hpp"

using namespace maslda;

TEST_CASE("accuracy endpoints and order invariance") {
    CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(accuracy({0, 0, 0}, {1, 2, 3}) == doctest::Approx(0.0));
    CHECK_THROWS(accuracy({1}, {1, 2}));

    std::vector<int> pred{0, 1, 1, 2, 0, 2};
    std::vector<int> truth{0, 1, 2, 2, 1, 2};
    const double base = accuracy(pred, truth);
    // permute both sequences identically
    std::vector<int> order{5, 3, 0, 4, 2, 1};
    std::vector<int> p2(6), t2(6);
    for (int i = 0; i < 6; ++i) {
        p2[i] = pred[order[i]];
        t2[i] = truth[order[i]];
    }
    CHECK(accuracy(p2, t2) == doctest::Approx(base));
}

TEST_CASE("r_squared endpoints are exact") {
    std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
    CHECK(r_squared(truth, truth) == doctest::Approx(1.0));
    const double mean = 2.5;
    CHECK(r_squared({mean, mean, mean, mean}, truth) == doctest::Approx(0.0));
    // a predictor worse than the mean goes negative
    CHECK(r_squared({4.0, 3.0, 2.0, 1.0}, truth) < 0.0);
}

TEST_CASE("confusion recovery error is scale-invariant and grounded") {
    std::vector<Mat> truth(1, Mat(2, 2));
    truth[0] << 1.0, 0.0, 0.0, 1.0;
    std::vector<Mat> proportional(1, Mat(2, 2));
    proportional[0] << 5.0, 0.0, 0.0, 9.0;  // rows normalize to the identity
    CHECK(confusion_recovery_error(proportional, truth) == doctest::Approx(0.0));

    std::vector<Mat> uniform(1, Mat::Constant(2, 2, 3.0));
    CHECK(confusion_recovery_error(uniform, truth) == doctest::Approx(1.0));
}

TEST_CASE("bias/precision recovery reports deltas and ratios") {
    Vec bias(2), precision(2);
    bias << 0.1, -0.3;
    precision << 10.0, 3.0;
    const std::vector<GaussianAnnotatorSet::Spec> specs{{0.1, 10.0}, {-0.3, 3.0}};
    const auto recovery = bias_precision_recovery(bias, precision, specs);
    CHECK(recovery[0].bias_error == doctest::Approx(0.0));
    CHECK(recovery[0].precision_ratio == doctest::Approx(1.0));
    CHECK(recovery[1].bias_error == doctest::Approx(0.0));
    CHECK(recovery[1].precision_ratio == doctest::Approx(1.0));
}

TEST_CASE("metric reports append with a single header and round-trip") {
    const auto path =
        (std::filesystem::temp_directory_path() / "maslda_metrics_test.csv").string();
    std::filesystem::remove(path);

    emit_report({}, path);
    {
        std::ifstream in(path);
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "run,seed,K,metric,value");
        CHECK_FALSE(std::getline(in, line));
    }

    std::vector<MetricRow> rows;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        rows.push_back({"svi", seed, 20, "accuracy", 0.5 + 0.01 * seed});
    }
    emit_report(rows, path);
    emit_report({{"batch", 9, 10, "r2", -0.25}}, path);

    const auto parsed = parse_report(path);
    REQUIRE(parsed.size() == 6);
    int acc_rows = 0;
    for (const auto& row : parsed) acc_rows += row.metric == "accuracy";
    CHECK(acc_rows == 5);
    CHECK(parsed[0].run == "svi");
    CHECK(parsed[5].run == "batch");
    CHECK(parsed[5].value == doctest::Approx(-0.25));
    CHECK(parsed[3].seed == 3);
    CHECK(parsed[3].num_topics == 20);
}

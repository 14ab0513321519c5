#include "maslda/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace maslda {

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || predicted.empty()) {
        throw std::invalid_argument("accuracy: length mismatch or empty input");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double r_squared(const std::vector<double>& predicted, const std::vector<double>& truth) {
    if (predicted.size() != truth.size() || predicted.empty()) {
        throw std::invalid_argument("r_squared: length mismatch or empty input");
    }
    double mean = 0.0;
    for (double t : truth) mean += t;
    mean /= static_cast<double>(truth.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
    }
    if (ss_tot == 0.0) throw std::invalid_argument("r_squared: constant truth");
    return 1.0 - ss_res / ss_tot;
}

double confusion_recovery_error(const std::vector<Mat>& xi,
                                const std::vector<Mat>& true_confusion) {
    if (xi.size() != true_confusion.size() || xi.empty()) {
        throw std::invalid_argument("confusion_recovery_error: annotator count mismatch");
    }
    double total = 0.0;
    int rows = 0;
    for (std::size_t r = 0; r < xi.size(); ++r) {
        if (xi[r].rows() != true_confusion[r].rows() || xi[r].cols() != true_confusion[r].cols()) {
            throw std::invalid_argument("confusion_recovery_error: dimension mismatch");
        }
        for (Eigen::Index c = 0; c < xi[r].rows(); ++c) {
            const Vec estimated = xi[r].row(c).transpose() / xi[r].row(c).sum();
            total += (estimated - true_confusion[r].row(c).transpose()).cwiseAbs().sum();
            ++rows;
        }
    }
    return total / rows;
}

std::vector<BiasPrecisionRecovery> bias_precision_recovery(
    const Vec& bias, const Vec& precision, const std::vector<GaussianAnnotatorSet::Spec>& specs) {
    if (bias.size() != static_cast<Eigen::Index>(specs.size()) || bias.size() != precision.size()) {
        throw std::invalid_argument("bias_precision_recovery: annotator count mismatch");
    }
    std::vector<BiasPrecisionRecovery> out(specs.size());
    for (std::size_t r = 0; r < specs.size(); ++r) {
        out[r].bias_error = bias[static_cast<Eigen::Index>(r)] - specs[r].bias;
        out[r].precision_ratio = precision[static_cast<Eigen::Index>(r)] / specs[r].precision;
    }
    return out;
}

void emit_report(const std::vector<MetricRow>& rows, const std::string& path) {
    namespace fs = std::filesystem;
    const bool need_header = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    if (need_header) out << "run,seed,K,metric,value\n";
    char buf[64];
    for (const MetricRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%.17g", row.value);
        out << row.run << ',' << row.seed << ',' << row.num_topics << ',' << row.metric << ','
            << buf << '\n';
    }
}

std::vector<MetricRow> parse_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty metrics file");
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        MetricRow row;
        std::string token;
        std::getline(fields, row.run, ',');
        std::getline(fields, token, ',');
        row.seed = std::stoull(token);
        std::getline(fields, token, ',');
        row.num_topics = std::stoi(token);
        std::getline(fields, row.metric, ',');
        std::getline(fields, token, ',');
        row.value = std::stod(token);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace maslda

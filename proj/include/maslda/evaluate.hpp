#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maslda/numerics.hpp"
#include "maslda/simulate.hpp"

namespace maslda {

// Fraction of matching entries; inputs must have equal nonzero length.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// Coefficient of determination 1 - SS_res / SS_tot; negative when the
// predictor does worse than the truth mean.
double r_squared(const std::vector<double>& predicted, const std::vector<double>& truth);

// Mean, over annotators and true classes, of the L1 distance between each
// row-normalized confusion posterior and the corresponding true row.
double confusion_recovery_error(const std::vector<Mat>& xi, const std::vector<Mat>& true_confusion);

struct BiasPrecisionRecovery {
    double bias_error = 0.0;     // estimated - true
    double precision_ratio = 0.0;  // estimated / true
};

std::vector<BiasPrecisionRecovery> bias_precision_recovery(
    const Vec& bias, const Vec& precision, const std::vector<GaussianAnnotatorSet::Spec>& specs);

struct MetricRow {
    std::string run;
    std::uint64_t seed = 0;
    int num_topics = 0;
    std::string metric;
    double value = 0.0;
};

// Appends rows to a CSV with header "run,seed,K,metric,value"; the header is
// written only when the file is new or empty.
void emit_report(const std::vector<MetricRow>& rows, const std::string& path);

std::vector<MetricRow> parse_report(const std::string& path);

}  // namespace maslda

#pragma once

#include <string>

#include "maslda/classification.hpp"
#include "maslda/regression.hpp"

namespace maslda {

// Model files are single JSON documents with dimensions, hyperparameters,
// flattened parameter arrays (eta and zeta row-major, xi annotator-major) and
// the annotator id mapping. Floating point is written with 17 significant
// digits so save/load round-trips bit-exactly.
void save_model(const ClassificationModel& model, const std::string& path);
void save_model(const RegressionModel& model, const std::string& path);

// Peeks at the "model" field: "maslda-classify" or "maslda-regress".
std::string model_kind(const std::string& path);

ClassificationModel load_classification_model(const std::string& path);
RegressionModel load_regression_model(const std::string& path);

}  // namespace maslda

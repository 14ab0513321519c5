#pragma once

#include <utility>
#include <vector>

#include "maslda/corpus.hpp"
#include "maslda/numerics.hpp"

namespace maslda {

// Exact quantities on tiny instances by enumerating every topic-assignment
// sequence, with the topic proportions integrated out in closed form. Global
// parameters are supplied as point values (log beta, log pi). Enumeration is
// limited to C * K^{N_d} <= 10^6 states and runs in the log domain.

// log p(w, y | log_beta, log_pi, eta, alpha) for one document with the given
// annotator labels.
double exact_log_evidence_class(const Document& doc,
                                const std::vector<std::pair<int, int>>& labels,
                                const Mat& log_beta, const std::vector<Mat>& log_pi,
                                const Mat& eta, double alpha);

// Regression counterpart: the latent target is integrated out analytically,
// so each assignment contributes a closed-form Gaussian marginal of the
// annotator answers.
double exact_log_evidence_reg(const Document& doc,
                              const std::vector<std::pair<int, double>>& answers,
                              const Mat& log_beta, const Vec& eta, double sigma2,
                              const Vec& bias, const Vec& precision, double alpha);

// argmax_c p(c | w) by enumeration; ties resolve to the lowest class index.
int exact_map_class(const Document& doc, const Mat& log_beta, const Mat& eta, double alpha);

}  // namespace maslda

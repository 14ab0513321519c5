#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "maslda/classification.hpp"  // Hyperparameters, SviConfig, EstepOptions
#include "maslda/corpus.hpp"
#include "maslda/numerics.hpp"

namespace maslda {

// Multi-annotator supervised topic model for continuous targets: each
// annotator reports the latent per-document target shifted by a personal bias
// and corrupted by Gaussian noise with a personal precision.
struct RegressionModel {
    int num_topics = 0;
    int vocab_size = 0;
    int num_annotators = 0;
    Hyperparameters hyper;  // alpha, tau (omega unused here)
    double sigma2 = 1.0;    // variance of the latent target around eta . zbar
    Vec eta;                // K regression coefficients
    Vec bias;               // R
    Vec precision;          // R, > 0
    Mat zeta;               // K x V
    std::vector<int> annotator_ids;

    Mat expected_log_beta() const;
};

// Per-document variational state; the latent target posterior is Gaussian
// with mean m and variance v.
struct RegDocState {
    Vec gamma;
    Mat phi;
    double m = 0.0;
    double v = 1.0;

    Vec phi_bar(const Document& doc) const;
};

// Alternate update forms kept for comparison runs; both default off.
struct RegCompatOptions {
    // m update: divide by sigma^-2 plus the precisions of ALL annotators
    // instead of only those who answered the document.
    bool m_denominator_all_annotators = false;
    // v update: sigma^2 + sum_r 1/p_r instead of (sigma^-2 + sum_r p_r)^-1.
    bool v_additive_form = false;
};

struct RegFitOptions {
    int max_iter = 100;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    int threads = 1;
    EstepOptions estep;
    RegCompatOptions compat;
    double precision_floor = 1e-6;
    double precision_cap = 1e6;
};

struct RegFitResult {
    RegressionModel model;
    std::vector<RegDocState> states;
    std::vector<double> elbo_trace;
    std::int64_t document_visits = 0;
};

// ---- coordinate updates ----------------------------------------------------

// Fix-point update of phi row `slot`; phi_minus_n is the token-weighted sum
// of all phi rows with one token of this slot removed.
Vec update_phi_word_r(int slot, const Document& doc, const Vec& digamma_gamma,
                      const Mat& elog_beta, const Vec& eta, const Vec& phi_minus_n, double m,
                      double sigma2);

// Posterior mean of the latent target: precision-weighted average of the
// regression prediction and the bias-corrected answers.
double update_m(double eta_dot_phi_bar, double sigma2,
                const std::vector<std::pair<int, double>>& answers, const Vec& precision,
                const Vec& bias, const RegCompatOptions& compat = {});

// Posterior variance of the latent target.
double update_v(double sigma2, const std::vector<std::pair<int, double>>& answers,
                const Vec& precision, const RegCompatOptions& compat = {});

// E[zbar zbar^T] for one document.
Mat zbar_second_moment(const Document& doc, const Mat& phi);

// Closed-form regression coefficients: solves
// (sum_d E[zbar zbar^T]) eta = sum_d phi_bar^d m^d, with a small ridge added
// if the system is numerically singular.
Vec solve_eta(const Corpus& corpus, const std::vector<RegDocState>& states);

// Mean residual y - m over the annotator's documents. Throws when the
// annotator has no answers.
double estimate_bias(const std::vector<std::pair<int, double>>& answers,
                     std::span<const double> doc_means);

// Inverse mean of v + (y - m - b)^2, clamped to [floor, cap].
double estimate_precision(const std::vector<std::pair<int, double>>& answers,
                          std::span<const double> doc_means, std::span<const double> doc_vars,
                          double bias, double floor = 1e-6, double cap = 1e6);

// ---- inference & learning --------------------------------------------------

RegDocState estep_document_r(const Document& doc,
                             const std::vector<std::pair<int, double>>& answers,
                             const RegressionModel& model, const Mat& elog_beta,
                             const EstepOptions& opts = {}, const RegCompatOptions& compat = {});
RegDocState estep_document_r(const Document& doc,
                             const std::vector<std::pair<int, double>>& answers,
                             const RegressionModel& model, const EstepOptions& opts = {});

double elbo_document_r(const Document& doc, const std::vector<std::pair<int, double>>& answers,
                       const RegDocState& state, const Vec& eta, const Mat& elog_beta,
                       double sigma2, const Vec& bias, const Vec& precision, double alpha);

double elbo_r(const RegressionModel& model, const std::vector<RegDocState>& states,
              const Corpus& corpus, const RealAnnotations& ann);

RegressionModel init_reg_model(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                               const Hyperparameters& hyper, double sigma2, std::uint64_t seed);

// Batch variational EM: local loop per document, then the closed-form eta,
// bias, precision and zeta updates.
RegFitResult fit_batch_r(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                         const Hyperparameters& hyper, double sigma2,
                         const RegFitOptions& opts = {});

// Stochastic variant: mini-batch natural-gradient steps on zeta; eta, bias
// and precision refreshed once per epoch (or blended per batch when
// svi.stochastic_annotator_updates is set).
RegFitResult fit_svi_r(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                       const Hyperparameters& hyper, double sigma2, const SviConfig& svi,
                       const RegFitOptions& opts = {});

// Unsupervised inference for a new document followed by eta . phi_bar.
double predict_target(const Document& doc, const RegressionModel& model,
                      const EstepOptions& opts = {});

}  // namespace maslda

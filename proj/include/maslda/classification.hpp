#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "maslda/corpus.hpp"
#include "maslda/numerics.hpp"

namespace maslda {

struct Hyperparameters {
    double alpha = 1.0;  // topic proportion prior
    double tau = 1.0;    // topic-word prior
    double omega = 1.0;  // annotator confusion prior (classification only)
};

// Multi-annotator supervised topic model for classification. Global
// variational state: zeta rows parameterize the topic-word Dirichlets, xi[r]
// rows the per-true-class Dirichlets over annotator r's reported labels.
struct ClassificationModel {
    int num_topics = 0;      // K
    int num_classes = 0;     // C
    int vocab_size = 0;      // V
    int num_annotators = 0;  // R
    Hyperparameters hyper;
    Mat eta;              // C x K class coefficients
    Mat zeta;             // K x V, entries > 0
    std::vector<Mat> xi;  // R matrices, each C x C, entries > 0
    std::vector<int> annotator_ids;  // external id of each dense annotator index

    Mat expected_log_beta() const;             // K x V
    std::vector<Mat> expected_log_pi() const;  // per annotator, C x C
};

// Per-document variational state. phi has one row per distinct term of the
// document (token multiplicity carried by the entry count).
struct ClassDocState {
    Vec gamma;   // K
    Mat phi;     // S x K, rows on the simplex
    Vec lambda;  // C, on the simplex

    Vec phi_bar(const Document& doc) const;  // (1/N_d) sum_n phi_n
};

struct SviConfig {
    double kappa = 0.6;      // forgetting rate, must lie in (0.5, 1]
    double delay = 1.0;      // >= 0
    int batch_size = 500;
    int max_epochs = 10;
    std::uint64_t seed = 0;
    // Regression only: blend annotator bias/precision toward their batch
    // estimates with step rho_t instead of the per-epoch closed-form M-step.
    bool stochastic_annotator_updates = false;
};

struct EstepOptions {
    int max_inner = 50;
    double tol = 1e-5;  // max absolute parameter change
};

struct ClassFitOptions {
    int max_iter = 100;
    double tol = 1e-5;  // relative ELBO change
    std::uint64_t seed = 0;
    int threads = 1;
    EstepOptions estep;
    MinimizeOptions eta_search;  // M-step L-BFGS settings
};

struct ClassFitResult {
    ClassificationModel model;
    std::vector<ClassDocState> states;
    std::vector<double> elbo_trace;  // one entry per EM iteration / SVI epoch
    std::int64_t document_visits = 0;
};

// ---- coordinate updates ----------------------------------------------------

// E[log pi_row] for one true-class row of a confusion Dirichlet.
Vec expected_log_pi_row(const Vec& xi_row);

// gamma_i = alpha + sum_n phi_{n,i} (token-multiplicity weighted).
Vec update_gamma(const Document& doc, const Mat& phi, double alpha);

// zeta_{i,j} = tau + sum_d sum_n w_{n,j} phi_{n,i}.
Mat update_zeta(const Corpus& corpus, const std::vector<ClassDocState>& states, double tau);

// xi^r_{c,l} = omega + sum_{d in D_r} lambda_c^d [y^{d,r} = l].
std::vector<Mat> update_xi(const ClassAnnotations& ann, const std::vector<ClassDocState>& states,
                           double omega);

// lambda_l ~ exp(eta_l . phi_bar + sum_{(r,y)} E[log pi^r_{l,y}]), normalized
// in the log domain.
Vec update_lambda(const Vec& phi_bar, const Mat& eta,
                  const std::vector<std::pair<int, int>>& labels,
                  const std::vector<Mat>& elog_pi);

// Bookkeeping for the bounded softmax term of one document. Maintains, in the
// log domain, the per-class word factors t_{l,s} = phi_s . exp(eta_l / N_d)
// and their count-weighted sums log b_l, with divide-out updates per word and
// a full rebuild whenever a factor underflows the stability threshold.
class SoftmaxBoundWorkspace {
  public:
    SoftmaxBoundWorkspace(const Document& doc, const Mat& eta);

    void rebuild(const Mat& phi);
    // Call once per sweep; caches digamma(gamma) and eta^T lambda / N_d.
    void begin_sweep(const ClassDocState& state);

    // Fix-point update of phi row `slot` in place; refreshes the word factors.
    // Returns the max absolute change of the row. Throws on non-finite
    // exponents (document diagnostics included).
    double update_phi_word(int slot, ClassDocState& state, const Mat& elog_beta);

    // log sum_l b_l for the current phi (used by the bounded ELBO).
    double log_sum_b() const;

    const Document& doc() const { return *doc_; }

  private:
    const Document* doc_;
    const Mat* eta_;
    double inv_n_;
    Mat factors_;          // C x K: exp(eta_{l,i}/N - shift_l)
    Vec shift_;            // C: max_i eta_{l,i}/N
    Mat log_word_factor_;  // C x S: log(phi_s . factors_l), shift excluded
    Vec log_b_prime_;      // C: sum_s c_s log_word_factor_(l, s)
    Vec digamma_gamma_;    // K, valid during a sweep
    Vec eta_lambda_;       // K: (eta^T lambda) / N_d, valid during a sweep
};

// ---- inference & learning --------------------------------------------------

// Smoothed per-document annotator vote (counts + 1, normalized).
Vec initial_lambda(const std::vector<std::pair<int, int>>& labels, int num_classes);

// Local coordinate ascent for one labeled document: sweeps the phi rows, then
// gamma, then lambda, until the largest parameter change drops below
// opts.tol or the iteration cap is hit. Deterministic.
ClassDocState estep_document(const Document& doc, const std::vector<std::pair<int, int>>& labels,
                             const ClassificationModel& model, const Mat& elog_beta,
                             const std::vector<Mat>& elog_pi, const EstepOptions& opts = {});
ClassDocState estep_document(const Document& doc, const std::vector<std::pair<int, int>>& labels,
                             const ClassificationModel& model, const EstepOptions& opts = {});

// Per-document terms of the bounded objective with caller-supplied
// expectations of log beta / log pi (point values give the frozen-global
// bound used against the exact-enumeration reference).
double elbo_document(const Document& doc, const std::vector<std::pair<int, int>>& labels,
                     const ClassDocState& state, const Mat& eta, const Mat& elog_beta,
                     const std::vector<Mat>& elog_pi, double alpha);

// Full objective: document terms plus the Dirichlet prior/entropy terms of
// zeta and xi.
double elbo(const ClassificationModel& model, const std::vector<ClassDocState>& states,
            const Corpus& corpus, const ClassAnnotations& ann);

// Maximization objective for eta (flattened row-major C x K) and its
// gradient; log-domain accumulation throughout.
ObjectiveEvaluation eta_objective(const Vec& eta_flat, int num_classes, int num_topics,
                                  const Corpus& corpus, const std::vector<ClassDocState>& states);

// Model initialization shared by the batch and stochastic fits: eta = 0,
// zeta = tau + seeded uniform counts, xi from the smoothed label votes.
ClassificationModel init_class_model(const Corpus& corpus, const ClassAnnotations& ann,
                                     int num_topics, const Hyperparameters& hyper,
                                     std::uint64_t seed);

// Batch variational EM. The trace holds the bounded ELBO after each full
// iteration and is non-decreasing up to small numerical slack.
ClassFitResult fit_batch(const Corpus& corpus, const ClassAnnotations& ann, int num_topics,
                         const Hyperparameters& hyper, const ClassFitOptions& opts = {});

// Stochastic variational inference with uniformly sampled mini-batches and
// step size rho_t = (t + delay)^(-kappa). Batch sufficient statistics are
// scaled by D/|B|; confusion rows are updated only for annotators present in
// the batch. eta is refreshed once per epoch.
ClassFitResult fit_svi(const Corpus& corpus, const ClassAnnotations& ann, int num_topics,
                       const Hyperparameters& hyper, const SviConfig& svi,
                       const ClassFitOptions& opts = {});

struct HeldoutState {
    Vec gamma;
    Mat phi;

    Vec phi_bar(const Document& doc) const;
};

// Unsupervised local inference for an unlabeled document (no label or
// annotator terms are consumed).
HeldoutState infer_heldout(const Document& doc, const Mat& elog_beta, double alpha,
                           const EstepOptions& opts = {});
HeldoutState infer_heldout(const Document& doc, const ClassificationModel& model,
                           const EstepOptions& opts = {});

struct ClassPrediction {
    int label = 0;
    Vec scores;  // eta * phi_bar, one entry per class
};

// argmax_c eta_c . phi_bar; ties resolve to the lowest class index.
ClassPrediction predict_class(const Document& doc, const ClassificationModel& model,
                              const EstepOptions& opts = {});

}  // namespace maslda

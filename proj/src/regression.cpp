#include "maslda/regression.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "maslda/rng.hpp"
#include "parallel.hpp"

namespace maslda {

namespace {

constexpr double kProbFloor = 1e-300;

double floored_log(double x) { return std::log(std::max(x, kProbFloor)); }

Vec softmax_from_log(const Vec& log_weights) {
    const double lse = log_sum_exp(log_weights);
    return (log_weights.array() - lse).exp();
}

Vec weighted_phi_sum(const Document& doc, const Mat& phi) {
    Vec sum = Vec::Zero(phi.cols());
    for (int s = 0; s < doc.num_slots(); ++s) {
        sum += doc.entries[s].count * phi.row(s).transpose();
    }
    return sum;
}

double dirichlet_prior_entropy_terms(const Vec& q, double prior_conc, const Vec& elog) {
    const auto n = static_cast<double>(q.size());
    double out = log_gamma(n * prior_conc) - n * log_gamma(prior_conc) +
                 (prior_conc - 1.0) * elog.sum();
    out -= log_gamma(q.sum());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        out += log_gamma(q[i]) - (q[i] - 1.0) * elog[i];
    }
    return out;
}

}  // namespace

Mat RegressionModel::expected_log_beta() const {
    Mat out(num_topics, vocab_size);
    for (int k = 0; k < num_topics; ++k) {
        out.row(k) = dirichlet_expected_log(zeta.row(k).transpose()).transpose();
    }
    return out;
}

Vec RegDocState::phi_bar(const Document& doc) const {
    return weighted_phi_sum(doc, phi) / static_cast<double>(doc.total_tokens);
}

Vec update_phi_word_r(int slot, const Document& doc, const Vec& digamma_gamma,
                      const Mat& elog_beta, const Vec& eta, const Vec& phi_minus_n, double m,
                      double sigma2) {
    const double n_tokens = doc.total_tokens;
    const int term = doc.entries[slot].term;
    const double eta_dot_rest = eta.dot(phi_minus_n);
    const Vec exponent = digamma_gamma + elog_beta.col(term) +
                         (m / (n_tokens * sigma2)) * eta -
                         (2.0 * eta_dot_rest * eta + eta.cwiseProduct(eta)) /
                             (2.0 * n_tokens * n_tokens * sigma2);
    if (!exponent.allFinite()) {
        throw std::runtime_error("update_phi_word_r: non-finite exponent at slot " +
                                 std::to_string(slot));
    }
    return softmax_from_log(exponent);
}

double update_m(double eta_dot_phi_bar, double sigma2,
                const std::vector<std::pair<int, double>>& answers, const Vec& precision,
                const Vec& bias, const RegCompatOptions& compat) {
    const double inv_sigma2 = 1.0 / sigma2;
    double numer = inv_sigma2 * eta_dot_phi_bar;
    double denom = inv_sigma2;
    for (const auto& [r, y] : answers) {
        numer += precision[r] * (y - bias[r]);
        if (!compat.m_denominator_all_annotators) denom += precision[r];
    }
    if (compat.m_denominator_all_annotators) denom += precision.sum();
    return numer / denom;
}

double update_v(double sigma2, const std::vector<std::pair<int, double>>& answers,
                const Vec& precision, const RegCompatOptions& compat) {
    if (compat.v_additive_form) {
        double v = sigma2;
        for (const auto& [r, y] : answers) v += 1.0 / precision[r];
        return v;
    }
    double inv = 1.0 / sigma2;
    for (const auto& [r, y] : answers) inv += precision[r];
    return 1.0 / inv;
}

Mat zbar_second_moment(const Document& doc, const Mat& phi) {
    const auto K = phi.cols();
    const double n_tokens = doc.total_tokens;
    const Vec sum = weighted_phi_sum(doc, phi);
    Mat out = sum * sum.transpose();
    for (int s = 0; s < doc.num_slots(); ++s) {
        const double c = doc.entries[s].count;
        const Vec row = phi.row(s).transpose();
        out -= c * (row * row.transpose());
        out += c * Mat(row.asDiagonal());
    }
    out /= n_tokens * n_tokens;
    (void)K;
    return out;
}

Vec solve_eta(const Corpus& corpus, const std::vector<RegDocState>& states) {
    const auto K = states.front().phi.cols();
    Mat lhs = Mat::Zero(K, K);
    Vec rhs = Vec::Zero(K);
    for (int d = 0; d < corpus.num_docs(); ++d) {
        lhs += zbar_second_moment(corpus.documents[d], states[d].phi);
        rhs += states[d].phi_bar(corpus.documents[d]) * states[d].m;
    }
    Eigen::LLT<Mat> llt(lhs);
    if (llt.info() == Eigen::Success) {
        const Vec eta = llt.solve(rhs);
        if (eta.allFinite()) return eta;
    }
    // Numerically singular moment matrix; regularize the diagonal.
    const double ridge = 1e-8 * lhs.trace() / K;
    lhs.diagonal().array() += ridge;
    const Vec eta = Eigen::LLT<Mat>(lhs).solve(rhs);
    if (!eta.allFinite()) throw std::runtime_error("solve_eta: singular system");
    return eta;
}

double estimate_bias(const std::vector<std::pair<int, double>>& answers,
                     std::span<const double> doc_means) {
    if (answers.empty()) throw std::invalid_argument("estimate_bias: annotator without answers");
    double sum = 0.0;
    for (const auto& [doc, y] : answers) sum += y - doc_means[doc];
    return sum / static_cast<double>(answers.size());
}

double estimate_precision(const std::vector<std::pair<int, double>>& answers,
                          std::span<const double> doc_means, std::span<const double> doc_vars,
                          double bias, double floor, double cap) {
    if (answers.empty()) {
        throw std::invalid_argument("estimate_precision: annotator without answers");
    }
    double sum = 0.0;
    for (const auto& [doc, y] : answers) {
        const double resid = y - doc_means[doc] - bias;
        sum += doc_vars[doc] + resid * resid;
    }
    const double mean = sum / static_cast<double>(answers.size());
    if (mean <= 0.0) return cap;
    return std::clamp(1.0 / mean, floor, cap);
}

// ---- local inference ---------------------------------------------------------

RegDocState estep_document_r(const Document& doc,
                             const std::vector<std::pair<int, double>>& answers,
                             const RegressionModel& model, const Mat& elog_beta,
                             const EstepOptions& opts, const RegCompatOptions& compat) {
    const int K = model.num_topics;
    const double inv_n = 1.0 / doc.total_tokens;
    RegDocState state;
    state.phi = Mat::Constant(doc.num_slots(), K, 1.0 / K);
    state.gamma = update_gamma(doc, state.phi, model.hyper.alpha);
    if (answers.empty()) {
        state.m = model.eta.dot(state.phi_bar(doc));
    } else {
        double sum = 0.0;
        for (const auto& [r, y] : answers) sum += y;
        state.m = sum / static_cast<double>(answers.size());
    }
    state.v = update_v(model.sigma2, answers, model.precision, compat);

    Vec digamma_gamma(K);
    Vec phi_sum = weighted_phi_sum(doc, state.phi);
    for (int it = 0; it < opts.max_inner; ++it) {
        double change = 0.0;
        for (int i = 0; i < K; ++i) digamma_gamma[i] = digamma(state.gamma[i]);
        for (int s = 0; s < doc.num_slots(); ++s) {
            const Vec old_row = state.phi.row(s).transpose();
            const Vec minus_n = phi_sum - old_row;  // one token of this slot removed
            const Vec row = update_phi_word_r(s, doc, digamma_gamma, elog_beta, model.eta,
                                              minus_n, state.m, model.sigma2);
            change = std::max(change, (row - old_row).cwiseAbs().maxCoeff());
            state.phi.row(s) = row.transpose();
            phi_sum += doc.entries[s].count * (row - old_row);
        }
        const Vec gamma_new = update_gamma(doc, state.phi, model.hyper.alpha);
        change = std::max(change, (gamma_new - state.gamma).cwiseAbs().maxCoeff());
        state.gamma = gamma_new;

        const double m_new = update_m(model.eta.dot(phi_sum * inv_n), model.sigma2, answers,
                                      model.precision, model.bias, compat);
        change = std::max(change, std::fabs(m_new - state.m));
        state.m = m_new;

        if (change < opts.tol) break;
    }
    return state;
}

RegDocState estep_document_r(const Document& doc,
                             const std::vector<std::pair<int, double>>& answers,
                             const RegressionModel& model, const EstepOptions& opts) {
    return estep_document_r(doc, answers, model, model.expected_log_beta(), opts, {});
}

// ---- objective ----------------------------------------------------------------

double elbo_document_r(const Document& doc, const std::vector<std::pair<int, double>>& answers,
                       const RegDocState& state, const Vec& eta, const Mat& elog_beta,
                       double sigma2, const Vec& bias, const Vec& precision, double alpha) {
    const auto K = state.gamma.size();
    const Vec elog_theta = dirichlet_expected_log(state.gamma);

    double value = log_gamma(K * alpha) - K * log_gamma(alpha) + (alpha - 1.0) * elog_theta.sum();
    for (int s = 0; s < doc.num_slots(); ++s) {
        const int term = doc.entries[s].term;
        double slot = 0.0;
        for (Eigen::Index i = 0; i < K; ++i) {
            const double p = state.phi(s, i);
            slot += p * (elog_theta[i] + elog_beta(i, term) - floored_log(p));
        }
        value += doc.entries[s].count * slot;
    }

    // E[log p(x | zbar)] with E[(eta . zbar)^2] = eta^T E[zbar zbar^T] eta
    const Vec phi_bar = state.phi_bar(doc);
    const Mat second = zbar_second_moment(doc, state.phi);
    const double expected_sq = state.v + state.m * state.m -
                               2.0 * state.m * eta.dot(phi_bar) + eta.dot(second * eta);
    value += -0.5 * std::log(2.0 * M_PI * sigma2) - expected_sq / (2.0 * sigma2);

    for (const auto& [r, y] : answers) {
        const double resid = y - state.m - bias[r];
        value += 0.5 * (std::log(precision[r]) - std::log(2.0 * M_PI)) -
                 0.5 * precision[r] * (state.v + resid * resid);
    }

    // Gaussian entropy of q(x)
    value += 0.5 * std::log(2.0 * M_PI * M_E * state.v);

    value -= log_gamma(state.gamma.sum());
    for (Eigen::Index i = 0; i < K; ++i) {
        value += log_gamma(state.gamma[i]) - (state.gamma[i] - 1.0) * elog_theta[i];
    }
    return value;
}

double elbo_r(const RegressionModel& model, const std::vector<RegDocState>& states,
              const Corpus& corpus, const RealAnnotations& ann) {
    const Mat elog_beta = model.expected_log_beta();
    double value = 0.0;
    for (int d = 0; d < corpus.num_docs(); ++d) {
        value += elbo_document_r(corpus.documents[d], ann.per_doc[d], states[d], model.eta,
                                 elog_beta, model.sigma2, model.bias, model.precision,
                                 model.hyper.alpha);
    }
    for (int k = 0; k < model.num_topics; ++k) {
        value += dirichlet_prior_entropy_terms(model.zeta.row(k).transpose(), model.hyper.tau,
                                               elog_beta.row(k).transpose());
    }
    return value;
}

// ---- fitting -------------------------------------------------------------------

namespace {

void validate_reg_inputs(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                         const Hyperparameters& hyper, double sigma2) {
    if (num_topics < 1) throw std::invalid_argument("number of topics must be >= 1");
    if (!(hyper.alpha > 0 && hyper.tau > 0)) {
        throw std::invalid_argument("hyperparameters must be positive");
    }
    if (!(sigma2 > 0)) throw std::invalid_argument("sigma2 must be positive");
    if (ann.num_docs != corpus.num_docs()) {
        throw std::invalid_argument("annotation and corpus document counts differ");
    }
    for (int d = 0; d < corpus.num_docs(); ++d) {
        if (ann.per_doc[d].empty()) {
            throw std::invalid_argument("training document " + std::to_string(d) +
                                        " has no annotations");
        }
    }
}

Mat reg_zeta_target(const Corpus& corpus, const std::vector<RegDocState>& states,
                    const std::vector<int>& doc_ids, double tau, double scale) {
    const auto K = states[doc_ids.front()].phi.cols();
    Mat accum = Mat::Zero(K, corpus.vocab_size());
    for (int d : doc_ids) {
        const Document& doc = corpus.documents[d];
        for (int s = 0; s < doc.num_slots(); ++s) {
            accum.col(doc.entries[s].term) +=
                doc.entries[s].count * states[d].phi.row(s).transpose();
        }
    }
    return (Mat::Constant(K, corpus.vocab_size(), tau) + scale * accum).eval();
}

// Closed-form M-step for eta, biases and precisions given the current local
// states. Annotators with a single answer keep their precision; annotators
// with no answers keep bias and precision.
void reg_mstep(RegressionModel& model, const Corpus& corpus, const RealAnnotations& ann,
               const std::vector<RegDocState>& states, const RegFitOptions& opts) {
    model.eta = solve_eta(corpus, states);
    std::vector<double> means(corpus.num_docs()), vars(corpus.num_docs());
    for (int d = 0; d < corpus.num_docs(); ++d) {
        means[d] = states[d].m;
        vars[d] = states[d].v;
    }
    for (int r = 0; r < ann.num_annotators; ++r) {
        const auto& answers = ann.per_annotator[r];
        if (answers.empty()) continue;
        model.bias[r] = estimate_bias(answers, means);
        if (answers.size() >= 2) {
            model.precision[r] = estimate_precision(answers, means, vars, model.bias[r],
                                                    opts.precision_floor, opts.precision_cap);
        }
    }
}

}  // namespace

RegressionModel init_reg_model(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                               const Hyperparameters& hyper, double sigma2, std::uint64_t seed) {
    RegressionModel model;
    model.num_topics = num_topics;
    model.vocab_size = corpus.vocab_size();
    model.num_annotators = ann.num_annotators;
    model.hyper = hyper;
    model.sigma2 = sigma2;
    model.eta = Vec::Zero(num_topics);
    model.bias = Vec::Zero(ann.num_annotators);
    model.precision = Vec::Ones(ann.num_annotators);
    model.annotator_ids.resize(ann.num_annotators);
    std::iota(model.annotator_ids.begin(), model.annotator_ids.end(), 0);

    auto rng = make_stream(seed, "init-zeta");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    model.zeta.resize(num_topics, corpus.vocab_size());
    for (int k = 0; k < num_topics; ++k) {
        for (int j = 0; j < corpus.vocab_size(); ++j) {
            model.zeta(k, j) = hyper.tau + unit(rng);
        }
    }
    return model;
}

RegFitResult fit_batch_r(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                         const Hyperparameters& hyper, double sigma2, const RegFitOptions& opts) {
    validate_reg_inputs(corpus, ann, num_topics, hyper, sigma2);

    RegFitResult result;
    result.model = init_reg_model(corpus, ann, num_topics, hyper, sigma2, opts.seed);
    RegressionModel& model = result.model;
    result.states.resize(corpus.num_docs());

    double prev = 0.0;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const Mat elog_beta = model.expected_log_beta();
        detail::parallel_for(corpus.num_docs(), opts.threads, [&](int d) {
            result.states[d] = estep_document_r(corpus.documents[d], ann.per_doc[d], model,
                                                elog_beta, opts.estep, opts.compat);
        });
        result.document_visits += corpus.num_docs();

        reg_mstep(model, corpus, ann, result.states, opts);
        std::vector<int> ids(corpus.num_docs());
        std::iota(ids.begin(), ids.end(), 0);
        model.zeta = reg_zeta_target(corpus, result.states, ids, hyper.tau, 1.0);

        const double current = elbo_r(model, result.states, corpus, ann);
        if (!std::isfinite(current)) {
            throw std::runtime_error("fit_batch_r: non-finite ELBO at iteration " +
                                     std::to_string(iter + 1));
        }
        result.elbo_trace.push_back(current);
        if (iter > 0 && std::fabs(current - prev) < opts.tol * std::fabs(prev)) break;
        prev = current;
    }
    return result;
}

RegFitResult fit_svi_r(const Corpus& corpus, const RealAnnotations& ann, int num_topics,
                       const Hyperparameters& hyper, double sigma2, const SviConfig& svi,
                       const RegFitOptions& opts) {
    validate_reg_inputs(corpus, ann, num_topics, hyper, sigma2);
    if (!(svi.kappa > 0.5 && svi.kappa <= 1.0)) {
        throw std::invalid_argument("kappa must lie in (0.5, 1]");
    }
    if (svi.delay < 0.0) throw std::invalid_argument("delay must be >= 0");
    if (svi.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

    const int num_docs = corpus.num_docs();
    RegFitResult result;
    result.model = init_reg_model(corpus, ann, num_topics, hyper, sigma2, svi.seed);
    RegressionModel& model = result.model;
    result.states.resize(num_docs);

    auto shuffle_rng = make_stream(svi.seed, "svi-shuffle");
    std::vector<int> order(num_docs);
    std::iota(order.begin(), order.end(), 0);

    long step = 0;
    for (int epoch = 0; epoch < svi.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (int start = 0; start < num_docs; start += svi.batch_size) {
            const int end = std::min(num_docs, start + svi.batch_size);
            std::vector<int> batch(order.begin() + start, order.begin() + end);
            std::sort(batch.begin(), batch.end());

            ++step;
            const double rho = std::pow(step + svi.delay, -svi.kappa);
            const double scale = static_cast<double>(num_docs) / batch.size();

            const Mat elog_beta = model.expected_log_beta();
            detail::parallel_for(static_cast<int>(batch.size()), opts.threads, [&](int i) {
                const int d = batch[i];
                result.states[d] = estep_document_r(corpus.documents[d], ann.per_doc[d], model,
                                                    elog_beta, opts.estep, opts.compat);
            });
            result.document_visits += static_cast<int>(batch.size());

            const Mat target = reg_zeta_target(corpus, result.states, batch, hyper.tau, scale);
            model.zeta = (1.0 - rho) * model.zeta + rho * target;

            if (svi.stochastic_annotator_updates) {
                // Blend each present annotator's bias/precision toward its
                // batch estimate with step rho.
                std::vector<double> means(num_docs, 0.0), vars(num_docs, 1.0);
                for (int d : batch) {
                    means[d] = result.states[d].m;
                    vars[d] = result.states[d].v;
                }
                std::vector<char> in_batch(num_docs, 0);
                for (int d : batch) in_batch[d] = 1;
                for (int r = 0; r < ann.num_annotators; ++r) {
                    std::vector<std::pair<int, double>> present;
                    for (const auto& [doc, y] : ann.per_annotator[r]) {
                        if (in_batch[doc]) present.emplace_back(doc, y);
                    }
                    if (present.empty()) continue;
                    const double b_hat = estimate_bias(present, means);
                    model.bias[r] = (1.0 - rho) * model.bias[r] + rho * b_hat;
                    if (present.size() >= 2) {
                        const double p_hat =
                            estimate_precision(present, means, vars, model.bias[r],
                                               opts.precision_floor, opts.precision_cap);
                        model.precision[r] = (1.0 - rho) * model.precision[r] + rho * p_hat;
                    }
                }
            }
        }

        // Every document was visited this epoch; run the closed-form M-step
        // on the latest local states, then record the full-data objective.
        reg_mstep(model, corpus, ann, result.states, opts);

        const Mat elog_beta_epoch = model.expected_log_beta();
        detail::parallel_for(num_docs, opts.threads, [&](int d) {
            result.states[d] = estep_document_r(corpus.documents[d], ann.per_doc[d], model,
                                                elog_beta_epoch, opts.estep, opts.compat);
        });
        const double current = elbo_r(model, result.states, corpus, ann);
        if (!std::isfinite(current)) {
            throw std::runtime_error("fit_svi_r: non-finite ELBO after epoch " +
                                     std::to_string(epoch + 1));
        }
        result.elbo_trace.push_back(current);
    }
    return result;
}

double predict_target(const Document& doc, const RegressionModel& model,
                      const EstepOptions& opts) {
    const HeldoutState state = infer_heldout(doc, model.expected_log_beta(), model.hyper.alpha,
                                             opts);
    return model.eta.dot(state.phi_bar(doc));
}

}  // namespace maslda

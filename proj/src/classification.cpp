#include "maslda/classification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "maslda/rng.hpp"
#include "parallel.hpp"

namespace maslda {

namespace {

constexpr double kProbFloor = 1e-300;    // floor before taking logs
constexpr double kFactorRebuild = -600;  // log word factor threshold for a full rebuild

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

// Dirichlet prior cross-entropy minus variational entropy for one row.
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

int argmax_lowest(const Vec& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace

Mat ClassificationModel::expected_log_beta() const {
    Mat out(num_topics, vocab_size);
    for (int k = 0; k < num_topics; ++k) {
        out.row(k) = dirichlet_expected_log(zeta.row(k).transpose()).transpose();
    }
    return out;
}

std::vector<Mat> ClassificationModel::expected_log_pi() const {
    std::vector<Mat> out(xi.size());
    for (std::size_t r = 0; r < xi.size(); ++r) {
        out[r].resize(num_classes, num_classes);
        for (int c = 0; c < num_classes; ++c) {
            out[r].row(c) = dirichlet_expected_log(xi[r].row(c).transpose()).transpose();
        }
    }
    return out;
}

Vec ClassDocState::phi_bar(const Document& doc) const {
    return weighted_phi_sum(doc, phi) / static_cast<double>(doc.total_tokens);
}

Vec HeldoutState::phi_bar(const Document& doc) const {
    return weighted_phi_sum(doc, phi) / static_cast<double>(doc.total_tokens);
}

Vec expected_log_pi_row(const Vec& xi_row) { return dirichlet_expected_log(xi_row); }

Vec update_gamma(const Document& doc, const Mat& phi, double alpha) {
    return Vec::Constant(phi.cols(), alpha) + weighted_phi_sum(doc, phi);
}

namespace {

Mat zeta_target(const Corpus& corpus, const std::vector<ClassDocState>& states,
                const std::vector<int>& doc_ids, double tau, double scale) {
    const auto K = states[doc_ids.front()].phi.cols();
    Mat accum = Mat::Zero(K, corpus.vocab_size());
    for (int d : doc_ids) {
        const Document& doc = corpus.documents[d];
        const Mat& phi = states[d].phi;
        for (int s = 0; s < doc.num_slots(); ++s) {
            accum.col(doc.entries[s].term) += doc.entries[s].count * phi.row(s).transpose();
        }
    }
    return (Mat::Constant(K, corpus.vocab_size(), tau) + scale * accum).eval();
}

// Confusion target for one annotator over the given subset of its documents
// (empty filter = all). Returns omega + scale * sum lambda_c y_l.
Mat xi_target(const ClassAnnotations& ann, const std::vector<ClassDocState>& states,
              int annotator, const std::vector<char>* in_batch, double omega, double scale) {
    const int C = ann.num_classes;
    Mat accum = Mat::Zero(C, C);
    for (const auto& [doc, label] : ann.per_annotator[annotator]) {
        if (in_batch != nullptr && !(*in_batch)[doc]) continue;
        accum.col(label) += states[doc].lambda;
    }
    return (Mat::Constant(C, C, omega) + scale * accum).eval();
}

}  // namespace

Mat update_zeta(const Corpus& corpus, const std::vector<ClassDocState>& states, double tau) {
    std::vector<int> ids(corpus.num_docs());
    std::iota(ids.begin(), ids.end(), 0);
    return zeta_target(corpus, states, ids, tau, 1.0);
}

std::vector<Mat> update_xi(const ClassAnnotations& ann, const std::vector<ClassDocState>& states,
                           double omega) {
    std::vector<Mat> xi(ann.num_annotators);
    for (int r = 0; r < ann.num_annotators; ++r) {
        xi[r] = xi_target(ann, states, r, nullptr, omega, 1.0);
    }
    return xi;
}

Vec update_lambda(const Vec& phi_bar, const Mat& eta,
                  const std::vector<std::pair<int, int>>& labels,
                  const std::vector<Mat>& elog_pi) {
    Vec scores = eta * phi_bar;
    for (const auto& [annotator, label] : labels) {
        scores += elog_pi[annotator].col(label);
    }
    return softmax_from_log(scores);
}

// ---- bounded softmax workspace ----------------------------------------------

SoftmaxBoundWorkspace::SoftmaxBoundWorkspace(const Document& doc, const Mat& eta)
    : doc_(&doc), eta_(&eta), inv_n_(1.0 / doc.total_tokens) {
    const auto C = eta.rows();
    shift_ = (eta * inv_n_).rowwise().maxCoeff();
    factors_ = ((eta * inv_n_).colwise() - shift_).array().exp();
    log_word_factor_.resize(C, doc.num_slots());
    log_b_prime_.resize(C);
}

void SoftmaxBoundWorkspace::rebuild(const Mat& phi) {
    log_b_prime_.setZero();
    for (int s = 0; s < doc_->num_slots(); ++s) {
        for (Eigen::Index l = 0; l < factors_.rows(); ++l) {
            const double lf = floored_log(factors_.row(l).dot(phi.row(s)));
            log_word_factor_(l, s) = lf;
            log_b_prime_[l] += doc_->entries[s].count * lf;
        }
    }
}

void SoftmaxBoundWorkspace::begin_sweep(const ClassDocState& state) {
    digamma_gamma_.resize(state.gamma.size());
    for (Eigen::Index i = 0; i < state.gamma.size(); ++i) {
        digamma_gamma_[i] = digamma(state.gamma[i]);
    }
    eta_lambda_ = (eta_->transpose() * state.lambda) * inv_n_;
}

double SoftmaxBoundWorkspace::update_phi_word(int slot, ClassDocState& state,
                                              const Mat& elog_beta) {
    const auto C = factors_.rows();
    const double n_tokens = doc_->total_tokens;
    const int term = doc_->entries[slot].term;

    // a_i = sum_l exp(eta_{l,i}/N) * prod_{tokens != one of slot} t_l, in a
    // shifted representation so the exp stays in range.
    Vec class_log_weight(C);
    for (Eigen::Index l = 0; l < C; ++l) {
        class_log_weight[l] = n_tokens * shift_[l] + log_b_prime_[l] - log_word_factor_(l, slot);
    }
    const double top = class_log_weight.maxCoeff();
    const Vec class_weight = (class_log_weight.array() - top).exp();
    const Vec a = factors_.transpose() * class_weight;
    const double epsilon = a.dot(state.phi.row(slot).transpose());

    Vec exponent = digamma_gamma_ + elog_beta.col(term) + eta_lambda_ - a / epsilon;
    if (!exponent.allFinite()) {
        throw std::runtime_error("update_phi_word: non-finite exponent at slot " +
                                 std::to_string(slot) + " (term " + std::to_string(term) + ")");
    }
    const Vec row = softmax_from_log(exponent);
    const double change = (row - state.phi.row(slot).transpose()).cwiseAbs().maxCoeff();
    state.phi.row(slot) = row.transpose();

    bool underflow = false;
    for (Eigen::Index l = 0; l < C; ++l) {
        const double lf = floored_log(factors_.row(l).dot(row));
        log_b_prime_[l] += doc_->entries[slot].count * (lf - log_word_factor_(l, slot));
        log_word_factor_(l, slot) = lf;
        underflow |= lf < kFactorRebuild;
    }
    if (underflow) rebuild(state.phi);
    return change;
}

double SoftmaxBoundWorkspace::log_sum_b() const {
    Vec log_b = log_b_prime_ + static_cast<double>(doc_->total_tokens) * shift_;
    return log_sum_exp(log_b);
}

// ---- local inference ---------------------------------------------------------

Vec initial_lambda(const std::vector<std::pair<int, int>>& labels, int num_classes) {
    Vec counts = Vec::Ones(num_classes);
    for (const auto& [annotator, label] : labels) counts[label] += 1.0;
    return counts / counts.sum();
}

ClassDocState estep_document(const Document& doc, const std::vector<std::pair<int, int>>& labels,
                             const ClassificationModel& model, const Mat& elog_beta,
                             const std::vector<Mat>& elog_pi, const EstepOptions& opts) {
    const int K = model.num_topics;
    ClassDocState state;
    state.phi = Mat::Constant(doc.num_slots(), K, 1.0 / K);
    state.gamma = update_gamma(doc, state.phi, model.hyper.alpha);
    state.lambda = initial_lambda(labels, model.num_classes);

    SoftmaxBoundWorkspace ws(doc, model.eta);
    ws.rebuild(state.phi);
    const double inv_n = 1.0 / doc.total_tokens;

    for (int it = 0; it < opts.max_inner; ++it) {
        double change = 0.0;
        ws.begin_sweep(state);
        for (int s = 0; s < doc.num_slots(); ++s) {
            change = std::max(change, ws.update_phi_word(s, state, elog_beta));
        }
        const Vec gamma_new = update_gamma(doc, state.phi, model.hyper.alpha);
        change = std::max(change, (gamma_new - state.gamma).cwiseAbs().maxCoeff());
        state.gamma = gamma_new;

        const Vec phi_bar = weighted_phi_sum(doc, state.phi) * inv_n;
        const Vec lambda_new = update_lambda(phi_bar, model.eta, labels, elog_pi);
        change = std::max(change, (lambda_new - state.lambda).cwiseAbs().maxCoeff());
        state.lambda = lambda_new;

        if (change < opts.tol) break;
    }
    return state;
}

ClassDocState estep_document(const Document& doc, const std::vector<std::pair<int, int>>& labels,
                             const ClassificationModel& model, const EstepOptions& opts) {
    return estep_document(doc, labels, model, model.expected_log_beta(), model.expected_log_pi(),
                          opts);
}

// ---- objective ----------------------------------------------------------------

double elbo_document(const Document& doc, const std::vector<std::pair<int, int>>& labels,
                     const ClassDocState& state, const Mat& eta, const Mat& elog_beta,
                     const std::vector<Mat>& elog_pi, double alpha) {
    const auto K = state.gamma.size();
    const Vec elog_theta = dirichlet_expected_log(state.gamma);

    double value = log_gamma(K * alpha) - K * log_gamma(alpha) + (alpha - 1.0) * elog_theta.sum();

    // topic assignments, word likelihood and q(z) entropy
    for (int s = 0; s < doc.num_slots(); ++s) {
        const int term = doc.entries[s].term;
        double slot = 0.0;
        for (Eigen::Index i = 0; i < K; ++i) {
            const double p = state.phi(s, i);
            slot += p * (elog_theta[i] + elog_beta(i, term) - floored_log(p));
        }
        value += doc.entries[s].count * slot;
    }

    // bounded response term
    const Vec phi_bar = state.phi_bar(doc);
    SoftmaxBoundWorkspace ws(doc, eta);
    ws.rebuild(state.phi);
    value += state.lambda.dot(eta * phi_bar) - ws.log_sum_b();

    // annotator labels and q(c) entropy
    for (const auto& [annotator, label] : labels) {
        value += state.lambda.dot(elog_pi[annotator].col(label));
    }
    for (Eigen::Index l = 0; l < state.lambda.size(); ++l) {
        value -= state.lambda[l] * floored_log(state.lambda[l]);
    }

    // -E[log q(theta)]
    value -= log_gamma(state.gamma.sum());
    for (Eigen::Index i = 0; i < K; ++i) {
        value += log_gamma(state.gamma[i]) - (state.gamma[i] - 1.0) * elog_theta[i];
    }
    return value;
}

double elbo(const ClassificationModel& model, const std::vector<ClassDocState>& states,
            const Corpus& corpus, const ClassAnnotations& ann) {
    const Mat elog_beta = model.expected_log_beta();
    const std::vector<Mat> elog_pi = model.expected_log_pi();

    double value = 0.0;
    for (int d = 0; d < corpus.num_docs(); ++d) {
        value += elbo_document(corpus.documents[d], ann.per_doc[d], states[d], model.eta,
                               elog_beta, elog_pi, model.hyper.alpha);
    }
    for (int k = 0; k < model.num_topics; ++k) {
        value += dirichlet_prior_entropy_terms(model.zeta.row(k).transpose(), model.hyper.tau,
                                               elog_beta.row(k).transpose());
    }
    for (int r = 0; r < model.num_annotators; ++r) {
        for (int c = 0; c < model.num_classes; ++c) {
            value += dirichlet_prior_entropy_terms(model.xi[r].row(c).transpose(),
                                                   model.hyper.omega,
                                                   elog_pi[r].row(c).transpose());
        }
    }
    return value;
}

ObjectiveEvaluation eta_objective(const Vec& eta_flat, int num_classes, int num_topics,
                                  const Corpus& corpus, const std::vector<ClassDocState>& states) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> eta(eta_flat.data(), num_classes, num_topics);

    double value = 0.0;
    RowMat grad = RowMat::Zero(num_classes, num_topics);

    Mat factors(num_classes, num_topics);
    Vec log_b(num_classes);
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const Document& doc = corpus.documents[d];
        const Mat& phi = states[d].phi;
        const double inv_n = 1.0 / doc.total_tokens;
        const Vec phi_bar = states[d].phi_bar(doc);

        const Vec shift = (eta * inv_n).rowwise().maxCoeff();
        factors = ((eta * inv_n).colwise() - shift).array().exp();

        Mat tprime(doc.num_slots(), num_classes);
        for (int l = 0; l < num_classes; ++l) {
            double acc = doc.total_tokens * shift[l];
            for (int s = 0; s < doc.num_slots(); ++s) {
                const double t = std::max(factors.row(l).dot(phi.row(s)), kProbFloor);
                tprime(s, l) = t;
                acc += doc.entries[s].count * std::log(t);
            }
            log_b[l] = acc;
        }
        const double lse = log_sum_exp(log_b);

        value += states[d].lambda.dot(eta * phi_bar) - lse;
        for (int l = 0; l < num_classes; ++l) {
            grad.row(l) += states[d].lambda[l] * phi_bar.transpose();
            const double ratio = std::exp(log_b[l] - lse);
            for (int s = 0; s < doc.num_slots(); ++s) {
                const double coef = ratio * doc.entries[s].count * inv_n / tprime(s, l);
                grad.row(l) -=
                    coef * phi.row(s).cwiseProduct(factors.row(l));
            }
        }
    }

    ObjectiveEvaluation ev;
    ev.value = value;
    ev.gradient = Eigen::Map<const Vec>(grad.data(), grad.size());
    return ev;
}

// ---- fitting -------------------------------------------------------------------

namespace {

void validate_class_inputs(const Corpus& corpus, const ClassAnnotations& ann, int num_topics,
                           const Hyperparameters& hyper) {
    if (num_topics < 1) throw std::invalid_argument("number of topics must be >= 1");
    if (!(hyper.alpha > 0 && hyper.tau > 0 && hyper.omega > 0)) {
        throw std::invalid_argument("hyperparameters must be positive");
    }
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

Vec flatten_rowmajor(const Mat& m) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat rm = m;
    return Eigen::Map<const Vec>(rm.data(), rm.size());
}

Mat unflatten_rowmajor(const Vec& v, int rows, int cols) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMat>(v.data(), rows, cols);
}

Mat maximize_eta(const Mat& eta0, const Corpus& corpus, const std::vector<ClassDocState>& states,
                 int num_classes, int num_topics, const MinimizeOptions& opts) {
    auto objective = [&](const Vec& x) {
        ObjectiveEvaluation ev = eta_objective(x, num_classes, num_topics, corpus, states);
        ev.value = -ev.value;
        ev.gradient = -ev.gradient;
        return ev;
    };
    const Vec solution = minimize(objective, flatten_rowmajor(eta0), opts);
    return unflatten_rowmajor(solution, num_classes, num_topics);
}

}  // namespace

ClassificationModel init_class_model(const Corpus& corpus, const ClassAnnotations& ann,
                                     int num_topics, const Hyperparameters& hyper,
                                     std::uint64_t seed) {
    ClassificationModel model;
    model.num_topics = num_topics;
    model.num_classes = ann.num_classes;
    model.vocab_size = corpus.vocab_size();
    model.num_annotators = ann.num_annotators;
    model.hyper = hyper;
    model.eta = Mat::Zero(ann.num_classes, num_topics);
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

    // xi from the smoothed label votes
    std::vector<ClassDocState> vote_states(corpus.num_docs());
    for (int d = 0; d < corpus.num_docs(); ++d) {
        vote_states[d].lambda = initial_lambda(ann.per_doc[d], ann.num_classes);
    }
    model.xi = update_xi(ann, vote_states, hyper.omega);
    return model;
}

ClassFitResult fit_batch(const Corpus& corpus, const ClassAnnotations& ann, int num_topics,
                         const Hyperparameters& hyper, const ClassFitOptions& opts) {
    validate_class_inputs(corpus, ann, num_topics, hyper);

    ClassFitResult result;
    result.model = init_class_model(corpus, ann, num_topics, hyper, opts.seed);
    ClassificationModel& model = result.model;
    result.states.resize(corpus.num_docs());

    double prev = 0.0;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const Mat elog_beta = model.expected_log_beta();
        const std::vector<Mat> elog_pi = model.expected_log_pi();
        detail::parallel_for(corpus.num_docs(), opts.threads, [&](int d) {
            result.states[d] = estep_document(corpus.documents[d], ann.per_doc[d], model,
                                              elog_beta, elog_pi, opts.estep);
        });
        result.document_visits += corpus.num_docs();

        model.zeta = update_zeta(corpus, result.states, hyper.tau);
        model.xi = update_xi(ann, result.states, hyper.omega);
        model.eta = maximize_eta(model.eta, corpus, result.states, model.num_classes,
                                 model.num_topics, opts.eta_search);

        const double current = elbo(model, result.states, corpus, ann);
        if (!std::isfinite(current)) {
            throw std::runtime_error("fit_batch: non-finite ELBO at iteration " +
                                     std::to_string(iter + 1));
        }
        result.elbo_trace.push_back(current);
        if (iter > 0 && std::fabs(current - prev) < opts.tol * std::fabs(prev)) break;
        prev = current;
    }
    return result;
}

ClassFitResult fit_svi(const Corpus& corpus, const ClassAnnotations& ann, int num_topics,
                       const Hyperparameters& hyper, const SviConfig& svi,
                       const ClassFitOptions& opts) {
    validate_class_inputs(corpus, ann, num_topics, hyper);
    if (!(svi.kappa > 0.5 && svi.kappa <= 1.0)) {
        throw std::invalid_argument("kappa must lie in (0.5, 1]");
    }
    if (svi.delay < 0.0) throw std::invalid_argument("delay must be >= 0");
    if (svi.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

    const int num_docs = corpus.num_docs();
    ClassFitResult result;
    result.model = init_class_model(corpus, ann, num_topics, hyper, svi.seed);
    ClassificationModel& model = result.model;
    result.states.resize(num_docs);

    auto shuffle_rng = make_stream(svi.seed, "svi-shuffle");
    std::vector<int> order(num_docs);
    std::iota(order.begin(), order.end(), 0);
    std::vector<char> in_batch(num_docs, 0);

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
            const std::vector<Mat> elog_pi = model.expected_log_pi();
            detail::parallel_for(static_cast<int>(batch.size()), opts.threads, [&](int i) {
                const int d = batch[i];
                result.states[d] = estep_document(corpus.documents[d], ann.per_doc[d], model,
                                                  elog_beta, elog_pi, opts.estep);
            });
            result.document_visits += static_cast<int>(batch.size());

            const Mat target = zeta_target(corpus, result.states, batch, hyper.tau, scale);
            model.zeta = (1.0 - rho) * model.zeta + rho * target;

            for (int d : batch) in_batch[d] = 1;
            for (int r = 0; r < ann.num_annotators; ++r) {
                bool present = false;
                for (const auto& [doc, label] : ann.per_annotator[r]) {
                    if (in_batch[doc]) {
                        present = true;
                        break;
                    }
                }
                if (!present) continue;  // absent annotators keep their current state
                const Mat xi_t = xi_target(ann, result.states, r, &in_batch, hyper.omega, scale);
                model.xi[r] = (1.0 - rho) * model.xi[r] + rho * xi_t;
            }
            for (int d : batch) in_batch[d] = 0;
        }

        // Every document was visited this epoch; refresh eta from the latest
        // local states, then record the full-data objective.
        model.eta = maximize_eta(model.eta, corpus, result.states, model.num_classes,
                                 model.num_topics, opts.eta_search);

        const Mat elog_beta = model.expected_log_beta();
        const std::vector<Mat> elog_pi = model.expected_log_pi();
        detail::parallel_for(num_docs, opts.threads, [&](int d) {
            result.states[d] = estep_document(corpus.documents[d], ann.per_doc[d], model,
                                              elog_beta, elog_pi, opts.estep);
        });
        const double current = elbo(model, result.states, corpus, ann);
        if (!std::isfinite(current)) {
            throw std::runtime_error("fit_svi: non-finite ELBO after epoch " +
                                     std::to_string(epoch + 1));
        }
        result.elbo_trace.push_back(current);
    }
    return result;
}

HeldoutState infer_heldout(const Document& doc, const Mat& elog_beta, double alpha,
                           const EstepOptions& opts) {
    const auto K = elog_beta.rows();
    HeldoutState state;
    state.phi = Mat::Constant(doc.num_slots(), K, 1.0 / K);
    state.gamma = update_gamma(doc, state.phi, alpha);

    Vec digamma_gamma(K);
    for (int it = 0; it < opts.max_inner; ++it) {
        double change = 0.0;
        for (Eigen::Index i = 0; i < K; ++i) digamma_gamma[i] = digamma(state.gamma[i]);
        for (int s = 0; s < doc.num_slots(); ++s) {
            const Vec row = softmax_from_log(digamma_gamma + elog_beta.col(doc.entries[s].term));
            change = std::max(change, (row - state.phi.row(s).transpose()).cwiseAbs().maxCoeff());
            state.phi.row(s) = row.transpose();
        }
        const Vec gamma_new = update_gamma(doc, state.phi, alpha);
        change = std::max(change, (gamma_new - state.gamma).cwiseAbs().maxCoeff());
        state.gamma = gamma_new;
        if (change < opts.tol) break;
    }
    return state;
}

HeldoutState infer_heldout(const Document& doc, const ClassificationModel& model,
                           const EstepOptions& opts) {
    return infer_heldout(doc, model.expected_log_beta(), model.hyper.alpha, opts);
}

ClassPrediction predict_class(const Document& doc, const ClassificationModel& model,
                              const EstepOptions& opts) {
    const HeldoutState state = infer_heldout(doc, model, opts);
    ClassPrediction pred;
    pred.scores = model.eta * state.phi_bar(doc);
    pred.label = argmax_lowest(pred.scores);
    return pred;
}

}  // namespace maslda

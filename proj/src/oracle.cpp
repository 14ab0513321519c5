#include "maslda/oracle.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace maslda {

namespace {

constexpr double kEnumerationBudget = 1e6;

std::vector<int> expand_tokens(const Document& doc) {
    std::vector<int> tokens;
    tokens.reserve(doc.total_tokens);
    for (const auto& e : doc.entries) {
        for (int i = 0; i < e.count; ++i) tokens.push_back(e.term);
    }
    return tokens;
}

void check_budget(int num_topics, int num_tokens, int num_classes) {
    double states = std::max(1, num_classes);
    for (int i = 0; i < num_tokens; ++i) {
        states *= num_topics;
        if (states > kEnumerationBudget) {
            throw std::runtime_error("oracle: enumeration budget exceeded");
        }
    }
}

// log Dirichlet-multinomial mass of one assignment sequence with the given
// per-topic counts: B(alpha + n) / B(alpha).
double log_polya_sequence(const std::vector<int>& counts, double alpha) {
    const auto K = static_cast<double>(counts.size());
    const int total = std::accumulate(counts.begin(), counts.end(), 0);
    double value = log_gamma(K * alpha) - log_gamma(K * alpha + total);
    for (int n_k : counts) value += log_gamma(alpha + n_k) - log_gamma(alpha);
    return value;
}

// Iterates every topic-assignment sequence; visit receives the per-topic
// counts and the word log-likelihood of the sequence.
void for_each_assignment(const std::vector<int>& tokens, const Mat& log_beta,
                         const std::function<void(const std::vector<int>&, double)>& visit) {
    const int K = static_cast<int>(log_beta.rows());
    const int N = static_cast<int>(tokens.size());
    std::vector<int> assignment(N, 0);
    std::vector<int> counts(K, 0);
    counts[0] = N;
    double word_ll = 0.0;
    for (int n = 0; n < N; ++n) word_ll += log_beta(0, tokens[n]);

    while (true) {
        visit(counts, word_ll);
        int pos = N - 1;
        while (pos >= 0) {
            const int z = assignment[pos];
            word_ll -= log_beta(z, tokens[pos]);
            --counts[z];
            if (z + 1 < K) {
                assignment[pos] = z + 1;
                ++counts[z + 1];
                word_ll += log_beta(z + 1, tokens[pos]);
                break;
            }
            assignment[pos] = 0;
            ++counts[0];
            word_ll += log_beta(0, tokens[pos]);
            --pos;
        }
        if (pos < 0) return;
    }
}

Vec zbar_from_counts(const std::vector<int>& counts, int total) {
    Vec zbar(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        zbar[k] = static_cast<double>(counts[k]) / total;
    }
    return zbar;
}

// log integral N(x | mu0, v0) * prod_r N(z_r | x, v_r) dx via sequential
// conditioning.
double log_gaussian_marginal(double mu0, double v0, const std::vector<double>& obs,
                             const std::vector<double>& obs_var) {
    double mean = mu0;
    double var = v0;
    double value = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double pred_var = var + obs_var[i];
        const double resid = obs[i] - mean;
        value += -0.5 * std::log(2.0 * M_PI * pred_var) - 0.5 * resid * resid / pred_var;
        const double gain = var / pred_var;
        mean += gain * resid;
        var *= 1.0 - gain;
    }
    return value;
}

}  // namespace

double exact_log_evidence_class(const Document& doc,
                                const std::vector<std::pair<int, int>>& labels,
                                const Mat& log_beta, const std::vector<Mat>& log_pi,
                                const Mat& eta, double alpha) {
    const std::vector<int> tokens = expand_tokens(doc);
    const int K = static_cast<int>(log_beta.rows());
    const int C = static_cast<int>(eta.rows());
    check_budget(K, static_cast<int>(tokens.size()), C);

    std::vector<double> per_assignment;
    for_each_assignment(tokens, log_beta, [&](const std::vector<int>& counts, double word_ll) {
        const Vec zbar = zbar_from_counts(counts, doc.total_tokens);
        Vec class_term = eta * zbar;
        class_term.array() -= log_sum_exp(class_term);  // log softmax
        for (const auto& [annotator, label] : labels) {
            class_term += log_pi[annotator].col(label);
        }
        per_assignment.push_back(log_polya_sequence(counts, alpha) + word_ll +
                                 log_sum_exp(class_term));
    });
    return log_sum_exp(per_assignment);
}

double exact_log_evidence_reg(const Document& doc,
                              const std::vector<std::pair<int, double>>& answers,
                              const Mat& log_beta, const Vec& eta, double sigma2,
                              const Vec& bias, const Vec& precision, double alpha) {
    const std::vector<int> tokens = expand_tokens(doc);
    const int K = static_cast<int>(log_beta.rows());
    check_budget(K, static_cast<int>(tokens.size()), 1);

    std::vector<double> obs, obs_var;
    for (const auto& [annotator, value] : answers) {
        obs.push_back(value - bias[annotator]);
        obs_var.push_back(1.0 / precision[annotator]);
    }

    std::vector<double> per_assignment;
    for_each_assignment(tokens, log_beta, [&](const std::vector<int>& counts, double word_ll) {
        const Vec zbar = zbar_from_counts(counts, doc.total_tokens);
        per_assignment.push_back(log_polya_sequence(counts, alpha) + word_ll +
                                 log_gaussian_marginal(eta.dot(zbar), sigma2, obs, obs_var));
    });
    return log_sum_exp(per_assignment);
}

int exact_map_class(const Document& doc, const Mat& log_beta, const Mat& eta, double alpha) {
    const std::vector<int> tokens = expand_tokens(doc);
    const int K = static_cast<int>(log_beta.rows());
    const int C = static_cast<int>(eta.rows());
    check_budget(K, static_cast<int>(tokens.size()), C);

    std::vector<std::vector<double>> per_class(C);
    for_each_assignment(tokens, log_beta, [&](const std::vector<int>& counts, double word_ll) {
        const Vec zbar = zbar_from_counts(counts, doc.total_tokens);
        Vec class_term = eta * zbar;
        class_term.array() -= log_sum_exp(class_term);
        const double base = log_polya_sequence(counts, alpha) + word_ll;
        for (int c = 0; c < C; ++c) per_class[c].push_back(base + class_term[c]);
    });

    int best = 0;
    double best_value = log_sum_exp(per_class[0]);
    for (int c = 1; c < C; ++c) {
        const double value = log_sum_exp(per_class[c]);
        if (value > best_value) {
            best = c;
            best_value = value;
        }
    }
    return best;
}

}  // namespace maslda

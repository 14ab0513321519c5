#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>

namespace maslda {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Digamma function Psi(x) = d/dx log Gamma(x), x > 0.
// Upward recurrence into the asymptotic regime, then the standard series in
// 1/x^2; accurate to ~1e-12 relative over [0.05, 1e4].
double digamma(double x);

// log Gamma(x), x > 0.
double log_gamma(double x);

// Overflow-free log(sum_i exp(v_i)); v must be nonempty.
double log_sum_exp(std::span<const double> v);
double log_sum_exp(const Vec& v);

// E[log p_i] under Dirichlet(params): Psi(params_i) - Psi(sum params).
Vec dirichlet_expected_log(const Vec& params);

struct ObjectiveEvaluation {
    double value = 0.0;
    Vec gradient;
};

using Objective = std::function<ObjectiveEvaluation(const Vec&)>;

struct MinimizeOptions {
    int max_iter = 100;
    double grad_tol = 1e-5;   // stop when ||grad||_2 <= grad_tol
    int history = 10;         // L-BFGS memory
};

// Unconstrained minimization by L-BFGS with a strong-Wolfe line search.
// Deterministic; the final value never exceeds the initial one. Throws
// std::runtime_error if the objective turns non-finite during a line search.
Vec minimize(const Objective& objective, const Vec& x0, const MinimizeOptions& opts = {});

// Worst per-coordinate relative error between the analytic gradient and
// central finite differences with step h.
double check_gradient(const Objective& objective, const Vec& x, double h = 1e-5);

}  // namespace maslda

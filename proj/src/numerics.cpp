#include "maslda/numerics.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace maslda {

double digamma(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("digamma: argument must be positive, got " + std::to_string(x));
    }
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    // Psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    const double inv = 1.0 / x;
    const double t = inv * inv;
    const double correction =
        t * (1.0 / 12.0 -
        t * (1.0 / 120.0 -
        t * (1.0 / 252.0 -
        t * (1.0 / 240.0 -
        t * (1.0 / 132.0 -
        t * (691.0 / 32760.0 -
        t * (1.0 / 12.0)))))));
    return result + std::log(x) - 0.5 * inv - correction;
}

double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("log_gamma: argument must be positive, got " + std::to_string(x));
    }
    return std::lgamma(x);
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) {
        throw std::invalid_argument("log_sum_exp: empty input");
    }
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

double log_sum_exp(const Vec& v) {
    return log_sum_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Vec dirichlet_expected_log(const Vec& params) {
    const double psi_total = digamma(params.sum());
    Vec out(params.size());
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        out[i] = digamma(params[i]) - psi_total;
    }
    return out;
}

namespace {

constexpr double kWolfeC1 = 1e-4;
constexpr double kWolfeC2 = 0.9;

struct LinePoint {
    double alpha;
    double f;
    double slope;  // directional derivative at alpha
    Vec x;
    Vec grad;
};

// Evaluates the objective along x0 + alpha*dir; non-finite values are
// reported to the caller rather than thrown, so the search can back off.
LinePoint eval_line(const Objective& objective, const Vec& x0, const Vec& dir, double alpha) {
    LinePoint p;
    p.alpha = alpha;
    p.x = x0 + alpha * dir;
    ObjectiveEvaluation ev = objective(p.x);
    p.f = ev.value;
    p.grad = std::move(ev.gradient);
    p.slope = p.grad.size() == dir.size() ? p.grad.dot(dir) : std::numeric_limits<double>::quiet_NaN();
    return p;
}

bool finite_point(const LinePoint& p) {
    return std::isfinite(p.f) && std::isfinite(p.slope);
}

// Strong-Wolfe line search (bracket + zoom with bisection safeguard).
// Returns the accepted point, or nothing when the objective is finite but so
// flat along the direction that no representable decrease exists (the caller
// treats that as convergence). Throws only when the objective is non-finite
// arbitrarily close to the current point.
std::optional<LinePoint> line_search(const Objective& objective, const Vec& x0, const Vec& dir,
                                     double f0, double slope0) {
    LinePoint lo;
    lo.alpha = 0.0;
    lo.f = f0;
    lo.slope = slope0;

    auto armijo_ok = [&](const LinePoint& p) {
        return p.f <= f0 + kWolfeC1 * p.alpha * slope0;
    };
    auto wolfe_ok = [&](const LinePoint& p) {
        return armijo_ok(p) && std::fabs(p.slope) <= kWolfeC2 * std::fabs(slope0);
    };

    auto zoom = [&](LinePoint a_lo, LinePoint a_hi) -> std::optional<LinePoint> {
        for (int j = 0; j < 60; ++j) {
            const double alpha = 0.5 * (a_lo.alpha + a_hi.alpha);
            LinePoint p = eval_line(objective, x0, dir, alpha);
            if (!finite_point(p) || !armijo_ok(p) || p.f >= a_lo.f) {
                a_hi = std::move(p);
                continue;
            }
            if (wolfe_ok(p)) return p;
            if (p.slope * (a_hi.alpha - a_lo.alpha) >= 0) a_hi = a_lo;
            a_lo = std::move(p);
        }
        if (a_lo.alpha > 0.0 && finite_point(a_lo)) return a_lo;  // Armijo point
        return std::nullopt;  // flat to rounding along this direction
    };

    double alpha = 1.0;
    LinePoint prev = lo;
    for (int i = 0; i < 60; ++i) {
        LinePoint p = eval_line(objective, x0, dir, alpha);
        if (!finite_point(p)) {
            // Step overshot into a non-finite region; bisect back toward prev.
            if (alpha < 1e-20) {
                throw std::runtime_error(
                    "minimize: objective non-finite during line search (alpha=" + std::to_string(alpha) + ")");
            }
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if (!armijo_ok(p) || (i > 0 && p.f >= prev.f)) return zoom(prev, std::move(p));
        if (wolfe_ok(p)) return p;
        if (p.slope >= 0) return zoom(std::move(p), prev);
        prev = std::move(p);
        alpha *= 2.0;
    }
    if (prev.alpha > 0.0) return prev;
    return std::nullopt;
}

}  // namespace

Vec minimize(const Objective& objective, const Vec& x0, const MinimizeOptions& opts) {
    Vec x = x0;
    if (opts.max_iter <= 0) return x;

    ObjectiveEvaluation ev = objective(x);
    if (!std::isfinite(ev.value)) {
        throw std::invalid_argument("minimize: objective non-finite at the starting point");
    }
    double f = ev.value;
    Vec grad = ev.gradient;

    std::deque<Vec> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (grad.norm() <= opts.grad_tol) break;

        // Two-loop recursion for the search direction.
        Vec q = grad;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> a_coef(m);
        for (int i = m - 1; i >= 0; --i) {
            a_coef[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= a_coef[i] * y_hist[i];
        }
        if (m > 0) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (int i = 0; i < m; ++i) {
            const double b = rho_hist[i] * y_hist[i].dot(q);
            q += (a_coef[i] - b) * s_hist[i];
        }
        Vec dir = -q;

        double slope = grad.dot(dir);
        if (!(slope < 0)) {  // not a descent direction; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -grad;
            slope = grad.dot(dir);
            if (!(slope < 0)) break;  // gradient numerically zero
        }

        std::optional<LinePoint> found = line_search(objective, x, dir, f, slope);
        if (!found) break;  // flat to rounding: converged
        LinePoint accepted = std::move(*found);

        Vec s = accepted.x - x;
        Vec y = accepted.grad - grad;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = std::move(accepted.x);
        f = accepted.f;
        grad = std::move(accepted.grad);
    }
    return x;
}

double check_gradient(const Objective& objective, const Vec& x, double h) {
    const Vec analytic = objective(x).gradient;
    double worst = 0.0;
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double fp = objective(xp).value;
        xp[i] = x[i] - h;
        const double fm = objective(xp).value;
        xp[i] = x[i];
        const double numeric = (fp - fm) / (2.0 * h);
        const double denom = std::max({1.0, std::fabs(numeric), std::fabs(analytic[i])});
        worst = std::max(worst, std::fabs(numeric - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace maslda

// fit.hpp — Regression and series analysis: linear and logistic fits,
// peak detection, numerical derivative, steady-state extraction.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dopoqb {

enum class FitKind { linear, logistic };

struct FitResult {
    FitKind kind;
    std::vector<double> params;  // linear: slope, intercept; logistic: A, k, x0
    double r = 0.0;              // correlation coefficient
    double residual_rms = 0.0;
    bool degenerate = false;     // set when r is undefined (constant y)
};

/// Raised when an iterative fit fails to converge; carries the best
/// parameters reached.
struct FitError : std::runtime_error {
    FitResult best;
    FitError(const std::string& what, FitResult b) : std::runtime_error(what), best(std::move(b)) {}
};

/// Raised when a series has not settled to a steady value; carries the
/// relative variation observed over the trailing window.
struct NotConvergedError : std::runtime_error {
    double variation;
    NotConvergedError(const std::string& what, double v) : std::runtime_error(what), variation(v) {}
};

struct Peak {
    double x;
    double y;
    std::size_t index;
    bool is_boundary;  // no strict interior maximum; global max reported
};

/// Ordinary least squares y = slope*x + intercept with Pearson correlation.
inline FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("linear_fit: series lengths differ");
    if (n < 3) throw std::invalid_argument("linear_fit: need at least 3 points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");

    FitResult res;
    res.kind = FitKind::linear;
    const double slope = sxy / sxx;
    res.params = {slope, my - slope * mx};
    if (syy > 0.0) {
        res.r = sxy / std::sqrt(sxx * syy);
    } else {
        res.r = 0.0;
        res.degenerate = true;
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = y[i] - (res.params[0] * x[i] + res.params[1]);
        rss += d * d;
    }
    res.residual_rms = std::sqrt(rss / double(n));
    return res;
}

namespace detail {

inline double logistic(double x, double a, double k, double x0) {
    return a / (1.0 + std::exp(-k * (x - x0)));
}

inline double logistic_rss(const std::vector<double>& x, const std::vector<double>& y,
                           double a, double k, double x0) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = logistic(x[i], a, k, x0) - y[i];
        rss += d * d;
    }
    return rss;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace detail

/// Fit y = A / (1 + exp[-k (x - x0)]) by residual-sum-of-squares
/// minimization: derivative-free grid seeding over (k, x0) with the optimal
/// A solved linearly, then damped Gauss–Newton refinement.
inline FitResult logistic_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("logistic_fit: series lengths differ");
    if (n < 5) throw std::invalid_argument("logistic_fit: need at least 5 points");
    for (double v : y)
        if (v < 0.0) throw std::invalid_argument("logistic_fit: y must be nonnegative");

    const double xmin = *std::min_element(x.begin(), x.end());
    const double xmax = *std::max_element(x.begin(), x.end());
    const double xspan = xmax > xmin ? xmax - xmin : 1.0;

    // Grid seed: both signs of k, x0 across the data span.
    double best_a = 0.0, best_k = 1.0, best_x0 = 0.5 * (xmin + xmax);
    double best_rss = std::numeric_limits<double>::infinity();
    for (double kmag : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        for (int sign = -1; sign <= 1; sign += 2) {
            const double k = sign * kmag / xspan * 2.0;
            for (int j = 0; j <= 16; ++j) {
                const double x0 = xmin + xspan * double(j) / 16.0;
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double s = 1.0 / (1.0 + std::exp(-k * (x[i] - x0)));
                    num += y[i] * s;
                    den += s * s;
                }
                const double a = den > 0.0 ? num / den : 0.0;
                const double rss = detail::logistic_rss(x, y, a, k, x0);
                if (rss < best_rss) {
                    best_rss = rss;
                    best_a = a;
                    best_k = k;
                    best_x0 = x0;
                }
            }
        }
    }

    // Damped Gauss–Newton on (A, k, x0).
    Eigen::Vector3d p(best_a, best_k, best_x0);
    double rss = best_rss;
    bool converged = false;
    const int max_iter = 200;
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::MatrixXd J(n, 3);
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = 1.0 / (1.0 + std::exp(-p(1) * (x[i] - p(2))));
            J(i, 0) = s;
            J(i, 1) = p(0) * s * (1.0 - s) * (x[i] - p(2));
            J(i, 2) = -p(0) * s * (1.0 - s) * p(1);
            r(i) = p(0) * s - y[i];
        }
        Eigen::Matrix3d jtj = J.transpose() * J;
        jtj.diagonal().array() += 1e-12 * jtj.trace();
        const Eigen::Vector3d step = jtj.ldlt().solve(-J.transpose() * r);

        double alpha = 1.0;
        Eigen::Vector3d pn = p;
        double rss_n = rss;
        for (int h = 0; h < 30; ++h) {
            pn = p + alpha * step;
            rss_n = detail::logistic_rss(x, y, pn(0), pn(1), pn(2));
            if (rss_n <= rss) break;
            alpha *= 0.5;
        }
        const double rel = (pn - p).cwiseAbs().maxCoeff() /
                           std::max(1e-300, p.cwiseAbs().maxCoeff());
        p = pn;
        rss = rss_n;
        if (rel < 1e-10) {
            converged = true;
            break;
        }
    }

    FitResult res;
    res.kind = FitKind::logistic;
    res.params = {p(0), p(1), p(2)};
    res.residual_rms = std::sqrt(rss / double(n));
    std::vector<double> fitted(n);
    for (std::size_t i = 0; i < n; ++i) fitted[i] = detail::logistic(x[i], p(0), p(1), p(2));
    res.r = detail::pearson(y, fitted);
    if (!converged) throw FitError("logistic_fit: no convergence after 200 iterations", res);
    return res;
}

/// First strict local maximum (y[i-1] < y[i] >= y[i+1]); falls back to the
/// boundary-flagged global maximum when none exists.
inline Peak peak(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("peak: series lengths differ");
    if (x.size() < 3) throw std::invalid_argument("peak: need at least 3 points");
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i - 1] < y[i] && y[i] >= y[i + 1]) return {x[i], y[i], i, false};
    const std::size_t imax =
        std::distance(y.begin(), std::max_element(y.begin(), y.end()));
    return {x[imax], y[imax], imax, true};
}

/// Central differences on the interior, one-sided at the ends.
inline std::vector<double> derivative(const std::vector<double>& x,
                                      const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("derivative: series lengths differ");
    if (n < 3) throw std::invalid_argument("derivative: need at least 3 points");
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] <= x[i - 1]) throw std::invalid_argument("derivative: x must be strictly increasing");
    std::vector<double> d(n);
    d[0] = (y[1] - y[0]) / (x[1] - x[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    return d;
}

/// Mean of y over the trailing `window`, accepted only if the relative
/// variation (max - min)/|mean| over that window stays below `tol`.
inline double steady_value(const std::vector<double>& t, const std::vector<double>& y,
                           double window, double tol) {
    const std::size_t n = t.size();
    if (n != y.size()) throw std::invalid_argument("steady_value: series lengths differ");
    if (n < 2) throw std::invalid_argument("steady_value: need at least 2 points");
    if (window <= 0.0) throw std::invalid_argument("steady_value: window must be positive");
    const double span = t.back() - t.front();
    if (span < 2.0 * window)
        throw std::invalid_argument("steady_value: series must span at least twice the window");

    const double t0 = t.back() - window;
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] < t0) continue;
        sum += y[i];
        lo = std::min(lo, y[i]);
        hi = std::max(hi, y[i]);
        ++count;
    }
    const double mean = sum / double(count);
    const double variation = (hi - lo) / std::max(std::abs(mean), 1e-300);
    if (variation >= tol)
        throw NotConvergedError("steady_value: trailing-window variation " +
                                    std::to_string(variation) + " exceeds tolerance",
                                variation);
    return mean;
}

}  // namespace dopoqb

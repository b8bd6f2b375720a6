#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

Vec solve(Mat a, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) throw std::runtime_error("singular system");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vec irls_logistic(const Mat& x, const Vec& y, double l2, int max_iter) {
    const std::size_t n = x.size(), d = x.front().size();
    Vec theta(d + 1, 0.0);  // last entry is the intercept
    for (int it = 0; it < max_iter; ++it) {
        Vec grad(d + 1, 0.0);
        Mat hess(d + 1, Vec(d + 1, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            double z = theta[d];
            for (std::size_t j = 0; j < d; ++j) z += theta[j] * x[i][j];
            const double p = sigmoid(z);
            const double w = p * (1 - p);
            for (std::size_t j = 0; j <= d; ++j) {
                const double xj = j < d ? x[i][j] : 1.0;
                grad[j] += (p - y[i]) * xj / n;
                for (std::size_t k = 0; k <= d; ++k) {
                    const double xk = k < d ? x[i][k] : 1.0;
                    hess[j][k] += w * xj * xk / n;
                }
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] += 2 * l2 * theta[j];
            hess[j][j] += 2 * l2;
        }
        const Vec step = solve(hess, grad);
        double norm = 0;
        for (std::size_t j = 0; j <= d; ++j) {
            theta[j] -= step[j];
            norm += step[j] * step[j];
        }
        if (std::sqrt(norm) < 1e-14) break;
    }
    return theta;
}

Vec gd_ridge(const Mat& x, const Vec& y, double lambda, double tol, long max_iter) {
    const std::size_t n = x.size(), d = x.front().size();
    // Lipschitz bound of the gradient: 2 * (trace of the augmented Gram) + 2 lambda.
    double trace = static_cast<double>(n);
    for (const auto& row : x) {
        for (double v : row) trace += v * v;
    }
    const double step = 1.0 / (2 * trace + 2 * lambda);
    Vec theta(d + 1, 0.0);
    for (long it = 0; it < max_iter; ++it) {
        Vec grad(d + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double r = theta[d] - y[i];
            for (std::size_t j = 0; j < d; ++j) r += theta[j] * x[i][j];
            for (std::size_t j = 0; j < d; ++j) grad[j] += 2 * r * x[i][j];
            grad[d] += 2 * r;
        }
        for (std::size_t j = 0; j < d; ++j) grad[j] += 2 * lambda * theta[j];
        double norm = 0;
        for (std::size_t j = 0; j <= d; ++j) {
            theta[j] -= step * grad[j];
            norm += grad[j] * grad[j];
        }
        if (std::sqrt(norm) < tol) break;
    }
    return theta;
}

double nearest_rank(std::span<const double> values, double q) {
    std::vector<double> v;
    for (double x : values) {
        if (!std::isnan(x)) v.push_back(x);
    }
    const double need = q * static_cast<double>(v.size());
    double best = INFINITY;
    for (double cand : v) {
        const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x <= cand; });
        if (static_cast<double>(below) >= need && cand < best) best = cand;
    }
    return best;
}

double mean(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

Vec central_diff(const std::function<double(const Vec&)>& f, Vec p, double h) {
    Vec out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = f(p);
        p[i] = keep - h;
        const double down = f(p);
        p[i] = keep;
        out[i] = (up - down) / (2 * h);
    }
    return out;
}

double max_relative_error(const Vec& analytic, const Vec& numeric, double floor) {
    double worst = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace oracle

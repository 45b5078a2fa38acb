#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dragkit {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx I1{0.0, 1.0};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : Error { using Error::Error; };
struct UnsupportedError : Error { using Error::Error; };
struct NormalizationError : Error { using Error::Error; };
struct ModelError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct SynthesisError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct ContinuationError : Error {
    ContinuationError(const std::string& what, std::size_t step) : Error(what), step(step) {}
    std::size_t step;
};
struct IllConditionedError : Error {
    IllConditionedError(const std::string& what, double cond) : Error(what), condition(cond) {}
    double condition;
};

/// Uniform grid of n_steps intervals over [0, tg].
struct TimeGrid {
    std::size_t n_steps = 0;
    double tg = 0.0;

    TimeGrid() = default;
    TimeGrid(std::size_t n, double t) : n_steps(n), tg(t) {
        if (n == 0 || !(t > 0.0)) throw DomainError("time grid needs n_steps > 0 and tg > 0");
    }
    double dt() const { return tg / static_cast<double>(n_steps); }
    double t(std::size_t i) const { return i == n_steps ? tg : static_cast<double>(i) * dt(); }
    std::size_t points() const { return n_steps + 1; }
};

/// Time-indexed matrices sampled on a uniform grid.
struct Series {
    TimeGrid grid;
    std::vector<Mat> m;
    std::size_t size() const { return m.size(); }
    const Mat& operator[](std::size_t i) const { return m[i]; }
    Mat& operator[](std::size_t i) { return m[i]; }
};

inline double op_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

inline Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

/// exp(-i H dt) for Hermitian H.
inline Mat expm_hermitian(const Mat& h, double dt) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h));
    const Vec ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp().matrix();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

/// exp(A) for anti-Hermitian A.
inline Mat expm_antihermitian(const Mat& a) {
    const Mat h = hermitian_part(cplx(0.0, 1.0) * a);
    return expm_hermitian(h, 1.0);
}

/// Fourth-order finite-difference derivative of uniformly sampled data.
/// Central five-point stencil inside, one-sided five-point stencils at the two first and last samples.
template <class T>
std::vector<T> fd_derivative(const std::vector<T>& x, double dt) {
    const std::size_t n = x.size();
    if (n < 5) throw DomainError("finite differences need at least 5 samples");
    std::vector<T> d(n);
    const double s = 1.0 / (12.0 * dt);
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = (x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) * s;
    d[0] = (-25.0 * x[0] + 48.0 * x[1] - 36.0 * x[2] + 16.0 * x[3] - 3.0 * x[4]) * s;
    d[1] = (-3.0 * x[0] - 10.0 * x[1] + 18.0 * x[2] - 6.0 * x[3] + x[4]) * s;
    d[n - 1] = (25.0 * x[n - 1] - 48.0 * x[n - 2] + 36.0 * x[n - 3] - 16.0 * x[n - 4] + 3.0 * x[n - 5]) * s;
    d[n - 2] = (3.0 * x[n - 1] + 10.0 * x[n - 2] - 18.0 * x[n - 3] + 6.0 * x[n - 4] - x[n - 5]) * s;
    return d;
}

/// Fornberg weights for the first derivative at x0 from nodes xs.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
    double c1 = 1.0, c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min<std::size_t>(i, 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

/// First derivative from `points`-point stencils (order points - 1): central inside, one-sided near the ends.
template <class T>
std::vector<T> fd_derivative(const std::vector<T>& x, double dt, int points) {
    const std::size_t n = x.size();
    const auto p = static_cast<std::size_t>(points);
    if (points < 3 || points % 2 == 0) throw DomainError("stencil needs an odd number of points >= 3");
    if (n < p) throw DomainError("too few samples for the finite-difference stencil");
    const std::size_t h = p / 2;
    std::vector<T> d(n);
    auto apply = [&](std::size_t i, std::size_t first) {
        std::vector<double> xs(p);
        for (std::size_t k = 0; k < p; ++k) xs[k] = static_cast<double>(first + k);
        const auto w = fd_weights(static_cast<double>(i), xs);
        // differences from x[i]: constants give exactly zero
        T acc = w[0] * (x[first] - x[i]);
        for (std::size_t k = 1; k < p; ++k) acc += w[k] * (x[first + k] - x[i]);
        return T(acc / dt);
    };
    for (std::size_t i = 0; i < n; ++i) d[i] = apply(i, std::min(i < h ? 0 : i - h, n - p));
    return d;
}

inline Series fd_derivative(const Series& s) {
    Series out{s.grid, fd_derivative(s.m, s.grid.dt())};
    return out;
}

/// Composite Simpson weights on n+1 uniform points; Simpson 3/8 on the last panel when n is odd.
inline std::vector<double> simpson_weights(std::size_t n, double dt) {
    std::vector<double> w(n + 1, 0.0);
    if (n == 1) {
        w[0] = w[1] = 0.5 * dt;
        return w;
    }
    std::size_t even = (n % 2 == 0) ? n : n - 3;
    for (std::size_t i = 0; i + 2 <= even; i += 2) {
        w[i] += dt / 3.0;
        w[i + 1] += 4.0 * dt / 3.0;
        w[i + 2] += dt / 3.0;
    }
    if (n % 2 == 1) {
        const std::size_t i = even;
        w[i] += 3.0 * dt / 8.0;
        w[i + 1] += 9.0 * dt / 8.0;
        w[i + 2] += 9.0 * dt / 8.0;
        w[i + 3] += 3.0 * dt / 8.0;
    }
    return w;
}

/// Cumulative integral with fourth-order local panels.
template <class T>
std::vector<T> cumulative_integral(const std::vector<T>& f, double dt, const T& zero) {
    const std::size_t n = f.size();
    std::vector<T> out(n, zero);
    if (n < 4) {
        for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + (f[i - 1] + f[i]) * (0.5 * dt);
        return out;
    }
    const double c = dt / 24.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        T panel;
        if (i == 0)
            panel = (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * c;
        else if (i + 2 >= n)
            panel = (9.0 * f[i + 1] + 19.0 * f[i] - 5.0 * f[i - 1] + f[i - 2]) * c;
        else
            panel = (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) * c;
        out[i + 1] = out[i] + panel;
    }
    return out;
}

}  // namespace dragkit

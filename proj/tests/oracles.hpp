#pragma once
// Reference computations kept independent of the library's solvers.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dragkit/pulse_shapes.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline double coefficient_residual(const std::vector<cplx>& a, const std::vector<cplx>& gaps) {
    double worst = 0.0;
    for (const auto& g : gaps) {
        cplx acc = 1.0, p = 1.0;
        for (const auto& ar : a) {
            p *= g;
            acc += ar * p;
        }
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

/// Closed form for two gaps: a1 = -(d1 + d2)/(d1 d2), a2 = 1/(d1 d2).
inline std::vector<cplx> two_gap_coefficients(cplx d1, cplx d2) { return {-(d1 + d2) / (d1 * d2), 1.0 / (d1 * d2)}; }

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Three-level rotating-frame transmon written out by hand.
inline Mat transmon_hamiltonian(cplx omega, double Delta, double lambda) {
    Mat h = Mat::Zero(3, 3);
    h(2, 2) = Delta;
    h(1, 0) = 0.5 * omega;
    h(0, 1) = std::conj(h(1, 0));
    h(2, 1) = 0.5 * lambda * omega;
    h(1, 2) = std::conj(h(2, 1));
    return h;
}

/// Classical RK4 on dU/dt = -i H(t) U.
inline Mat rk4_unitary(const std::function<Mat(double)>& H, int d, double T, std::size_t n) {
    const cplx mi(0.0, -1.0);
    const double h = T / static_cast<double>(n);
    Mat U = Mat::Identity(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = h * static_cast<double>(i);
        const Mat Hm = H(t + 0.5 * h);
        const Mat k1 = mi * H(t) * U;
        const Mat k2 = mi * Hm * (U + 0.5 * h * k1);
        const Mat k3 = mi * Hm * (U + 0.5 * h * k2);
        const Mat k4 = mi * H(t + h) * (U + h * k3);
        U += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return U;
}

/// Pi-pulse duration whose area-normalized windowed Gaussian (sigma = tg/ratio) peaks at `peak`.
inline double gaussian_pi_duration_for_peak(double peak, double ratio, int boundary_order) {
    double tg = 10.0 / peak;
    for (int i = 0; i < 80; ++i) {
        const auto w = dragkit::normalize_rotation_angle(dragkit::gaussian(1.0, tg / ratio, tg, boundary_order), M_PI).waveform;
        tg *= w(0.5 * tg).real() / peak;
    }
    return tg;
}

/// Lab-frame target for drift diag(-w/2, w/2): free evolution after exp(-i pi sx/2).
inline Mat lab_frame_pi_target(double w, double tg) {
    Mat t(2, 2);
    t << 0.0, cplx(0.0, -1.0) * std::exp(cplx(0.0, 0.5 * w * tg)), cplx(0.0, -1.0) * std::exp(cplx(0.0, -0.5 * w * tg)),
        0.0;
    return t;
}

}  // namespace oracle

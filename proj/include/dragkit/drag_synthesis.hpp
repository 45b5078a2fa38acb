#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "propagator.hpp"
#include "superadiabatic.hpp"

namespace dragkit {

/// u_y = -(lambda / 2 Delta) du_x/dt, delta = 0.
inline ControlSchedule first_order_drag(const Waveform& ux, double lambda, double Delta, const TimeGrid& grid) {
    if (Delta == 0.0) throw SynthesisError("singular gap: Delta = 0");
    if (ux.boundary_order() < 1) throw DomainError("first-order DRAG needs boundary_order >= 1");
    ControlSchedule s(grid);
    s.add(0, Quadrature::X, ux);
    s.add(0, Quadrature::Y, (-lambda / (2.0 * Delta)) * ux.derivative(1));
    s.provenance = {{"method", "first-order-drag"}, {"lambda", lambda}, {"Delta", Delta},
                    {"epsilon", 1.0 / (std::abs(Delta) * grid.tg)}};
    return s;
}

/// Effective lambda for first_order_drag on a transmon ladder: lambda_1^2 / (2 lambda_0^2).
/// Equals 1 for the sqrt(j+1) ladder; the y-only first-order optimum is u_y = -(lambda_1^2/4 lambda_0^2) u_x'/Delta.
inline double transmon_drag_lambda(const SystemModel& m) {
    const double r = lambda_ratio(m);
    return 0.5 * r * r;
}

/// First-order solution with detuning: u_x = G + (l^2-4) G^3/(8 Delta^2), u_y = -G'/Delta,
/// delta = (l^2-4) G^2/(4 Delta), l = lambda_1/lambda_0.
inline ControlSchedule first_order_drag_detuned(const Waveform& G, double lambda, double Delta, const TimeGrid& grid) {
    if (Delta == 0.0) throw SynthesisError("singular gap: Delta = 0");
    const double l2 = lambda * lambda;
    const Waveform G2 = G * G;
    ControlSchedule s(grid);
    s.add(0, Quadrature::X, G + ((l2 - 4.0) / (8.0 * Delta * Delta)) * (G2 * G));
    s.add(0, Quadrature::Y, (-1.0 / Delta) * G.derivative(1));
    s.add(0, Quadrature::Detuning, ((l2 - 4.0) / (4.0 * Delta)) * G2);
    s.provenance = {{"method", "first-order-drag-detuned"}, {"lambda", lambda}, {"Delta", Delta},
                    {"epsilon", 1.0 / (std::abs(Delta) * grid.tg)}};
    return s;
}

/// Gaussian G scaled so that the x quadrature of first_order_drag_detuned has area theta.
inline ControlSchedule first_order_drag_detuned_normalized(const Waveform& shape, double lambda, double Delta,
                                                           double theta, const TimeGrid& grid) {
    using boost::math::quadrature::gauss_kronrod;
    const double tg = shape.tg();
    const double i1 = waveform_area(shape);
    const double i3 =
        gauss_kronrod<double, 61>::integrate([&](double t) { return std::pow(shape(t).real(), 3); }, 0.0, tg, 15, 1e-14);
    const double c = (lambda * lambda - 4.0) / (8.0 * Delta * Delta);
    auto f = [&](double a) { return a * i1 + c * a * a * a * i3 - theta; };
    const double a0 = theta / i1;
    double lo = 0.25 * a0, hi = 4.0 * a0;
    if (f(lo) * f(hi) > 0.0) throw NormalizationError("cannot normalize detuned DRAG amplitude");
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    auto s = first_order_drag_detuned(0.5 * (r.first + r.second) * shape, lambda, Delta, grid);
    s.provenance["amplitude_scale"] = 0.5 * (r.first + r.second);
    return s;
}

struct SWGenerator {
    Series S;
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    std::string order = "first";
};

/// Pointwise generator decoupling the `low` block: H_QQ X - X H_LL = -V_QL, S_QL = X, S_LQ = -X^+.
inline SWGenerator block_generator(const Series& H, const SubspaceSpec& low) {
    const auto d = static_cast<int>(H[0].rows());
    low.validate(d);
    const auto high = low.leakage(d);
    const int nl = low.size();
    const int nh = static_cast<int>(high.size());
    SWGenerator g;
    g.S.grid = H.grid;
    for (std::size_t i = 0; i < H.size(); ++i) {
        Mat Hll(nl, nl), Hhh(nh, nh), V(nh, nl);
        for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b) Hll(a, b) = H[i](low.levels[a], low.levels[b]);
        for (int a = 0; a < nh; ++a)
            for (int b = 0; b < nh; ++b) Hhh(a, b) = H[i](high[a], high[b]);
        for (int a = 0; a < nh; ++a)
            for (int b = 0; b < nl; ++b) V(a, b) = H[i](high[a], low.levels[b]);
        // vec(Hhh X - X Hll) = (I (x) Hhh - Hll^T (x) I) vec(X)
        Mat K = Mat::Zero(nh * nl, nh * nl);
        for (int b = 0; b < nl; ++b)
            for (int c = 0; c < nl; ++c)
                for (int a = 0; a < nh; ++a)
                    for (int e = 0; e < nh; ++e) {
                        cplx v{};
                        if (b == c) v += Hhh(a, e);
                        if (a == e) v -= Hll(c, b);
                        K(b * nh + a, c * nh + e) = v;
                    }
        Vec rhs(nh * nl);
        for (int b = 0; b < nl; ++b)
            for (int a = 0; a < nh; ++a) rhs(b * nh + a) = -V(a, b);
        const Vec x = K.fullPivLu().solve(rhs);
        Mat S = Mat::Zero(d, d);
        for (int b = 0; b < nl; ++b)
            for (int a = 0; a < nh; ++a) {
                S(high[a], low.levels[b]) = x(b * nh + a);
                S(low.levels[b], high[a]) = -std::conj(x(b * nh + a));
            }
        g.S.m.push_back(S);
    }
    return g;
}

/// Generator cancelling the single element <to|H|from> to first order: S_tf = H_tf / (H_ff - H_tt).
inline SWGenerator transition_generator(const Series& H, int from, int to) {
    SWGenerator g;
    g.S.grid = H.grid;
    for (std::size_t i = 0; i < H.size(); ++i) {
        const auto d = H[i].rows();
        if (from < 0 || to < 0 || from >= d || to >= d || from == to) throw DomainError("invalid transition");
        const cplx gap = H[i](from, from) - H[i](to, to);
        if (std::abs(gap) == 0.0) throw SynthesisError("degenerate transition in generator");
        Mat S = Mat::Zero(d, d);
        S(to, from) = H[i](to, from) / gap;
        S(from, to) = -std::conj(S(to, from));
        g.S.m.push_back(S);
    }
    return g;
}

struct SWResult {
    Series H;
    std::vector<double> term_norms;  ///< max over time of ||[H,S]_n / n!||
    bool diverging = false;
};

/// sum_{n<=n_max} [H,S]_n/n! - i sum_{n<=n_max} [S',S]_n/(n+1)!; S' by fourth-order differences.
inline SWResult sw_effective_hamiltonian(const Series& H, const SWGenerator& gen, int n_max, bool include_inertial = true) {
    if (n_max < 1) throw DomainError("n_max must be >= 1");
    if (H.size() != gen.S.size()) throw DomainError("generator and Hamiltonian grids differ");
    SWResult r;
    r.H.grid = H.grid;
    r.term_norms.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::vector<Mat> Sd;
    if (include_inertial) Sd = fd_derivative(gen.S.m, H.grid.dt());
    for (std::size_t i = 0; i < H.size(); ++i) {
        const Mat& S = gen.S[i];
        Mat term = H[i];
        Mat acc = H[i];
        Mat dterm = include_inertial ? Sd[i] : Mat::Zero(S.rows(), S.cols());
        Mat dacc = dterm;
        double fact = 1.0;
        r.term_norms[0] = std::max(r.term_norms[0], term.norm());
        for (int k = 1; k <= n_max; ++k) {
            fact *= k;
            term = commutator(term, S);
            acc += term / fact;
            r.term_norms[k] = std::max(r.term_norms[k], term.norm() / fact);
            if (include_inertial) {
                dterm = commutator(dterm, S);
                dacc += dterm / (fact * (k + 1));
            }
        }
        r.H.m.push_back(hermitian_part(acc - I1 * dacc));
    }
    const std::size_t n = r.term_norms.size();
    r.diverging = n >= 3 && r.term_norms[n - 1] >= r.term_norms[n - 2] && r.term_norms[n - 1] > 0.0;
    return r;
}

/// H_l = sum_n [H_{l-1}, S_l]_n / n! - i dS_l/dt.
inline Series sw_iterate(const Series& H_prev, const SWGenerator& gen, int n_max) {
    if (n_max < 1) throw DomainError("n_max must be >= 1");
    const auto Sd = fd_derivative(gen.S.m, H_prev.grid.dt());
    Series out{H_prev.grid, {}};
    for (std::size_t i = 0; i < H_prev.size(); ++i) {
        Mat term = H_prev[i];
        Mat acc = H_prev[i];
        double fact = 1.0;
        for (int k = 1; k <= n_max; ++k) {
            fact *= k;
            term = commutator(term, gen.S[i]);
            acc += term / fact;
        }
        out.m.push_back(hermitian_part(acc - I1 * Sd[i]));
    }
    return out;
}

/// Max |<to|H|from>| over the grid: residual of a targeted transition.
inline double element_residual(const Series& H, int from, int to) {
    double m = 0.0;
    for (const auto& h : H.m) m = std::max(m, std::abs(h(to, from)));
    return m;
}

struct DerivativeCoefficients {
    std::vector<cplx> a;           ///< a_r, r = 1..N
    std::vector<cplx> gaps;
    std::vector<double> residuals; ///< |1 + sum_r a_r gap_k^r|
    double condition = 0.0;
};

/// Solves 1 + sum_r a_r gap_k^r = 0 for every gap (minimum-norm when N exceeds the gap count).
inline DerivativeCoefficients derivative_coefficients(const std::vector<cplx>& gaps, int N) {
    const int K = static_cast<int>(gaps.size());
    if (N < K) throw DomainError("need N >= number of gaps");
    DerivativeCoefficients out;
    out.gaps = gaps;
    if (K == 0) {
        out.a.assign(static_cast<std::size_t>(N), cplx{});
        return out;
    }
    double s = 0.0;
    for (const auto& g : gaps) {
        if (std::abs(g) == 0.0) throw DomainError("gap must be nonzero");
        s = std::max(s, std::abs(g));
    }
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < k; ++l)
            if (std::abs(gaps[k] - gaps[l]) <= 1e-14 * s) throw DomainError("gaps must be pairwise distinct");
    Mat A(K, N);
    for (int k = 0; k < K; ++k)
        for (int r = 1; r <= N; ++r) A(k, r - 1) = std::pow(gaps[k] / s, r);
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& sv = svd.singularValues();
    out.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (out.condition > 1e12)
        throw IllConditionedError("coefficient system ill-conditioned; rescale or separate the gaps", out.condition);
    const Vec rhs = Vec::Constant(K, cplx{-1.0});
    Vec x = (K == N) ? Vec(A.fullPivLu().solve(rhs)) : Vec(A.completeOrthogonalDecomposition().solve(rhs));
    for (int r = 1; r <= N; ++r) out.a.push_back(x(r - 1) / std::pow(s, r));
    for (int k = 0; k < K; ++k) {
        cplx acc{1.0};
        for (int r = 1; r <= N; ++r) acc += x(r - 1) * std::pow(gaps[k] / s, r);
        out.residuals.push_back(std::abs(acc));
    }
    return out;
}

/// u = b + sum_r a_r i^r b^(r) with a_r from derivative_coefficients over the gaps.
inline Waveform multi_gap_pulse(const Waveform& b, const std::vector<cplx>& gaps) {
    const int N = static_cast<int>(gaps.size());
    if (N == 0) return b;
    if (b.boundary_order() < N) throw DomainError("base waveform boundary_order must be >= number of gaps");
    const auto c = derivative_coefficients(gaps, N);
    std::vector<std::pair<cplx, Waveform>> terms{{cplx{1.0}, b}};
    cplx ir{1.0};
    for (int r = 1; r <= N; ++r) {
        ir *= I1;
        terms.emplace_back(c.a[r - 1] * ir, b.derivative(r));
    }
    return linear_combination(terms);
}

/// First-order DRAG against the counter-rotating transition of the lab-frame two-level model.
/// That transition sits at gap -2w with the conjugate field, so u_y = -u_x'/(2 (-2 w)) = u_x'/(4 w).
inline ControlSchedule rwa_correction(const Waveform& Omega, double w, const TimeGrid& grid) {
    if (!(w > 0.0)) throw DomainError("carrier must be positive");
    if (Omega.boundary_order() < 0) throw DomainError("RWA correction needs a boundary-vanishing envelope");
    ControlSchedule s(grid);
    s.add(0, Quadrature::X, Omega);
    s.add(0, Quadrature::Y, (1.0 / (4.0 * w)) * Omega.derivative(1));
    s.provenance = {{"method", "rwa-correction"}, {"carrier", w}, {"counter_rotating_gap", -2.0 * w}};
    return s;
}

struct MagnusTerms {
    Mat H1;  ///< integral of H
    Mat H2;  ///< (-i/2) int_0^tg dt2 int_0^t2 dt1 [H(t2), H(t1)]
    Mat propagator() const { return expm_hermitian(H1 + H2, 1.0); }
    static constexpr const char* normalization = "U ~ exp(-i(H1 + H2)), H2 = (-i/2) int dt2 int^t2 dt1 [H(t2), H(t1)]";
};

inline MagnusTerms magnus_terms(const Series& H) {
    const double dt = H.grid.dt();
    const auto d = H[0].rows();
    const auto w = simpson_weights(H.size() - 1, dt);
    const auto K = cumulative_integral(H.m, dt, Mat(Mat::Zero(d, d)));
    MagnusTerms m;
    m.H1 = Mat::Zero(d, d);
    m.H2 = Mat::Zero(d, d);
    for (std::size_t i = 0; i < H.size(); ++i) {
        m.H1 += w[i] * H[i];
        m.H2 += w[i] * commutator(H[i], K[i]);
    }
    m.H2 *= cplx(0.0, -0.5);
    return m;
}

/// Gaussian base waveform of width tg/sigma_ratio normalized to lambda0 * area = theta.
inline Waveform base_gaussian(double tg, double sigma_ratio, int boundary_order, double theta, double lambda0 = 1.0) {
    return normalize_rotation_angle(gaussian(1.0, tg / sigma_ratio, tg, boundary_order), theta, lambda0).waveform;
}

struct SecondOrderOptions {
    int iterations = 25;
    int n_max = 8;
    std::size_t samples = 0;  ///< synthesis samples; 0 picks 2 n_steps
};

/// Second-order y-only DRAG on a transmon, built in the first SW frame.
/// u_y keeps the first-order form; u_x is iterated so that the qubit block of e^{-S} H e^{S}
/// rotates at the rate of the base pulse: u_x += (2/l0)(l0 b/2 - sqrt(x^2 + z^2)).
inline ControlSchedule second_order_drag(const Waveform& b, const SystemModel& model, const TimeGrid& grid,
                                         const SecondOrderOptions& opt = {}) {
    if (model.dim < 3) throw ModelError("second-order DRAG needs at least three levels");
    const double Delta = model.drift(2) - 2.0 * model.drift(1) + model.drift(0);
    if (Delta == 0.0) throw SynthesisError("singular gap: Delta = 0");
    const double l0 = model.ops[0].coupling;
    const double ld = transmon_drag_lambda(model);
    const Waveform uy = (-ld / (2.0 * Delta)) * b.derivative(1);
    const std::size_t ns = opt.samples ? opt.samples : std::max<std::size_t>(2 * grid.n_steps, 200);
    const TimeGrid sg(ns, grid.tg);
    std::vector<double> bv(ns + 1), yv(ns + 1), ox(ns + 1);
    for (std::size_t i = 0; i <= ns; ++i) {
        bv[i] = b(sg.t(i)).real();
        yv[i] = uy(sg.t(i)).real();
        ox[i] = bv[i];
    }
    const SubspaceSpec qubit{{0, 1}};
    for (int it = 0; it < opt.iterations; ++it) {
        Series H{sg, {}};
        for (std::size_t i = 0; i <= ns; ++i) H.m.push_back(assemble_fields(model, {cplx(ox[i], yv[i])}, 0.0, sg.t(i)));
        const auto gen = block_generator(H, qubit);
        const auto eff = sw_effective_hamiltonian(H, gen, opt.n_max, false);
        for (std::size_t i = 0; i <= ns; ++i) {
            const Mat& q = eff.H[i];
            const double x = q(1, 0).real();
            const double z = 0.5 * (q(0, 0) - q(1, 1)).real();
            const double mag = std::copysign(std::hypot(x, z), x);
            ox[i] += (2.0 / l0) * (0.5 * l0 * bv[i] - mag);
        }
    }
    std::vector<cplx> oxc(ox.begin(), ox.end());
    ControlSchedule s(grid);
    s.add(0, Quadrature::X, sampled(grid.tg, std::move(oxc), b.boundary_order()));
    s.add(0, Quadrature::Y, uy);
    s.provenance = {{"method", "second-order-drag"},
                    {"frames", 1},
                    {"canceled_orders", 2},
                    {"iterations", opt.iterations},
                    {"Delta", Delta},
                    {"epsilon", 1.0 / (std::abs(Delta) * grid.tg)}};
    return s;
}

/// Gate error of a single global drive on the two-qutrit crosstalk model:
/// target Rx(theta) on qutrit 1, free evolution on qutrit 2.
inline FidelityReport crosstalk_gate_fidelity(const SystemModel& m, const ControlSchedule& s, double theta,
                                              PhaseMode mode = PhaseMode::VirtualZ, double tolerance = 1e-8) {
    if (m.dim != 6) throw ModelError("crosstalk fidelity expects the two-qutrit model");
    EvolveOptions o;
    o.tolerance = tolerance;
    // The qutrits are uncoupled, so each block is propagated on its own.
    const auto u1 = evolve(submodel(m, {0, 1, 2}), s, o).U;
    const auto u2 = evolve(submodel(m, {3, 4, 5}), s, o).U;
    const double w2 = m.drift(4) - m.drift(3);
    Mat t2 = Mat::Zero(2, 2);
    t2(0, 0) = 1.0;
    t2(1, 1) = std::exp(cplx(0.0, -w2 * s.grid.tg));
    return product_gate_fidelity({{u1, rx(theta), SubspaceSpec{{0, 1}}}, {u2, t2, SubspaceSpec{{0, 1}}}}, mode);
}

struct WahwahOptions {
    double sigma_ratio = 4.0;
    int boundary_order = 1;
    std::size_t n_steps = 0;  ///< 0 picks 40 steps per unit time
    double tolerance = 1e-6;  ///< propagation tolerance; ample for errors above 1e-6
    std::size_t scan_points = 36;
    double omega_max = 3.0;  ///< version 2.0 searches omega_x in (0, omega_max * delta]
    PhaseMode phase = PhaseMode::VirtualZ;
};

struct WahwahResult {
    ControlSchedule schedule;
    double omega_x = 0.0;
    double error = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<double, double>> scan;  ///< (omega_x, error) for version 2.0
};

inline ControlSchedule wahwah_for(double tg, double Delta, double theta, double wx, const WahwahOptions& o) {
    const std::size_t n = o.n_steps ? o.n_steps : static_cast<std::size_t>(std::ceil(40.0 * tg));
    const TimeGrid grid(n, tg);
    const Waveform ux =
        normalize_rotation_angle(wahwah_envelope(1.0, tg / o.sigma_ratio, tg, wx, o.boundary_order), theta).waveform;
    ControlSchedule s(grid);
    s.add(0, Quadrature::X, ux);
    s.add(0, Quadrature::Y, (-1.0 / (2.0 * Delta)) * ux.derivative(1));
    return s;
}

/// Sideband-modulated Gaussian with first-order DRAG. Version 1.0 uses omega_x = delta/2;
/// version 2.0 minimizes the simulated two-qutrit error over omega_x in (0, omega_max delta].
inline WahwahResult wahwah_design(double tg, double Delta, double delta, double theta, const std::string& version,
                                  const WahwahOptions& o = {}) {
    if (version != "1.0" && version != "2.0") throw ConfigError("WAHWAH version must be 1.0 or 2.0");
    if (Delta == 0.0 || delta == 0.0) throw SynthesisError("WAHWAH needs nonzero Delta and delta");
    if (!(o.omega_max > 0.0)) throw ConfigError("WAHWAH omega_max must be positive");
    const SystemModel m = two_qutrit_crosstalk_preset(Delta, delta);
    const double ad = std::abs(delta);
    auto err = [&](double wx) {
        return crosstalk_gate_fidelity(m, wahwah_for(tg, Delta, theta, wx, o), theta, o.phase, o.tolerance).error;
    };
    WahwahResult r;
    if (version == "1.0") {
        r.omega_x = 0.5 * ad;
        r.error = err(r.omega_x);
    } else {
        const std::size_t np = std::max<std::size_t>(o.scan_points, 3);
        std::size_t best = 0;
        for (std::size_t k = 0; k < np; ++k) {
            const double wx = o.omega_max * ad * static_cast<double>(k + 1) / static_cast<double>(np);
            r.scan.emplace_back(wx, err(wx));
            if (r.scan[k].second < r.scan[best].second) best = k;
        }
        const double lo = best == 0 ? 1e-6 * ad : r.scan[best - 1].first;
        const double hi = best + 1 == np ? o.omega_max * ad : r.scan[best + 1].first;
        boost::uintmax_t iters = 60;
        const auto m1 = boost::math::tools::brent_find_minima(err, lo, hi, 30, iters);
        r.omega_x = m1.first;
        r.error = m1.second;
        if (r.scan[best].second < r.error) {
            r.omega_x = r.scan[best].first;
            r.error = r.scan[best].second;
        }
        const double e1 = err(0.5 * ad);
        if (e1 < r.error) {
            r.omega_x = 0.5 * ad;
            r.error = e1;
        }
    }
    r.schedule = wahwah_for(tg, Delta, theta, r.omega_x, o);
    r.schedule.provenance = {{"method", "wahwah"},
                             {"version", version},
                             {"omega_x", r.omega_x},
                             {"Delta", Delta},
                             {"delta", delta},
                             {"sigma_ratio", o.sigma_ratio},
                             {"boundary_order", o.boundary_order},
                             {"epsilon", 1.0 / (std::abs(Delta) * tg)}};
    if (tg < 2.0 * pi / ad) r.schedule.provenance["warning"] = "gate time below the 2 pi / delta speed limit";
    return r;
}

inline ControlSchedule wahwah_schedule(double tg, double Delta, double delta, double theta, const std::string& version,
                                       const WahwahOptions& o = {}) {
    return wahwah_design(tg, Delta, delta, theta, version, o).schedule;
}

}  // namespace dragkit

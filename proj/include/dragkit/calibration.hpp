#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "propagator.hpp"

namespace dragkit {

inline constexpr int n_prefactors = 3;
using Alpha = std::array<double, n_prefactors>;  ///< (alpha_x, alpha_y, alpha_delta)

inline const char* prefactor_name(int k) { return k == 0 ? "alpha_x" : k == 1 ? "alpha_y" : "alpha_delta"; }

inline int prefactor_index(const std::string& s) {
    if (s == "alpha_x" || s == "x") return 0;
    if (s == "alpha_y" || s == "y") return 1;
    if (s == "alpha_delta" || s == "delta" || s == "d") return 2;
    throw ConfigError("unknown prefactor: " + s);
}

struct CalibrationProblem {
    SystemModel model;
    ControlSchedule base;
    Mat target;
    SubspaceSpec subspace{{0, 1}};
    PhaseMode phase = PhaseMode::Global;
    Alpha lower{-0.5, -0.5, -0.5};
    Alpha upper{0.5, 0.5, 0.5};
    EvolveOptions evolve;
    std::string objective_id = "gate_error";

    void validate() const {
        model.validate();
        for (int k = 0; k < n_prefactors; ++k) {
            if (!std::isfinite(lower[k]) || !std::isfinite(upper[k])) throw ConfigError("bounds must be finite");
            if (lower[k] > upper[k]) throw ConfigError("lower bound exceeds upper bound");
        }
        if (target.rows() != subspace.size()) throw ConfigError("target does not match subspace");
    }
    bool in_bounds(const Alpha& a) const {
        for (int k = 0; k < n_prefactors; ++k)
            if (a[k] < lower[k] || a[k] > upper[k]) return false;
        return true;
    }
};

struct ObjectiveValue {
    double error = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string message;
};

/// u_x -> (1+a_x) u_x, u_y -> (1+a_y) u_y, delta -> (1+a_d) delta; returns 1 - F.
inline ObjectiveValue objective(const CalibrationProblem& p, const Alpha& a) {
    if (!p.in_bounds(a)) throw DomainError("prefactors outside bounds");
    ObjectiveValue v;
    try {
        const auto s = p.base.scaled(1.0 + a[0], 1.0 + a[1], 1.0 + a[2]);
        const auto r = evolve(p.model, s, p.evolve);
        v.error = average_gate_fidelity(r.U, p.target, p.subspace, p.phase).error;
        v.ok = true;
    } catch (const Error& e) {
        v.message = e.what();
    }
    return v;
}

struct NelderMeadConfig {
    double init_scale = 0.05;
    int max_evals = 600;
    double f_tolerance = 1e-6;  ///< simplex spread of the optimized value (log10 error by default)
    bool log_objective = true;
};

struct TraceEntry {
    int index;
    Alpha alpha;
    double error;
    bool ok;
};

struct OptimizeResult {
    Alpha alpha{};
    double error = std::numeric_limits<double>::quiet_NaN();
    double start_error = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int evaluations = 0;
    std::vector<TraceEntry> trace;
};

/// Bounded Nelder-Mead (coefficients 1, 2, 0.5, 0.5) on a generic function; points are clipped to the box.
template <int D, class F>
OptimizeResult nelder_mead(F&& f, std::array<double, D> x0, const std::array<double, D>& lo,
                           const std::array<double, D>& hi, const NelderMeadConfig& cfg,
                           const std::function<double(double)>& transform = {}) {
    using P = std::array<double, D>;
    static_assert(D > 0 && D <= n_prefactors);
    if (cfg.max_evals < D + 1) throw ConfigError("max_evals too small for the simplex");
    OptimizeResult res;
    auto clip = [&](P x) {
        for (int k = 0; k < D; ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
        return x;
    };
    auto eval = [&](const P& x) {
        const ObjectiveValue v = f(x);
        TraceEntry e{res.evaluations++, {}, v.error, v.ok};
        for (int k = 0; k < D && k < n_prefactors; ++k) e.alpha[k] = x[k];
        res.trace.push_back(e);
        if (v.ok && (!std::isfinite(res.error) || v.error < res.error)) {
            res.error = v.error;
            for (int k = 0; k < D && k < n_prefactors; ++k) res.alpha[k] = x[k];
        }
        if (!v.ok || !std::isfinite(v.error)) return std::numeric_limits<double>::infinity();
        return transform ? transform(v.error) : v.error;
    };
    x0 = clip(x0);
    std::vector<P> s(D + 1, x0);
    std::vector<double> fv(D + 1);
    fv[0] = eval(x0);
    res.start_error = res.trace[0].error;
    for (int k = 0; k < D; ++k) {
        P x = x0;
        const double step = cfg.init_scale * (x0[k] + cfg.init_scale <= hi[k] ? 1.0 : -1.0);
        x[k] += step;
        s[k + 1] = clip(x);
        fv[k + 1] = eval(s[k + 1]);
    }
    std::vector<int> idx(D + 1);
    while (true) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = idx[0], worst = idx[D], second = idx[D - 1];
        if (std::isfinite(fv[worst]) && fv[worst] - fv[best] < cfg.f_tolerance) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= cfg.max_evals) break;
        P c{};
        for (int i = 0; i <= D; ++i)
            if (i != worst)
                for (int k = 0; k < D; ++k) c[k] += s[i][k] / D;
        auto along = [&](double t) {
            P x;
            for (int k = 0; k < D; ++k) x[k] = c[k] + t * (s[worst][k] - c[k]);
            return clip(x);
        };
        const P xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            const P xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                s[worst] = xe;
                fv[worst] = fe;
            } else {
                s[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            s[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        const P xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            s[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (int i = 0; i <= D; ++i) {
            if (i == best) continue;
            for (int k = 0; k < D; ++k) s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
            s[i] = clip(s[i]);
            fv[i] = eval(s[i]);
        }
    }
    return res;
}

/// Nelder-Mead over (alpha_x, alpha_y, alpha_delta) from alpha = 0.
inline OptimizeResult optimize(const CalibrationProblem& p, const NelderMeadConfig& cfg = {}, Alpha start = {0, 0, 0}) {
    p.validate();
    std::function<double(double)> tr;
    if (cfg.log_objective) tr = [](double e) { return std::log10(std::max(e, 1e-300)); };
    return nelder_mead<n_prefactors>([&](const Alpha& a) { return objective(p, a); }, start, p.lower, p.upper, cfg, tr);
}

struct LandscapeSpec {
    int p1 = 0, p2 = 1;
    double lo1 = -0.05, hi1 = 0.05, lo2 = -0.05, hi2 = 0.05;
    int n1 = 41, n2 = 41;
    Alpha fixed{0, 0, 0};  ///< values of the remaining parameter(s)
};

struct LandscapeGrid {
    LandscapeSpec spec;
    std::vector<double> axis1, axis2;
    Eigen::MatrixXd log10_error;  ///< rows axis1, columns axis2; NaN marks failed cells
    int min_i = -1, min_j = -1;
    double min_error = std::numeric_limits<double>::quiet_NaN();
    int failures = 0;
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1.0);
    return v;
}

inline LandscapeGrid landscape_scan(const CalibrationProblem& p, const LandscapeSpec& spec) {
    p.validate();
    if (spec.n1 < 2 || spec.n2 < 2) throw ConfigError("landscape resolution must be at least 2x2");
    if (spec.p1 == spec.p2 || spec.p1 < 0 || spec.p2 < 0 || spec.p1 >= n_prefactors || spec.p2 >= n_prefactors)
        throw ConfigError("landscape needs two distinct prefactors");
    LandscapeGrid g;
    g.spec = spec;
    g.axis1 = linspace(spec.lo1, spec.hi1, spec.n1);
    g.axis2 = linspace(spec.lo2, spec.hi2, spec.n2);
    g.log10_error.resize(spec.n1, spec.n2);
    for (int i = 0; i < spec.n1; ++i)
        for (int j = 0; j < spec.n2; ++j) {
            Alpha a = spec.fixed;
            a[spec.p1] = g.axis1[i];
            a[spec.p2] = g.axis2[j];
            ObjectiveValue v;
            if (p.in_bounds(a)) {
                v = objective(p, a);
            } else {
                v.message = "outside bounds";
            }
            if (!v.ok) {
                g.log10_error(i, j) = std::numeric_limits<double>::quiet_NaN();
                ++g.failures;
                continue;
            }
            g.log10_error(i, j) = std::log10(std::max(v.error, 1e-300));
            if (!std::isfinite(g.min_error) || v.error < g.min_error) {
                g.min_error = v.error;
                g.min_i = i;
                g.min_j = j;
            }
        }
    return g;
}

}  // namespace dragkit

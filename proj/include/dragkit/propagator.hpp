#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hamiltonians.hpp"

namespace dragkit {

struct EvolveOptions {
    double tolerance = 1e-8;  ///< step halving stops when ||U_2n - U_n|| < tolerance; <= 0 disables halving
    int max_halvings = 10;
    bool record_steps = false;
    bool record_populations = false;
};

struct PropagationResult {
    Mat U;
    std::vector<Mat> steps;              ///< cumulative U(t_i) when recorded
    std::vector<Eigen::MatrixXd> populations;  ///< per initial basis state: rows t_i, columns levels
    double error_estimate = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_steps = 0;
    int halvings = 0;
    bool converged = false;
    std::string method = "midpoint piecewise-constant, exp via Hermitian eigendecomposition";
};

using HamiltonianFn = std::function<Mat(double)>;

namespace detail {

inline Mat midpoint_product(const HamiltonianFn& H, int d, const TimeGrid& g, std::vector<Mat>* steps) {
    Mat U = Mat::Identity(d, d);
    const double dt = g.dt();
    if (steps) {
        steps->clear();
        steps->push_back(U);
    }
    for (std::size_t i = 0; i < g.n_steps; ++i) {
        const double tm = (static_cast<double>(i) + 0.5) * dt;
        U = expm_hermitian(H(tm), dt) * U;
        if (steps) steps->push_back(U);
    }
    return U;
}

}  // namespace detail

/// Midpoint piecewise-exponential propagation of an arbitrary H(t) with step halving.
inline PropagationResult evolve_hamiltonian(const HamiltonianFn& H, int d, const TimeGrid& grid,
                                            const EvolveOptions& opt = {}) {
    PropagationResult r;
    TimeGrid g = grid;
    Mat prev = detail::midpoint_product(H, d, g, nullptr);
    if (opt.tolerance > 0.0) {
        double last = std::numeric_limits<double>::infinity();
        for (int h = 1; h <= opt.max_halvings; ++h) {
            g = TimeGrid(g.n_steps * 2, g.tg);
            Mat cur = detail::midpoint_product(H, d, g, nullptr);
            const double diff = op_norm(cur - prev);
            r.halvings = h;
            prev = cur;
            if (diff < opt.tolerance) {
                r.error_estimate = diff;
                r.converged = true;
                break;
            }
            if (h == opt.max_halvings)
                throw ConvergenceError("propagation did not converge: last two estimates " + std::to_string(last) +
                                       ", " + std::to_string(diff));
            last = diff;
        }
    } else {
        r.converged = true;
    }
    r.n_steps = g.n_steps;
    r.U = prev;
    if (opt.record_steps || opt.record_populations) {
        std::vector<Mat> steps;
        detail::midpoint_product(H, d, g, &steps);
        if (opt.record_populations) {
            for (int k = 0; k < d; ++k) {
                Eigen::MatrixXd p(static_cast<Eigen::Index>(steps.size()), d);
                for (std::size_t i = 0; i < steps.size(); ++i)
                    p.row(static_cast<Eigen::Index>(i)) = steps[i].col(k).cwiseAbs2().transpose();
                r.populations.push_back(std::move(p));
            }
        }
        if (opt.record_steps) r.steps = std::move(steps);
    }
    return r;
}

inline PropagationResult evolve(const SystemModel& model, const ControlSchedule& controls, const EvolveOptions& opt = {}) {
    model.validate();
    return evolve_hamiltonian([&](double t) { return assemble(model, controls, t); }, model.dim, controls.grid, opt);
}

/// Propagate Hamiltonian samples given at the 2n+1 points t_k = k dt/2.
/// order 2: exp of the midpoint sample; order 4: Simpson average plus the commutator correction.
/// Returns cumulative unitaries at the n+1 full-step points.
inline std::vector<Mat> evolve_sampled(const std::vector<Mat>& H, double dt, int order = 4) {
    if (H.size() < 3 || H.size() % 2 == 0) throw DomainError("need 2n+1 Hamiltonian samples");
    if (order != 2 && order != 4) throw DomainError("order must be 2 or 4");
    const std::size_t n = (H.size() - 1) / 2;
    const auto d = H[0].rows();
    std::vector<Mat> out;
    Mat U = Mat::Identity(d, d);
    out.push_back(U);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat& a = H[2 * i];
        const Mat& m = H[2 * i + 1];
        const Mat& b = H[2 * i + 2];
        Mat k;
        if (order == 2) {
            k = m * dt;
        } else {
            k = (a + 4.0 * m + b) * (dt / 6.0) - I1 * (dt * dt / 12.0) * commutator(b - a, m);
        }
        U = expm_hermitian(k, 1.0) * U;
        out.push_back(U);
    }
    return out;
}

enum class PhaseMode {
    Global,    ///< global phase on the subspace optimized out
    None,      ///< no phase freedom
    VirtualZ,  ///< additionally free diagonal frame phases (virtual Z) on the subspace
};

struct FidelityReport {
    double fidelity = 0.0;
    double error = 1.0;
    double leakage = 0.0;
    bool phase_corrected = true;
    std::string phase_mode = "global";
    static constexpr const char* formula = "F = (Tr(M M^+) + |Tr M|^2) / (d_c (d_c + 1)), M = P U_target^+ U P";
};

inline Mat restrict_to(const Mat& U, const SubspaceSpec& s) {
    const int dc = s.size();
    Mat out(dc, dc);
    for (int a = 0; a < dc; ++a)
        for (int b = 0; b < dc; ++b) out(a, b) = U(s.levels[a], s.levels[b]);
    return out;
}

namespace detail {

inline double trace_overlap(const Mat& M, PhaseMode mode) {
    if (mode == PhaseMode::VirtualZ) return M.diagonal().cwiseAbs().sum();
    const cplx tr = M.trace();
    if (mode == PhaseMode::None) return std::max(0.0, tr.real());
    return std::abs(tr);
}

inline const char* phase_name(PhaseMode m) {
    return m == PhaseMode::Global ? "global" : m == PhaseMode::None ? "none" : "virtual_z";
}

}  // namespace detail

/// Leakage-aware average gate fidelity on the computational subspace.
inline FidelityReport average_gate_fidelity(const Mat& U, const Mat& target, const SubspaceSpec& s,
                                            PhaseMode mode = PhaseMode::Global) {
    s.validate(static_cast<int>(U.rows()));
    const int dc = s.size();
    if (target.rows() != dc || target.cols() != dc) throw ModelError("target dimension must match subspace");
    const Mat M = target.adjoint() * restrict_to(U, s);
    const double tmm = (M * M.adjoint()).trace().real();
    const double ov = detail::trace_overlap(M, mode);
    FidelityReport r;
    r.fidelity = (tmm + ov * ov) / (dc * (dc + 1.0));
    r.error = 1.0 - r.fidelity;
    r.leakage = std::clamp(1.0 - tmm / dc, 0.0, 1.0);
    r.phase_corrected = mode != PhaseMode::None;
    r.phase_mode = detail::phase_name(mode);
    return r;
}

struct FidelityBlock {
    Mat U;  ///< block of the direct-sum propagator
    Mat target;
    SubspaceSpec subspace;
};

/// Fidelity of a tensor product of uncoupled subsystems stored as a direct sum:
/// Tr(M M^+) and the trace overlap factorize over blocks.
inline FidelityReport product_gate_fidelity(const std::vector<FidelityBlock>& blocks, PhaseMode mode = PhaseMode::Global) {
    double tmm = 1.0, ov = 1.0, dc = 1.0;
    cplx tr{1.0};
    for (const auto& b : blocks) {
        b.subspace.validate(static_cast<int>(b.U.rows()));
        const Mat M = b.target.adjoint() * restrict_to(b.U, b.subspace);
        tmm *= (M * M.adjoint()).trace().real();
        ov *= detail::trace_overlap(M, mode == PhaseMode::None ? PhaseMode::Global : mode);
        tr *= M.trace();
        dc *= b.subspace.size();
    }
    if (mode == PhaseMode::None) ov = std::max(0.0, tr.real());
    FidelityReport r;
    r.fidelity = (tmm + ov * ov) / (dc * (dc + 1.0));
    r.error = 1.0 - r.fidelity;
    r.leakage = std::clamp(1.0 - tmm / dc, 0.0, 1.0);
    r.phase_corrected = mode != PhaseMode::None;
    r.phase_mode = detail::phase_name(mode);
    return r;
}

inline Mat block(const Mat& U, int offset, int size) { return U.block(offset, offset, size, size); }

/// Rotation exp(-i theta sigma_x / 2) on a qubit.
inline Mat rx(double theta) {
    Mat r(2, 2);
    r << std::cos(0.5 * theta), cplx(0.0, -std::sin(0.5 * theta)), cplx(0.0, -std::sin(0.5 * theta)),
        std::cos(0.5 * theta);
    return r;
}

inline Mat pauli_x() {
    Mat x(2, 2);
    x << 0.0, 1.0, 1.0, 0.0;
    return x;
}

struct SweepSpec {
    std::string variable = "tg";
    double lo = 0.0, hi = 0.0;
    std::size_t points = 0;
    bool log_spacing = false;

    std::vector<double> values() const {
        if (points == 0) throw ConfigError("sweep needs at least one point");
        if (!(std::isfinite(lo) && std::isfinite(hi))) throw ConfigError("sweep range must be finite");
        if (log_spacing && !(lo > 0.0 && hi > 0.0)) throw ConfigError("log sweep needs a positive range");
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
            v[i] = log_spacing ? lo * std::pow(hi / lo, f) : lo + f * (hi - lo);
        }
        return v;
    }
};

struct PointOutcome {
    FidelityReport report;
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
};

struct SweepRow {
    double value = 0.0;
    double error = std::numeric_limits<double>::quiet_NaN();
    double leakage = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    std::string message;
};

/// Evaluate independent sweep points; failures are recorded in-row.
inline std::vector<SweepRow> sweep(const std::vector<double>& values, const std::function<PointOutcome(double)>& point) {
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (double v : values) {
        SweepRow row;
        row.value = v;
        try {
            const PointOutcome o = point(v);
            row.error = o.report.error;
            row.leakage = o.report.leakage;
            row.epsilon = o.epsilon;
            row.converged = o.converged;
        } catch (const std::exception& e) {
            row.message = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<SweepRow> sweep(const SweepSpec& spec, const std::function<PointOutcome(double)>& point) {
    return sweep(spec.values(), point);
}

}  // namespace dragkit

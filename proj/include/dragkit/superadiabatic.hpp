#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hamiltonians.hpp"

namespace dragkit {

struct AdiabaticFrame {
    std::vector<Mat> V;  ///< columns are instantaneous eigenvectors
    std::vector<Mat> D;  ///< diagonal V^+ H V
    std::vector<Mat> I;  ///< inertial term i (dV^+/dt) V
};

namespace detail {

/// Greedy assignment of columns of `cand` to reference columns by largest |overlap|.
inline std::vector<int> match_columns(const Mat& ref, const Mat& cand, std::vector<cplx>& ov) {
    const auto d = static_cast<int>(ref.cols());
    const Mat O = ref.adjoint() * cand;
    std::vector<int> perm(d, -1);
    std::vector<bool> used(d, false);
    ov.assign(d, cplx{});
    std::vector<std::tuple<double, int, int>> pairs;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) pairs.emplace_back(std::abs(O(a, b)), a, b);
    std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });
    int assigned = 0;
    for (const auto& [mag, a, b] : pairs) {
        if (perm[a] >= 0 || used[b]) continue;
        perm[a] = b;
        used[b] = true;
        ov[a] = O(a, b);
        if (++assigned == d) break;
    }
    return perm;
}

}  // namespace detail

/// Instantaneous eigenbasis continued along the grid.
/// Levels are labelled by bare-state overlap at t_0, followed by maximal overlap between neighbouring
/// steps; phases follow discrete parallel transport (<n(t_i)|n(t_i+1)> real positive), then the geometric
/// phase modulo pi is removed at a constant rate, which leaves a constant diagonal in I.
/// A step where some vector keeps overlap > 1/2 with a second candidate is reported as ambiguous.
inline AdiabaticFrame adiabatic_frame(const Series& H) {
    const std::size_t n = H.size();
    if (n < 9) throw DomainError("adiabatic frame needs at least 9 grid points");
    const auto d = H[0].rows();
    AdiabaticFrame f;
    f.V.resize(n);
    f.D.resize(n);
    Mat prev = Mat::Identity(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(H[i]));
        const Mat& vec = es.eigenvectors();
        std::vector<cplx> ov;
        const auto perm = detail::match_columns(prev, vec, ov);
        Mat V(d, d);
        Mat D = Mat::Zero(d, d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const double mag = std::abs(ov[a]);
            double rival = 0.0;
            for (Eigen::Index b = 0; b < d; ++b)
                if (b != perm[a]) rival = std::max(rival, std::abs(prev.col(a).dot(vec.col(b))));
            if (i > 0 && (mag < std::sqrt(0.5) || rival > 0.5))
                throw ContinuationError("eigenvector continuation ambiguous at time step " + std::to_string(i), i);
            cplx phase = mag > 1e-300 ? std::conj(ov[a]) / mag : cplx{1.0};
            V.col(a) = vec.col(perm[a]) * phase;
            D(a, a) = es.eigenvalues()(perm[a]);
        }
        f.V[i] = V;
        f.D[i] = D;
        prev = V;
    }
    // Unwind the transport phase (modulo sign) linearly so vectors that end on a bare state end real.
    const double T = H.grid.tg;
    std::vector<double> rate(static_cast<std::size_t>(d), 0.0);
    for (Eigen::Index a = 0; a < d; ++a) {
        Eigen::Index b = 0;
        const double mag = f.V[n - 1].col(a).cwiseAbs().maxCoeff(&b);
        if (mag < std::sqrt(0.5)) continue;
        double gamma = std::arg(f.V[n - 1](b, a));
        if (gamma > 0.5 * pi) gamma -= pi;
        if (gamma <= -0.5 * pi) gamma += pi;
        rate[static_cast<std::size_t>(a)] = gamma / T;
        for (std::size_t i = 0; i < n; ++i) f.V[i].col(a) *= std::polar(1.0, -gamma * H.grid.t(i) / T);
    }
    // I_mn = -i <m|dH/dt|n> / (E_n - E_m) off the diagonal. Differentiating H rather than V keeps
    // the small off-diagonal elements at full relative precision near the pulse edges.
    const auto dH = fd_derivative(H.m, H.grid.dt(), 7);
    std::vector<Mat> dVh;
    f.I.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat K = f.V[i].adjoint() * dH[i] * f.V[i];
        const double scale = std::max(1.0, op_norm(H[i]));
        Mat I = Mat::Zero(d, d);
        for (Eigen::Index a = 0; a < d; ++a) {
            I(a, a) = -rate[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < d; ++b) {
                if (a == b) continue;
                const double gap = (f.D[i](b, b) - f.D[i](a, a)).real();
                if (std::abs(gap) > 1e-8 * scale) {
                    I(a, b) = -I1 * K(a, b) / gap;
                } else {
                    if (dVh.empty()) {
                        std::vector<Mat> Vh(n);
                        for (std::size_t k = 0; k < n; ++k) Vh[k] = f.V[k].adjoint();
                        dVh = fd_derivative(Vh, H.grid.dt(), 7);
                    }
                    I(a, b) = (I1 * dVh[i] * f.V[i])(a, b);
                }
            }
        }
        f.I[i] = hermitian_part(I);
    }
    return f;
}

inline Series sample_hamiltonian(const std::function<Mat(double)>& H, const TimeGrid& g) {
    Series s{g, {}};
    s.m.reserve(g.points());
    for (std::size_t i = 0; i <= g.n_steps; ++i) s.m.push_back(H(g.t(i)));
    return s;
}

inline Series sample_hamiltonian(const SystemModel& m, const ControlSchedule& c, const TimeGrid& g) {
    return sample_hamiltonian([&](double t) { return assemble(m, c, t); }, g);
}

inline double frobenius(const Mat& a) { return a.norm(); }

inline double integrate_norm(const std::vector<Mat>& xs, double dt) {
    std::vector<double> v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) v[i] = xs[i].norm();
    const auto w = simpson_weights(xs.size() - 1, dt);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += w[i] * v[i];
    return acc;
}

/// Frames j = 0..N with W_j = V_0 V_1 ... V_j.
struct FrameSequence {
    TimeGrid grid;
    std::vector<std::vector<Mat>> V, D, I, W;
    std::vector<double> inertial_integral;
    int diverged_at = -1;  ///< first frame whose integrated inertial norm does not decrease, -1 if none
    std::string gauge = "bare-state labels at t=0, maximal-overlap continuation, parallel-transport phases, geometric phase mod pi removed at a constant rate";

    int frames() const { return static_cast<int>(V.size()); }
    std::size_t points() const { return V.empty() ? 0 : V[0].size(); }
};

namespace detail {

inline void push_frame(FrameSequence& fs, AdiabaticFrame&& f) {
    const std::size_t n = f.V.size();
    std::vector<Mat> W(n);
    for (std::size_t i = 0; i < n; ++i) W[i] = fs.W.empty() ? f.V[i] : Mat(fs.W.back()[i] * f.V[i]);
    fs.inertial_integral.push_back(integrate_norm(f.I, fs.grid.dt()));
    const std::size_t j = fs.inertial_integral.size() - 1;
    if (fs.diverged_at < 0 && j > 0 && fs.inertial_integral[j] >= fs.inertial_integral[j - 1] &&
        fs.inertial_integral[j] > 0.0)
        fs.diverged_at = static_cast<int>(j);
    fs.V.push_back(std::move(f.V));
    fs.D.push_back(std::move(f.D));
    fs.I.push_back(std::move(f.I));
    fs.W.push_back(std::move(W));
}

}  // namespace detail

/// H_{j+1} = V_j^+ H_j V_j + i (dV_j^+/dt) V_j = D_j + I_j, diagonalized again, for j < N.
inline FrameSequence superadiabatic_iterate(const Series& H0, int N) {
    if (N < 1) throw DomainError("superadiabatic iteration needs N >= 1");
    FrameSequence fs;
    fs.grid = H0.grid;
    Series H = H0;
    for (int j = 0; j <= N; ++j) {
        AdiabaticFrame f = adiabatic_frame(H);
        if (j < N)
            for (std::size_t i = 0; i < H.size(); ++i) H.m[i] = f.D[i] + f.I[i];
        detail::push_frame(fs, std::move(f));
    }
    return fs;
}

struct QualityReport {
    std::vector<double> Q;
    std::vector<std::vector<double>> norm_D, norm_I;
    std::vector<bool> transitionless;
    int optimal = 0;
    static constexpr double floor = 1e-30;
};

/// Q_j = sum_i dt ||D_j(t_i)||_F / max(||I_j(t_i)||_F, 1e-30).
inline QualityReport quality_factor(const FrameSequence& fs) {
    QualityReport r;
    const double dt = fs.grid.dt();
    for (int j = 0; j < fs.frames(); ++j) {
        std::vector<double> nd, ni;
        double q = 0.0, maxd = 0.0, maxi = 0.0;
        for (std::size_t i = 0; i < fs.points(); ++i) {
            nd.push_back(fs.D[j][i].norm());
            ni.push_back(fs.I[j][i].norm());
            q += dt * nd.back() / std::max(ni.back(), QualityReport::floor);
            maxd = std::max(maxd, nd.back());
            maxi = std::max(maxi, ni.back());
        }
        r.Q.push_back(q);
        r.norm_D.push_back(std::move(nd));
        r.norm_I.push_back(std::move(ni));
        r.transitionless.push_back(maxi <= 1e-13 * std::max(1.0, maxd));
    }
    r.optimal = static_cast<int>(std::max_element(r.Q.begin(), r.Q.end()) - r.Q.begin());
    return r;
}

/// Lab-frame correction -W_j I_j W_j^+ that makes frame j transitionless.
inline Series counterdiabatic_full(const FrameSequence& fs, int j) {
    if (j < 0 || j >= fs.frames()) throw DomainError("frame index out of range");
    Series out{fs.grid, {}};
    for (std::size_t i = 0; i < fs.points(); ++i)
        out.m.push_back(hermitian_part(-fs.W[j][i] * fs.I[j][i] * fs.W[j][i].adjoint()));
    return out;
}

struct Projection {
    std::vector<std::vector<cplx>> u;  ///< u_k(t) = -i <from_k| W I W^+ |to_k>
    std::vector<std::vector<cplx>> field;  ///< channel-unit field Omega_k = -2 <to_k|W I W^+|from_k> / lambda_k
    Series correction;                 ///< Hermitian lab-frame correction
    Series I_red;                      ///< I_j + W^+ correction W
};

namespace detail {

inline void check_disjoint(const std::vector<ControlOp>& ops) {
    std::set<std::pair<int, int>> seen;
    for (const auto& op : ops) {
        const auto key = std::minmax(op.from, op.to);
        if (!seen.insert(key).second) throw ConfigError("control operators overlap on one transition");
    }
}

/// Removes the components of the lab-frame error E on the listed transitions.
inline Projection project_error(const std::vector<Mat>& I, const std::vector<Mat>& W, const TimeGrid& g,
                                const std::vector<ControlOp>& ops) {
    check_disjoint(ops);
    Projection p;
    p.u.assign(ops.size(), {});
    p.field.assign(ops.size(), {});
    p.correction.grid = g;
    p.I_red.grid = g;
    for (std::size_t i = 0; i < I.size(); ++i) {
        const Mat E = W[i] * I[i] * W[i].adjoint();
        const auto d = E.rows();
        Mat C = Mat::Zero(d, d);
        for (std::size_t k = 0; k < ops.size(); ++k) {
            const auto& op = ops[k];
            if (op.from >= d || op.to >= d) throw ModelError("control level out of range");
            const cplx c = E(op.from, op.to);
            C(op.from, op.to) -= c;
            C(op.to, op.from) -= std::conj(c);
            p.u[k].push_back(-I1 * c);
            p.field[k].push_back(-2.0 * std::conj(c) / op.coupling);
        }
        p.correction.m.push_back(C);
        p.I_red.m.push_back(I[i] + W[i].adjoint() * C * W[i]);
    }
    return p;
}

}  // namespace detail

/// Overlap of the frame-j diabatic error with the available single-transition controls.
inline Projection project_to_controls(const FrameSequence& fs, int j, const std::vector<ControlOp>& controls) {
    if (j < 0 || j >= fs.frames()) throw DomainError("frame index out of range");
    return detail::project_error(fs.I[j], fs.W[j], fs.grid, controls);
}

/// Frame chain in which each frame's inertial term is reduced by a lab-frame correction before
/// the next diagonalization.
struct ReducedChain {
    FrameSequence frames;
    std::vector<Series> I_red;
    std::vector<Series> corrections;
    std::vector<double> max_I_red;
};

using CorrectionFn = std::function<Series(int j, const FrameSequence& fs)>;

inline ReducedChain reduced_iterate(const Series& H0, int N, const CorrectionFn& correction) {
    if (N < 1) throw DomainError("need N >= 1 frames");
    ReducedChain rc;
    rc.frames.grid = H0.grid;
    Series H = H0;
    for (int j = 0; j < N; ++j) {
        detail::push_frame(rc.frames, adiabatic_frame(H));
        Series C = correction(j, rc.frames);
        Series red{H0.grid, {}};
        double mx = 0.0;
        for (std::size_t i = 0; i < H.size(); ++i) {
            const Mat& W = rc.frames.W[j][i];
            red.m.push_back(rc.frames.I[j][i] + W.adjoint() * C[i] * W);
            mx = std::max(mx, red.m.back().norm());
            H.m[i] = rc.frames.D[j][i] + red.m.back();
        }
        rc.I_red.push_back(std::move(red));
        rc.corrections.push_back(std::move(C));
        rc.max_I_red.push_back(mx);
    }
    return rc;
}

/// Iterated projection onto independent controls: frame j error projected and removed, then diagonalized.
inline ReducedChain iterate_projected(const Series& H0, int N, const std::vector<ControlOp>& controls) {
    return reduced_iterate(H0, N, [&](int j, const FrameSequence& fs) {
        return detail::project_error(fs.I[j], fs.W[j], fs.grid, controls).correction;
    });
}

struct OverconstrainedResult {
    std::vector<cplx> coefficients;          ///< c_j in v_j(t) = c_j phi_j(t)
    std::vector<std::vector<cplx>> v;        ///< per-frame field contributions v_j(t)
    std::vector<cplx> u;                     ///< shared correction field sum_j v_j(t)
    double residual = 0.0;                   ///< max |<m|I_red_{N-1}|n>| over time and flagged pairs
    double initial_error = 0.0;              ///< same quantity for the uncorrected frame chain
    double condition = 0.0;
    int iterations = 0;
};

namespace detail {

/// Lab operator for a shared complex field v on transitions with <to|H|from> = lambda v / 2.
inline Mat shared_operator(const std::vector<ControlOp>& ops, cplx v, Eigen::Index d) {
    Mat C = Mat::Zero(d, d);
    for (const auto& op : ops) {
        C(op.to, op.from) += 0.5 * op.coupling * v;
        C(op.from, op.to) += 0.5 * op.coupling * std::conj(v);
    }
    return C;
}

/// Least-squares shared field cancelling E on the listed transitions.
inline cplx shared_projection(const std::vector<ControlOp>& ops, const Mat& E) {
    cplx num{};
    double den = 0.0;
    for (const auto& op : ops) {
        num += op.coupling * E(op.to, op.from);
        den += op.coupling * op.coupling;
    }
    return -2.0 * num / den;
}

}  // namespace detail

/// Simultaneous constraints for transitions sharing one field u = sum_j v_j.
/// v_j(t) = c_j phi_j(t), with phi_j the shared-field projection of the uncorrected frame-j error;
/// the constant c_j are chosen by Gauss-Newton so the flagged elements of the reduced inertial term of
/// the last frame vanish at all grid points in the least-squares sense.
inline OverconstrainedResult overconstrained_solve(const Series& H0, const std::vector<ControlOp>& shared,
                                                   const std::vector<std::pair<int, int>>& flagged, int N,
                                                   int max_iterations = 30) {
    if (flagged.empty()) throw DomainError("no flagged transitions");
    if (N < static_cast<int>(flagged.size())) throw DomainError("need N >= number of flagged transitions");
    const auto d = H0[0].rows();
    const std::size_t n = H0.size();
    const FrameSequence base = superadiabatic_iterate(H0, std::max(1, N - 1));
    std::vector<std::vector<cplx>> phi(N, std::vector<cplx>(n));
    for (int j = 0; j < N; ++j)
        for (std::size_t i = 0; i < n; ++i)
            phi[j][i] = detail::shared_projection(shared, base.W[j][i] * base.I[j][i] * base.W[j][i].adjoint());
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, op_norm(H0[i]));
    for (int j = 0; j < N; ++j) {
        double peak = 0.0;
        for (const auto& v : phi[j]) peak = std::max(peak, std::abs(v));
        if (peak <= 1e-12 * scale)
            throw IllConditionedError("frame " + std::to_string(j) + " has no diabatic error to scale",
                                      std::numeric_limits<double>::infinity());
    }

    auto residual_vec = [&](const std::vector<cplx>& c) {
        const ReducedChain rc = reduced_iterate(H0, N, [&](int j, const FrameSequence& fs) {
            Series C{fs.grid, {}};
            for (std::size_t i = 0; i < n; ++i) C.m.push_back(detail::shared_operator(shared, c[j] * phi[j][i], d));
            return C;
        });
        const Series& last = rc.I_red.back();
        Eigen::VectorXd r(static_cast<Eigen::Index>(2 * n * flagged.size()));
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& [a, b] : flagged) {
                r(k++) = last[i](a, b).real();
                r(k++) = last[i](a, b).imag();
            }
        return r;
    };
    auto max_abs = [&](const Eigen::VectorXd& r) {
        double m = 0.0;
        for (Eigen::Index k = 0; k + 1 < r.size(); k += 2) m = std::max(m, std::hypot(r(k), r(k + 1)));
        return m;
    };

    OverconstrainedResult out;
    out.initial_error = max_abs(residual_vec(std::vector<cplx>(N, cplx{})));
    std::vector<cplx> c(N, cplx{1.0});
    Eigen::VectorXd r = residual_vec(c);
    for (int it = 0; it < max_iterations; ++it) {
        out.iterations = it + 1;
        Eigen::MatrixXd J(r.size(), 2 * N);
        for (int p = 0; p < 2 * N; ++p) {
            const double h = 1e-6 * std::max(1.0, std::abs(c[p / 2]));
            auto cp = c, cm = c;
            const cplx step = (p % 2 == 0) ? cplx(h, 0.0) : cplx(0.0, h);
            cp[p / 2] += step;
            cm[p / 2] -= step;
            J.col(p) = (residual_vec(cp) - residual_vec(cm)) / (2.0 * h);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        out.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
        if (out.condition > 1e12)
            throw IllConditionedError("overconstrained system is singular (condition " + std::to_string(out.condition) +
                                          ")",
                                      out.condition);
        const Eigen::VectorXd dx = svd.solve(-r);
        for (int j = 0; j < N; ++j) c[j] += cplx(dx(2 * j), dx(2 * j + 1));
        r = residual_vec(c);
        if (dx.norm() < 1e-12 * (1.0 + Eigen::Map<const Eigen::VectorXd>(reinterpret_cast<const double*>(c.data()), 2 * N).norm()))
            break;
    }
    out.coefficients = c;
    out.residual = max_abs(r);
    out.v.assign(N, std::vector<cplx>(n));
    out.u.assign(n, cplx{});
    for (int j = 0; j < N; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            out.v[j][i] = c[j] * phi[j][i];
            out.u[i] += out.v[j][i];
        }
    return out;
}

}  // namespace dragkit

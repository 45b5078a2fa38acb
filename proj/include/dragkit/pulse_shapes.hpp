#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <nlohmann/json.hpp>

#include "linalg.hpp"

namespace dragkit {

using json = nlohmann::json;

inline json complex_to_json(cplx z) {
    if (z.imag() == 0.0) return z.real();
    return json::array({z.real(), z.imag()});
}

inline cplx complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError("expected a number or [re, im] pair");
}

namespace detail {

struct Node {
    virtual ~Node() = default;
    virtual cplx eval(double t, int order) const = 0;
    virtual double tg() const = 0;
    virtual int boundary_order() const = 0;
    virtual int max_order() const { return 64; }
    virtual json to_json() const = 0;
};

inline double binom(int n, int k) { return boost::math::binomial_coefficient<double>(n, k); }

/// Probabilists' Hermite polynomial He_k(x).
inline double hermite_e(int k, double x) {
    double h0 = 1.0, h1 = x;
    if (k == 0) return h0;
    for (int n = 1; n < k; ++n) {
        const double h2 = x * h1 - n * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

/// k-th derivative of cos(w t + phase).
inline double cos_derivative(double w, double t, double phase, int k) {
    return std::pow(w, k) * std::cos(w * t + phase + 0.5 * pi * k);
}

/// Unit-peak Gaussian with optional boundary removal.
/// boundary_order < 0: plain exp(-(t-tg/2)^2/2s^2).
/// boundary_order >= 0: (G - G0)/(1 - G0) times sin^{2m}(pi t/tg), m = ceil(N/2).
struct GaussianCore {
    double sigma, tg;
    int nb;
    double g0 = 0.0;
    int m = 0;

    GaussianCore(double s, double t, int n) : sigma(s), tg(t), nb(n) {
        if (!(s > 0.0) || !(t > 0.0)) throw DomainError("gaussian needs sigma > 0 and tg > 0");
        if (nb >= 0) {
            g0 = std::exp(-0.5 * (0.5 * tg / sigma) * (0.5 * tg / sigma));
            if (1.0 - g0 < 1e-12) throw DomainError("sigma too large for boundary removal");
            m = (nb + 1) / 2;
        }
    }

    double gauss(double t, int k) const {
        const double x = (t - 0.5 * tg) / sigma;
        const double g = std::exp(-0.5 * x * x);
        const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        return sgn * std::pow(sigma, -k) * hermite_e(k, x) * g;
    }

    /// k-th derivative of sin^{2m}(a t) as a sum of c sin^p cos^q, evaluated without cancellation near 0 and tg.
    double window(double t, int k) const {
        if (m == 0) return k == 0 ? 1.0 : 0.0;
        const double a = pi / tg;
        const int top = 2 * m + k;
        std::vector<double> c(static_cast<std::size_t>((top + 1) * (top + 1)), 0.0);
        auto at = [&](int p, int q) -> double& { return c[static_cast<std::size_t>(p * (top + 1) + q)]; };
        at(2 * m, 0) = 1.0;
        for (int r = 0; r < k; ++r) {
            std::vector<double> next(c.size(), 0.0);
            auto nx = [&](int p, int q) -> double& { return next[static_cast<std::size_t>(p * (top + 1) + q)]; };
            for (int p = 0; p <= top; ++p)
                for (int q = 0; q <= top; ++q) {
                    const double v = at(p, q);
                    if (v == 0.0) continue;
                    if (p > 0) nx(p - 1, q + 1) += a * p * v;
                    if (q > 0) nx(p + 1, q - 1) -= a * q * v;
                }
            c.swap(next);
        }
        const double sn = std::sin(a * t), cs = std::cos(a * t);
        double acc = 0.0;
        for (int p = 0; p <= top; ++p)
            for (int q = 0; q <= top; ++q)
                if (at(p, q) != 0.0) acc += at(p, q) * std::pow(sn, p) * std::pow(cs, q);
        return acc;
    }

    double eval(double t, int k) const {
        if (nb < 0) return gauss(t, k);
        if (k == 0 && (t <= 0.0 || t >= tg)) return 0.0;
        double acc = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double gj = (j == 0) ? gauss(t, 0) - g0 : gauss(t, j);
            acc += binom(k, j) * gj * window(t, k - j);
        }
        return acc / (1.0 - g0);
    }
};

struct GaussianNode final : Node {
    double amplitude;
    GaussianCore core;
    GaussianNode(double a, double s, double t, int nb) : amplitude(a), core(s, t, nb) {}
    cplx eval(double t, int k) const override { return amplitude * core.eval(t, k); }
    double tg() const override { return core.tg; }
    int boundary_order() const override { return core.nb; }
    json to_json() const override {
        return {{"family", "gaussian"},
                {"params", {{"amplitude", amplitude}, {"sigma", core.sigma}, {"tg", core.tg}}},
                {"boundary_order", core.nb}};
    }
};

struct SidebandGaussianNode final : Node {
    double amplitude, omega_x;
    GaussianCore core;
    SidebandGaussianNode(double a, double s, double t, double w, int nb)
        : amplitude(a), omega_x(w), core(s, t, nb) {}
    double mod(double t, int k) const {
        const double tau = t - 0.5 * core.tg;
        if (k == 0) return 1.0 - std::cos(omega_x * tau);
        return -cos_derivative(omega_x, tau, 0.0, k);
    }
    cplx eval(double t, int k) const override {
        double acc = 0.0;
        for (int j = 0; j <= k; ++j) acc += binom(k, j) * core.eval(t, j) * mod(t, k - j);
        return amplitude * acc;
    }
    double tg() const override { return core.tg; }
    int boundary_order() const override { return core.nb; }
    json to_json() const override {
        return {{"family", "sideband_gaussian"},
                {"params",
                 {{"amplitude", amplitude}, {"sigma", core.sigma}, {"tg", core.tg}, {"omega_x", omega_x}}},
                {"boundary_order", core.nb}};
    }
};

struct SineBasisNode final : Node {
    double tg_;
    std::vector<double> coeffs;
    SineBasisNode(double t, std::vector<double> c) : tg_(t), coeffs(std::move(c)) {
        if (!(t > 0.0)) throw DomainError("sine basis needs tg > 0");
    }
    cplx eval(double t, int k) const override {
        double acc = 0.0;
        for (std::size_t h = 0; h < coeffs.size(); ++h) {
            const double w = static_cast<double>(h + 1) * pi / tg_;
            acc += coeffs[h] * cos_derivative(w, t, -0.5 * pi, k);
        }
        return acc;
    }
    double tg() const override { return tg_; }
    int boundary_order() const override { return 0; }
    json to_json() const override {
        return {{"family", "sine_basis"}, {"params", {{"tg", tg_}, {"coefficients", coeffs}}}, {"boundary_order", 0}};
    }
};

struct ConstantNode final : Node {
    double tg_;
    cplx value;
    ConstantNode(double t, cplx v) : tg_(t), value(v) {
        if (!(t > 0.0)) throw DomainError("constant waveform needs tg > 0");
    }
    cplx eval(double, int k) const override { return k == 0 ? value : cplx{}; }
    double tg() const override { return tg_; }
    int boundary_order() const override { return value == cplx{} ? 64 : -1; }
    json to_json() const override {
        return {{"family", "constant"}, {"params", {{"tg", tg_}, {"value", complex_to_json(value)}}},
                {"boundary_order", -1}};
    }
};

struct SampledNode final : Node {
    static constexpr int kMaxOrder = 4;
    double tg_;
    int nb;
    std::vector<std::vector<cplx>> table;

    SampledNode(double t, std::vector<cplx> v, int n) : tg_(t), nb(n) {
        if (!(t > 0.0)) throw DomainError("sampled waveform needs tg > 0");
        if (v.size() < 5) throw DomainError("sampled waveform needs at least 5 samples");
        const double dt = tg_ / static_cast<double>(v.size() - 1);
        table.push_back(std::move(v));
        for (int r = 1; r <= kMaxOrder; ++r) table.push_back(fd_derivative(table.back(), dt));
    }
    std::size_t n() const { return table[0].size() - 1; }
    int max_order() const override { return kMaxOrder; }

    cplx eval(double t, int k) const override {
        if (k > kMaxOrder) throw UnsupportedError("sampled waveforms support derivatives up to order 4");
        if (table[0].size() < static_cast<std::size_t>(2 * k + 1))
            throw DomainError("sampled grid too short for requested derivative order");
        const auto& f = table[static_cast<std::size_t>(k)];
        const double s = t / tg_ * static_cast<double>(n());
        const double fl = std::floor(s);
        if (s == fl) return f[static_cast<std::size_t>(std::clamp(fl, 0.0, static_cast<double>(n())))];
        long i0 = static_cast<long>(fl) - 1;
        i0 = std::clamp(i0, 0L, static_cast<long>(n()) - 3);
        cplx acc{};
        for (long a = 0; a < 4; ++a) {
            double l = 1.0;
            for (long b = 0; b < 4; ++b)
                if (b != a) l *= (s - static_cast<double>(i0 + b)) / static_cast<double>(a - b);
            acc += l * f[static_cast<std::size_t>(i0 + a)];
        }
        return acc;
    }
    double tg() const override { return tg_; }
    int boundary_order() const override { return nb; }
    json to_json() const override {
        json vals = json::array();
        for (const auto& z : table[0]) vals.push_back(complex_to_json(z));
        return {{"family", "sampled"}, {"params", {{"tg", tg_}, {"values", vals}}}, {"boundary_order", nb}};
    }
};

}  // namespace detail

/// Control envelope on [0, tg] with derivative access. Immutable value type.
class Waveform {
public:
    Waveform() = default;
    explicit Waveform(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}

    bool empty() const { return !node_; }
    double tg() const { return node().tg(); }
    int boundary_order() const { return node().boundary_order(); }
    int max_order() const { return node().max_order(); }
    json to_json() const { return node().to_json(); }

    /// Value (order 0) or analytic/finite-difference derivative at t.
    cplx eval(double t, int order = 0) const {
        const double T = tg();
        const double slack = 1e-12 * T;
        if (!(t >= -slack && t <= T + slack)) throw DomainError("time outside [0, tg]");
        return node().eval(std::clamp(t, 0.0, T), order);
    }
    cplx operator()(double t) const { return eval(t, 0); }

    Waveform derivative(int r) const;

    const detail::Node& node() const {
        if (!node_) throw DomainError("empty waveform");
        return *node_;
    }
    const std::shared_ptr<const detail::Node>& ptr() const { return node_; }

private:
    std::shared_ptr<const detail::Node> node_;
};

namespace detail {

inline void check_same_tg(double a, double b) {
    if (std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b)))
        throw DomainError("waveforms must share tg");
}

struct SumNode final : Node {
    std::vector<std::pair<cplx, Waveform>> terms;
    explicit SumNode(std::vector<std::pair<cplx, Waveform>> t) : terms(std::move(t)) {
        if (terms.empty()) throw DomainError("sum needs at least one term");
        for (const auto& [c, w] : terms) check_same_tg(w.tg(), terms.front().second.tg());
    }
    cplx eval(double t, int k) const override {
        cplx acc{};
        for (const auto& [c, w] : terms) acc += c * w.node().eval(t, k);
        return acc;
    }
    double tg() const override { return terms.front().second.tg(); }
    int boundary_order() const override {
        int b = 64;
        for (const auto& [c, w] : terms) b = std::min(b, w.boundary_order());
        return b;
    }
    int max_order() const override {
        int b = 64;
        for (const auto& [c, w] : terms) b = std::min(b, w.max_order());
        return b;
    }
    json to_json() const override {
        json arr = json::array();
        for (const auto& [c, w] : terms) arr.push_back({{"coeff", complex_to_json(c)}, {"waveform", w.to_json()}});
        return {{"family", "sum"}, {"params", {{"terms", arr}}}, {"boundary_order", boundary_order()}};
    }
};

struct ProductNode final : Node {
    Waveform a, b;
    ProductNode(Waveform x, Waveform y) : a(std::move(x)), b(std::move(y)) { check_same_tg(a.tg(), b.tg()); }
    cplx eval(double t, int k) const override {
        cplx acc{};
        for (int j = 0; j <= k; ++j) acc += binom(k, j) * a.node().eval(t, j) * b.node().eval(t, k - j);
        return acc;
    }
    double tg() const override { return a.tg(); }
    int boundary_order() const override { return std::max(a.boundary_order(), b.boundary_order()); }
    int max_order() const override { return std::min(a.max_order(), b.max_order()); }
    json to_json() const override {
        return {{"family", "product"},
                {"params", {{"factors", json::array({a.to_json(), b.to_json()})}}},
                {"boundary_order", boundary_order()}};
    }
};

struct DerivativeNode final : Node {
    Waveform base;
    int r;
    DerivativeNode(Waveform w, int order) : base(std::move(w)), r(order) {}
    cplx eval(double t, int k) const override { return base.node().eval(t, k + r); }
    double tg() const override { return base.tg(); }
    int boundary_order() const override { return std::max(-1, base.boundary_order() - r); }
    int max_order() const override { return base.max_order() - r; }
    json to_json() const override {
        return {{"family", "derivative"},
                {"params", {{"order", r}, {"base", base.to_json()}}},
                {"boundary_order", boundary_order()}};
    }
};

}  // namespace detail

/// r-th time derivative as a new waveform.
inline Waveform Waveform::derivative(int r) const {
    if (r < 0) throw DomainError("derivative order must be >= 0");
    if (r == 0) return *this;
    if (r > max_order()) throw UnsupportedError("derivative order exceeds what this waveform family supports");
    return Waveform(std::make_shared<detail::DerivativeNode>(*this, r));
}

inline Waveform derivative(const Waveform& w, int r) { return w.derivative(r); }
inline cplx eval_waveform(const Waveform& w, double t) { return w(t); }

inline Waveform operator+(const Waveform& a, const Waveform& b) {
    return Waveform(std::make_shared<detail::SumNode>(
        std::vector<std::pair<cplx, Waveform>>{{cplx{1.0}, a}, {cplx{1.0}, b}}));
}
inline Waveform operator*(cplx c, const Waveform& a) {
    return Waveform(std::make_shared<detail::SumNode>(std::vector<std::pair<cplx, Waveform>>{{c, a}}));
}
inline Waveform operator*(double c, const Waveform& a) { return cplx{c} * a; }
inline Waveform operator-(const Waveform& a, const Waveform& b) { return a + (-1.0) * b; }
inline Waveform operator*(const Waveform& a, const Waveform& b) {
    return Waveform(std::make_shared<detail::ProductNode>(a, b));
}

inline Waveform linear_combination(const std::vector<std::pair<cplx, Waveform>>& terms) {
    return Waveform(std::make_shared<detail::SumNode>(terms));
}

// Families.

/// Gaussian centred at tg/2. boundary_order < 0 keeps the raw Gaussian.
inline Waveform gaussian(double amplitude, double sigma, double tg, int boundary_order = -1) {
    return Waveform(std::make_shared<detail::GaussianNode>(amplitude, sigma, tg, boundary_order));
}

/// r-th derivative of a Gaussian.
inline Waveform gaussian_derivative(double amplitude, double sigma, double tg, int r, int boundary_order = -1) {
    return gaussian(amplitude, sigma, tg, boundary_order).derivative(r);
}

inline Waveform sideband_gaussian(double amplitude, double sigma, double tg, double omega_x, int boundary_order = -1) {
    return Waveform(std::make_shared<detail::SidebandGaussianNode>(amplitude, sigma, tg, omega_x, boundary_order));
}

/// u(t) = A0 exp(-(t-tg/2)^2/2s^2) (1 - cos(wx (t - tg/2))).
inline Waveform wahwah_envelope(double A0, double sigma, double tg, double omega_x, int boundary_order = -1) {
    return sideband_gaussian(A0, sigma, tg, omega_x, boundary_order);
}

/// sum_h c_h sin(h pi t / tg), h = 1..
inline Waveform sine_basis(double tg, std::vector<double> coefficients) {
    return Waveform(std::make_shared<detail::SineBasisNode>(tg, std::move(coefficients)));
}

inline Waveform constant(double tg, cplx value) {
    return Waveform(std::make_shared<detail::ConstantNode>(tg, value));
}

/// Uniform samples at t_i = i tg / (n - 1).
inline Waveform sampled(double tg, std::vector<cplx> values, int boundary_order = -1) {
    return Waveform(std::make_shared<detail::SampledNode>(tg, std::move(values), boundary_order));
}

inline Waveform sample_waveform(const Waveform& w, std::size_t n_steps, int boundary_order = -1) {
    std::vector<cplx> v(n_steps + 1);
    const TimeGrid g(n_steps, w.tg());
    for (std::size_t i = 0; i <= n_steps; ++i) v[i] = w(g.t(i));
    return sampled(w.tg(), std::move(v), boundary_order);
}

inline Waveform waveform_from_json(const json& j) {
    const std::string fam = j.at("family").get<std::string>();
    const json& p = j.contains("params") ? j.at("params") : json::object();
    const int nb = j.value("boundary_order", -1);
    if (fam == "gaussian")
        return gaussian(p.value("amplitude", 1.0), p.at("sigma").get<double>(), p.at("tg").get<double>(), nb);
    if (fam == "gaussian_derivative")
        return gaussian_derivative(p.value("amplitude", 1.0), p.at("sigma").get<double>(), p.at("tg").get<double>(),
                                   p.at("order").get<int>(), nb);
    if (fam == "sideband_gaussian")
        return sideband_gaussian(p.value("amplitude", 1.0), p.at("sigma").get<double>(), p.at("tg").get<double>(),
                                 p.at("omega_x").get<double>(), nb);
    if (fam == "sine_basis")
        return sine_basis(p.at("tg").get<double>(), p.at("coefficients").get<std::vector<double>>());
    if (fam == "constant") return constant(p.at("tg").get<double>(), complex_from_json(p.at("value")));
    if (fam == "sampled") {
        std::vector<cplx> v;
        for (const auto& z : p.at("values")) v.push_back(complex_from_json(z));
        return sampled(p.at("tg").get<double>(), std::move(v), nb);
    }
    if (fam == "sum") {
        std::vector<std::pair<cplx, Waveform>> terms;
        for (const auto& t : p.at("terms"))
            terms.emplace_back(complex_from_json(t.at("coeff")), waveform_from_json(t.at("waveform")));
        return linear_combination(terms);
    }
    if (fam == "product") {
        const auto& f = p.at("factors");
        if (f.size() != 2) throw ConfigError("product needs two factors");
        return waveform_from_json(f[0]) * waveform_from_json(f[1]);
    }
    if (fam == "derivative") return waveform_from_json(p.at("base")).derivative(p.at("order").get<int>());
    throw ConfigError("unknown waveform family: " + fam);
}

/// Integral of Re w over [0, tg] by adaptive Gauss-Kronrod.
inline double waveform_area(const Waveform& w) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate([&](double t) { return w(t).real(); }, 0.0, w.tg(), 15, 1e-14);
}

inline double waveform_abs_area(const Waveform& w) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate([&](double t) { return std::abs(w(t)); }, 0.0, w.tg(), 15, 1e-14);
}

struct NormalizedWaveform {
    Waveform waveform;
    double scale = 0.0;
};

/// Rescale so that lambda * integral(w) = theta.
inline NormalizedWaveform normalize_rotation_angle(const Waveform& w, double theta, double lambda = 1.0) {
    if (!(waveform_abs_area(w) > 0.0)) throw NormalizationError("waveform has zero area");
    const double area = waveform_area(w);
    if (std::abs(area) < 1e-300 || !(lambda != 0.0)) throw NormalizationError("waveform has zero signed area");
    const double s = theta / (lambda * area);
    return {s * w, s};
}

/// Finite-time Fourier transform F(u, d) = int_0^tg u(t) e^{+i d t} dt, composite Simpson on the grid.
/// The +i kernel makes F(i^r d^-r u^(r), d) = F(u, d) for boundary-vanishing u.
inline cplx finite_time_fourier(const Waveform& w, double delta, const TimeGrid& grid) {
    const auto wt = simpson_weights(grid.n_steps, grid.dt());
    cplx acc{};
    for (std::size_t i = 0; i <= grid.n_steps; ++i) {
        const double t = grid.t(i);
        acc += wt[i] * w(t) * std::exp(cplx(0.0, delta * t));
    }
    return acc;
}

enum class Quadrature { X, Y, Detuning };

inline std::string to_string(Quadrature q) {
    switch (q) {
        case Quadrature::X: return "x";
        case Quadrature::Y: return "y";
        default: return "detuning";
    }
}

inline Quadrature quadrature_from_string(const std::string& s) {
    if (s == "x") return Quadrature::X;
    if (s == "y") return Quadrature::Y;
    if (s == "detuning" || s == "d") return Quadrature::Detuning;
    throw ConfigError("unknown quadrature: " + s);
}

struct ControlEntry {
    int control = 0;
    Quadrature quadrature = Quadrature::X;
    Waveform waveform;
};

/// Control fields on a uniform grid. Channel k carries Omega_k = sum_x w + i sum_y w.
struct ControlSchedule {
    TimeGrid grid;
    std::vector<ControlEntry> entries;
    json provenance = json::object();

    ControlSchedule() = default;
    explicit ControlSchedule(TimeGrid g) : grid(g) {}

    ControlSchedule& add(int control, Quadrature q, Waveform w) {
        if (control < 0) throw DomainError("control index must be >= 0");
        detail::check_same_tg(w.tg(), grid.tg);
        entries.push_back({control, q, std::move(w)});
        return *this;
    }

    int n_controls() const {
        int n = 0;
        for (const auto& e : entries)
            if (e.quadrature != Quadrature::Detuning) n = std::max(n, e.control + 1);
        return n;
    }

    cplx field(int control, double t) const {
        cplx acc{};
        for (const auto& e : entries) {
            if (e.control != control) continue;
            if (e.quadrature == Quadrature::X) acc += e.waveform(t);
            if (e.quadrature == Quadrature::Y) acc += I1 * e.waveform(t);
        }
        return acc;
    }

    double detuning(double t) const {
        double acc = 0.0;
        for (const auto& e : entries)
            if (e.quadrature == Quadrature::Detuning) acc += e.waveform(t).real();
        return acc;
    }

    /// Quadrature-wise prefactor scaling u_x -> sx u_x, u_y -> sy u_y, delta -> sd delta.
    ControlSchedule scaled(double sx, double sy, double sd) const {
        ControlSchedule out(grid);
        out.provenance = provenance;
        for (const auto& e : entries) {
            const double s = e.quadrature == Quadrature::X ? sx : e.quadrature == Quadrature::Y ? sy : sd;
            out.entries.push_back({e.control, e.quadrature, s == 1.0 ? e.waveform : s * e.waveform});
        }
        return out;
    }

    ControlSchedule with_grid(std::size_t n_steps) const {
        ControlSchedule out = *this;
        out.grid = TimeGrid(n_steps, grid.tg);
        return out;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& e : entries)
            arr.push_back({{"control", e.control}, {"quadrature", to_string(e.quadrature)}, {"waveform", e.waveform.to_json()}});
        return {{"grid", {{"n_steps", grid.n_steps}, {"tg", grid.tg}}}, {"entries", arr}, {"provenance", provenance}};
    }

    static ControlSchedule from_json(const json& j) {
        ControlSchedule s(TimeGrid(j.at("grid").at("n_steps").get<std::size_t>(), j.at("grid").at("tg").get<double>()));
        for (const auto& e : j.at("entries"))
            s.add(e.value("control", 0), quadrature_from_string(e.at("quadrature").get<std::string>()),
                  waveform_from_json(e.at("waveform")));
        s.provenance = j.value("provenance", json::object());
        return s;
    }
};

}  // namespace dragkit

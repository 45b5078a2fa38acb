#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pulse_shapes.hpp"

namespace dragkit {

enum class Frame { Rotating, Lab };

/// h = |to><from| driven by channel `channel` with coupling `coupling`.
struct ControlOp {
    int from = 0;
    int to = 1;
    double coupling = 1.0;
    int channel = 0;
};

/// Drift omega_j(t) = excitation_j * delta(t) + drift_j plus single-transition control terms.
struct SystemModel {
    int dim = 0;
    RVec excitation;
    RVec drift;
    std::vector<ControlOp> ops;
    Frame frame = Frame::Rotating;
    double carrier = 0.0;
    std::string name = "custom";
    json units = {{"time", "1/|Delta|"}, {"frequency", "rad/time"}};

    void validate() const {
        if (dim < 1) throw ModelError("model dimension must be >= 1");
        if (excitation.size() != dim || drift.size() != dim) throw ModelError("drift vectors must have length dim");
        for (const auto& op : ops) {
            if (op.from < 0 || op.to < 0 || op.from >= dim || op.to >= dim) throw ModelError("control level out of range");
            if (op.from == op.to) throw ModelError("control operator must couple two distinct levels");
            if (op.channel < 0) throw ModelError("control channel must be >= 0");
        }
        if (frame == Frame::Lab && !(carrier > 0.0)) throw ModelError("lab frame needs a positive carrier");
    }

    int n_channels() const {
        int n = 0;
        for (const auto& op : ops) n = std::max(n, op.channel + 1);
        return n;
    }

    json to_json() const {
        json o = json::array();
        for (const auto& op : ops)
            o.push_back({{"from", op.from}, {"to", op.to}, {"coupling", op.coupling}, {"channel", op.channel}});
        return {{"schema_version", 1},
                {"name", name},
                {"dimension", dim},
                {"excitation", std::vector<double>(excitation.data(), excitation.data() + excitation.size())},
                {"anharmonicities", std::vector<double>(drift.data(), drift.data() + drift.size())},
                {"couplings", o},
                {"frame", frame == Frame::Lab ? "lab" : "rotating"},
                {"carrier", carrier},
                {"units", units}};
    }
};

/// Computational levels; the rest count as leakage.
struct SubspaceSpec {
    std::vector<int> levels{0, 1};

    void validate(int d) const {
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] < 0 || levels[i] >= d) throw ModelError("subspace index out of range");
            for (std::size_t j = 0; j < i; ++j)
                if (levels[i] == levels[j]) throw ModelError("subspace indices must be distinct");
        }
    }
    std::vector<int> leakage(int d) const {
        std::vector<int> out;
        for (int j = 0; j < d; ++j)
            if (std::find(levels.begin(), levels.end(), j) == levels.end()) out.push_back(j);
        return out;
    }
    int size() const { return static_cast<int>(levels.size()); }
};

inline Mat drift_matrix(const SystemModel& m, double delta) {
    Mat h = Mat::Zero(m.dim, m.dim);
    for (int j = 0; j < m.dim; ++j) h(j, j) = m.excitation(j) * delta + m.drift(j);
    return h;
}

/// H for given channel fields Omega_k and detuning at time t.
inline Mat assemble_fields(const SystemModel& m, const std::vector<cplx>& fields, double delta, double t) {
    Mat h = drift_matrix(m, delta);
    for (const auto& op : m.ops) {
        const cplx om = op.channel < static_cast<int>(fields.size()) ? fields[op.channel] : cplx{};
        cplx e;
        if (m.frame == Frame::Rotating) {
            e = 0.5 * op.coupling * om;
        } else {
            e = op.coupling * (om.real() * std::cos(m.carrier * t) + om.imag() * std::sin(m.carrier * t));
        }
        h(op.to, op.from) += e;
        h(op.from, op.to) += std::conj(e);
    }
    return h;
}

/// Rotating frame: <to|H|from> = lambda (u_x + i u_y)/2.
/// Lab frame: (u_x cos(w t) + u_y sin(w t)) on sigma_x of each transition.
inline Mat assemble(const SystemModel& m, const ControlSchedule& c, double t) {
    if (c.n_controls() > std::max(1, m.n_channels())) throw ModelError("schedule drives more channels than the model has");
    std::vector<cplx> f(static_cast<std::size_t>(std::max(1, m.n_channels())));
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = c.field(static_cast<int>(k), t);
    return assemble_fields(m, f, c.detuning(t), t);
}

/// Kerr ladder Delta_j = j(j-1)/2 Delta and couplings lambda_j = lambda_scale sqrt(j+1).
inline SystemModel transmon_preset(int d, double Delta, double lambda_scale = 1.0) {
    if (d < 3) throw ModelError("transmon preset needs d >= 3");
    SystemModel m;
    m.name = "transmon";
    m.dim = d;
    m.excitation = RVec::LinSpaced(d, 0.0, d - 1.0);
    m.drift = RVec::Zero(d);
    for (int j = 0; j < d; ++j) m.drift(j) = 0.5 * j * (j - 1) * Delta;
    for (int j = 0; j + 1 < d; ++j) m.ops.push_back({j, j + 1, lambda_scale * std::sqrt(j + 1.0), 0});
    return m;
}

/// Ratio lambda_1/lambda_0 of the first two ladder couplings.
inline double lambda_ratio(const SystemModel& m) {
    if (m.ops.size() < 2) throw ModelError("model has fewer than two transitions");
    return m.ops[1].coupling / m.ops[0].coupling;
}

/// Two uncoupled qutrits (levels 0-2 and 3-5) on one global field, rotating at qutrit 1.
/// Qutrit 2 is offset by w2 = wq2 - wq1; crowding means w2 + Delta = delta.
inline SystemModel two_qutrit_crosstalk_preset(double wq1, double wq2, double Delta, double delta) {
    if (delta == 0.0) throw ModelError("crosstalk detuning delta must be nonzero");
    const double w2 = wq2 - wq1;
    if (std::abs(w2 + Delta - delta) > 1e-9 * (std::abs(w2) + std::abs(Delta) + std::abs(delta)))
        throw ModelError("crowding condition wq2 + Delta = wq1 + delta violated");
    SystemModel m;
    m.name = "two_qutrit_crosstalk";
    m.dim = 6;
    m.excitation = RVec::Zero(6);
    m.drift.resize(6);
    m.drift << 0.0, 0.0, Delta, 0.0, w2, 2.0 * w2 + Delta;
    const double l1 = std::sqrt(2.0);
    m.ops = {{0, 1, 1.0, 0}, {1, 2, l1, 0}, {3, 4, 1.0, 0}, {4, 5, l1, 0}};
    m.units = {{"time", "ns"}, {"frequency", "rad/ns"}};
    return m;
}

/// Crowded preset with wq1 = 2 pi 5 GHz (only differences matter in the rotating frame).
inline SystemModel two_qutrit_crosstalk_preset(double Delta, double delta) {
    const double wq1 = 2.0 * pi * 5.0;
    return two_qutrit_crosstalk_preset(wq1, wq1 + delta - Delta, Delta, delta);
}

/// H = (w/2) sigma_z-type splitting (ground at -w/2) with counter-rotating drive retained.
inline SystemModel two_level_lab_frame(double w) {
    if (!(w > 0.0)) throw ModelError("lab frame needs w > 0");
    SystemModel m;
    m.name = "two_level_lab";
    m.dim = 2;
    m.excitation = RVec::Zero(2);
    m.drift.resize(2);
    m.drift << -0.5 * w, 0.5 * w;
    m.ops = {{0, 1, 1.0, 0}};
    m.frame = Frame::Lab;
    m.carrier = w;
    return m;
}

/// Restriction to `levels`; controls leaving the set must be absent.
inline SystemModel submodel(const SystemModel& m, const std::vector<int>& levels) {
    SystemModel s = m;
    s.dim = static_cast<int>(levels.size());
    s.excitation.resize(s.dim);
    s.drift.resize(s.dim);
    s.ops.clear();
    auto index = [&](int l) {
        const auto it = std::find(levels.begin(), levels.end(), l);
        return it == levels.end() ? -1 : static_cast<int>(it - levels.begin());
    };
    for (int k = 0; k < s.dim; ++k) {
        s.excitation(k) = m.excitation(levels[k]);
        s.drift(k) = m.drift(levels[k]);
    }
    for (const auto& op : m.ops) {
        const int a = index(op.from), b = index(op.to);
        if ((a < 0) != (b < 0)) throw ModelError("control couples the block to the rest of the model");
        if (a >= 0) s.ops.push_back({a, b, op.coupling, op.channel});
    }
    s.name = m.name + "_block";
    s.validate();
    return s;
}

struct Gap {
    int from, to;
    double value;
};

/// Bare transition energies omega_to - omega_from of every control operator at zero detuning.
inline std::vector<Gap> transition_gaps(const SystemModel& m) {
    std::vector<Gap> g;
    for (const auto& op : m.ops) g.push_back({op.from, op.to, m.drift(op.to) - m.drift(op.from)});
    return g;
}

inline SystemModel model_from_json(const json& j) {
    SystemModel m;
    const std::string preset = j.value("preset", "");
    if (preset == "transmon") {
        m = transmon_preset(j.value("dimension", 3), j.at("Delta").get<double>(), j.value("lambda_scale", 1.0));
    } else if (preset == "two_qutrit_crosstalk") {
        m = j.contains("wq1") ? two_qutrit_crosstalk_preset(j.at("wq1").get<double>(), j.at("wq2").get<double>(),
                                                            j.at("Delta").get<double>(), j.at("delta").get<double>())
                              : two_qutrit_crosstalk_preset(j.at("Delta").get<double>(), j.at("delta").get<double>());
    } else if (preset == "two_level_lab") {
        m = two_level_lab_frame(j.at("carrier").get<double>());
    } else if (!preset.empty()) {
        throw ConfigError("unknown model preset: " + preset);
    } else {
        m.dim = j.at("dimension").get<int>();
        m.excitation = RVec::LinSpaced(m.dim, 0.0, m.dim - 1.0);
        m.drift = RVec::Zero(m.dim);
    }
    if (j.contains("excitation")) {
        const auto v = j.at("excitation").get<std::vector<double>>();
        m.excitation = Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (j.contains("anharmonicities")) {
        const auto v = j.at("anharmonicities").get<std::vector<double>>();
        m.drift = Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (j.contains("couplings")) {
        const auto& c = j.at("couplings");
        if (!c.empty() && c[0].is_number()) {
            if (m.ops.size() != c.size()) {
                m.ops.clear();
                for (std::size_t k = 0; k < c.size(); ++k)
                    m.ops.push_back({static_cast<int>(k), static_cast<int>(k + 1), 1.0, 0});
            }
            for (std::size_t k = 0; k < c.size(); ++k) m.ops[k].coupling = c[k].get<double>();
        } else {
            m.ops.clear();
            for (const auto& o : c)
                m.ops.push_back({o.at("from").get<int>(), o.at("to").get<int>(), o.value("coupling", 1.0),
                                 o.value("channel", 0)});
        }
    }
    if (j.contains("frame")) {
        const std::string f = j.at("frame").get<std::string>();
        if (f != "rotating" && f != "lab") throw ConfigError("frame must be rotating or lab");
        m.frame = f == "lab" ? Frame::Lab : Frame::Rotating;
    }
    if (j.contains("carrier")) m.carrier = j.at("carrier").get<double>();
    if (j.contains("units")) m.units = j.at("units");
    if (j.contains("name")) m.name = j.at("name").get<std::string>();
    m.validate();
    return m;
}

}  // namespace dragkit

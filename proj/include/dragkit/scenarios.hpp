#pragma once

#include <cmath>
#include <string>

#include "calibration.hpp"
#include "drag_synthesis.hpp"

namespace dragkit {

/// Single-transmon pi-pulse study: Gaussian base with sigma = tg/sigma_ratio.
struct TransmonScenario {
    int dim = 3;
    double Delta = -1.0;
    double lambda = std::sqrt(2.0);  ///< lambda_1 / lambda_0
    double theta = pi;
    double sigma_ratio = 4.0;
    int boundary_order = 1;
    double steps_per_unit = 20.0;  ///< initial grid density in units of 1/|Delta|
    EvolveOptions evolve{};
    SecondOrderOptions second_order{};
};

inline SystemModel transmon_model(const TransmonScenario& sc) {
    SystemModel m = transmon_preset(sc.dim, sc.Delta);
    m.ops[1].coupling = sc.lambda * m.ops[0].coupling;
    return m;
}

inline TimeGrid transmon_grid(const TransmonScenario& sc, double tg) {
    return TimeGrid(200 + static_cast<std::size_t>(std::ceil(sc.steps_per_unit * std::abs(sc.Delta) * tg)), tg);
}

inline const std::vector<std::string>& transmon_variants() {
    static const std::vector<std::string> v{"gaussian", "drag1", "drag2"};
    return v;
}

inline ControlSchedule transmon_schedule(const std::string& variant, double tg, const TransmonScenario& sc) {
    const SystemModel m = transmon_model(sc);
    const TimeGrid grid = transmon_grid(sc, tg);
    const Waveform b = base_gaussian(tg, sc.sigma_ratio, sc.boundary_order, sc.theta, m.ops[0].coupling);
    if (variant == "gaussian") {
        ControlSchedule s(grid);
        s.add(0, Quadrature::X, b);
        s.provenance = {{"method", "gaussian"}};
        return s;
    }
    if (variant == "drag1") return first_order_drag(b, transmon_drag_lambda(m), sc.Delta, grid);
    if (variant == "drag2") return second_order_drag(b, m, grid, sc.second_order);
    throw ConfigError("unknown variant: " + variant);
}

inline FidelityReport transmon_report(const std::string& variant, double tg, const TransmonScenario& sc) {
    const SystemModel m = transmon_model(sc);
    const auto r = evolve(m, transmon_schedule(variant, tg, sc), sc.evolve);
    return average_gate_fidelity(r.U, rx(sc.theta), SubspaceSpec{{0, 1}}, PhaseMode::Global);
}

/// Crosstalk study on two qutrits; frequencies in rad/ns.
struct CrosstalkScenario {
    double Delta = -2.0 * pi * 0.3;
    double delta = 2.0 * pi * 0.05;
    double theta = pi;
    WahwahOptions wahwah{};
};

inline ControlSchedule crosstalk_gaussian(double tg, const CrosstalkScenario& sc) {
    const std::size_t n = sc.wahwah.n_steps ? sc.wahwah.n_steps : static_cast<std::size_t>(std::ceil(40.0 * tg));
    ControlSchedule s(TimeGrid(n, tg));
    s.add(0, Quadrature::X, base_gaussian(tg, sc.wahwah.sigma_ratio, sc.wahwah.boundary_order, sc.theta));
    s.provenance = {{"method", "gaussian"}};
    return s;
}

inline FidelityReport crosstalk_report(const ControlSchedule& s, const CrosstalkScenario& sc) {
    return crosstalk_gate_fidelity(two_qutrit_crosstalk_preset(sc.Delta, sc.delta), s, sc.theta, sc.wahwah.phase,
                                   sc.wahwah.tolerance);
}

/// Default tune-up: 3-level transmon, lambda = sqrt 2, Delta = -2 pi 0.3 rad/ns, tg = 12 pi/|Delta| (20 ns),
/// first-order DRAG with detuning as the starting point.
struct CalibrationScenario {
    double Delta = -2.0 * pi * 0.3;
    double lambda = std::sqrt(2.0);
    double tg_units = 12.0 * pi;  ///< tg |Delta|
    double theta = pi;
    double sigma_ratio = 4.0;
    int boundary_order = 1;
    std::size_t n_steps = 500;
    double bound = 0.5;
};

inline CalibrationProblem calibration_problem(const CalibrationScenario& sc) {
    CalibrationProblem p;
    TransmonScenario ts;
    ts.Delta = sc.Delta;
    ts.lambda = sc.lambda;
    p.model = transmon_model(ts);
    p.model.units = {{"time", "ns"}, {"frequency", "rad/ns"}};
    const double tg = sc.tg_units / std::abs(sc.Delta);
    const TimeGrid grid(sc.n_steps, tg);
    const Waveform g = gaussian(1.0, tg / sc.sigma_ratio, tg, sc.boundary_order);
    p.base = first_order_drag_detuned_normalized(g, sc.lambda, sc.Delta, sc.theta, grid);
    p.target = rx(sc.theta);
    p.lower = {-sc.bound, -sc.bound, -sc.bound};
    p.upper = {sc.bound, sc.bound, sc.bound};
    return p;
}

inline json to_json(const CalibrationScenario& sc) {
    return {{"Delta", sc.Delta},         {"lambda", sc.lambda},   {"tg", sc.tg_units / std::abs(sc.Delta)},
            {"tg_units", sc.tg_units},   {"theta", sc.theta},     {"sigma_ratio", sc.sigma_ratio},
            {"boundary_order", sc.boundary_order}, {"n_steps", sc.n_steps}, {"bound", sc.bound}};
}

}  // namespace dragkit

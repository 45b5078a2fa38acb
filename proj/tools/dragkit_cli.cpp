#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dragkit/dragkit.hpp"

namespace fs = std::filesystem;
using namespace dragkit;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Values from --config fill every option not given on the command line.
class Settings {
public:
    explicit Settings(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& flag, const std::string& key, T& ref, const std::string& help) {
        auto* o = app_->add_option(flag, ref, help)->capture_default_str();
        binds_.push_back({key, o, [&ref](const json& v) { ref = v.get<T>(); }, [&ref]() { return json(ref); }});
        return o;
    }
    CLI::Option* flag(const std::string& flag, const std::string& key, bool& ref, const std::string& help) {
        auto* o = app_->add_flag(flag, ref, help);
        binds_.push_back({key, o, [&ref](const json& v) { ref = v.get<bool>(); }, [&ref]() { return json(ref); }});
        return o;
    }

    /// Applies config values, returns the effective settings used for hashing.
    json resolve(const json& config) const {
        json eff = json::object();
        for (const auto& b : binds_) {
            if (b.opt->count() == 0 && config.contains(b.key)) {
                try {
                    b.set(config.at(b.key));
                } catch (const json::exception& e) {
                    throw UsageError("config key '" + b.key + "': " + e.what());
                }
            }
            eff[b.key] = b.get();
        }
        return eff;
    }

private:
    struct Bind {
        std::string key;
        CLI::Option* opt;
        std::function<void(const json&)> set;
        std::function<json()> get;
    };
    CLI::App* app_;
    std::vector<Bind> binds_;
};

cplx parse_complex(const std::string& s) {
    const auto c = s.find(':');
    try {
        if (c == std::string::npos) return {std::stod(s), 0.0};
        return {std::stod(s.substr(0, c)), std::stod(s.substr(c + 1))};
    } catch (const std::exception&) {
        throw UsageError("cannot parse gap '" + s + "' (use re or re:im)");
    }
}

SystemModel load_model(const std::string& path, const SystemModel& fallback) {
    if (path.empty()) return fallback;
    if (!fs::exists(path)) throw UsageError("model file not found: " + path);
    return model_from_json(io::read_json(path));
}

double transmon_Delta(const SystemModel& m) {
    if (m.dim < 3) throw ModelError("model needs at least three levels");
    return m.drift(2) - 2.0 * m.drift(1) + m.drift(0);
}

PhaseMode parse_phase(const std::string& s) {
    if (s == "global") return PhaseMode::Global;
    if (s == "none") return PhaseMode::None;
    if (s == "virtual_z") return PhaseMode::VirtualZ;
    throw UsageError("phase must be global, none or virtual_z");
}

json gate_report_json(const FidelityReport& r) {
    return {{"fidelity", r.fidelity},   {"error", r.error},         {"leakage", r.leakage},
            {"phase_mode", r.phase_mode}, {"formula", FidelityReport::formula}};
}

// ---------------------------------------------------------------- synth
struct SynthArgs {
    std::string method = "first-order-drag", model, version = "1.0";
    double tg = 4 * pi, sigma_ratio = 4.0, theta = pi, Delta = -2 * pi * 0.3, delta = 2 * pi * 0.05, carrier = 1.0;
    double lambda = 0.0, omega_max = 3.0;
    int boundary_order = 1;
    std::size_t steps = 0;
    std::vector<std::string> gaps;
};

int cmd_synth(const SynthArgs& a, const fs::path& out, const json& eff) {
    const std::string hash = io::config_hash(eff);
    const SystemModel m = load_model(a.model, transmon_preset(3, -1.0));
    const std::size_t n = a.steps ? a.steps : 200 + static_cast<std::size_t>(std::ceil(20.0 * a.tg));
    const TimeGrid grid(n, a.tg);
    ControlSchedule s;
    json extra = json::object();
    auto base = [&](int bo) { return base_gaussian(a.tg, a.sigma_ratio, bo, a.theta, m.ops.empty() ? 1.0 : m.ops[0].coupling); };
    if (a.method == "gaussian") {
        s = ControlSchedule(grid);
        s.add(0, Quadrature::X, base(a.boundary_order));
        s.provenance = {{"method", "gaussian"}};
    } else if (a.method == "first-order-drag") {
        const double lam = a.lambda > 0.0 ? a.lambda : transmon_drag_lambda(m);
        s = first_order_drag(base(a.boundary_order), lam, transmon_Delta(m), grid);
    } else if (a.method == "drag-detuned") {
        const double Delta = transmon_Delta(m);
        s = first_order_drag_detuned_normalized(gaussian(1.0, a.tg / a.sigma_ratio, a.tg, a.boundary_order),
                                                a.lambda > 0.0 ? a.lambda : lambda_ratio(m), Delta, a.theta, grid);
    } else if (a.method == "second-order-drag") {
        s = second_order_drag(base(a.boundary_order), m, grid);
    } else if (a.method == "multi-gap") {
        if (a.gaps.empty()) throw UsageError("multi-gap needs --gaps");
        std::vector<cplx> g;
        for (const auto& x : a.gaps) g.push_back(parse_complex(x));
        const int bo = std::max(a.boundary_order, static_cast<int>(g.size()));
        const auto c = derivative_coefficients(g, static_cast<int>(g.size()));
        s = ControlSchedule(grid);
        s.add(0, Quadrature::X, multi_gap_pulse(base(bo), g));
        json coeffs = json::array(), res = json::array();
        for (const auto& ar : c.a) coeffs.push_back(complex_to_json(ar));
        for (double r : c.residuals) res.push_back(r);
        s.provenance = {{"method", "multi-gap"}, {"boundary_order", bo}};
        extra = {{"coefficients", coeffs}, {"residuals", res}, {"condition", c.condition}};
    } else if (a.method == "wahwah") {
        WahwahOptions o;
        o.sigma_ratio = a.sigma_ratio;
        o.boundary_order = a.boundary_order;
        o.n_steps = a.steps;
        o.omega_max = a.omega_max;
        const auto w = wahwah_design(a.tg, a.Delta, a.delta, a.theta, a.version, o);
        s = w.schedule;
        extra = {{"error", w.error}};
        if (!w.scan.empty()) {
            json sc = json::array();
            for (const auto& [x, e] : w.scan) sc.push_back({x, e});
            extra["scan"] = sc;
        }
    } else if (a.method == "rwa") {
        s = rwa_correction(base(a.boundary_order), a.carrier, grid);
    } else {
        throw UsageError("unknown method: " + a.method);
    }
    json j = s.to_json();
    j["model"] = m.to_json();
    j["synthesis"] = extra;
    io::write_json(out / "schedule.json", j, hash);
    io::write_schedule_csv(out / "schedule.csv", s, hash);
    std::cout << "wrote " << (out / "schedule.json").string() << " and schedule.csv\n";
    return 0;
}

// ---------------------------------------------------------------- simulate
struct SimulateArgs {
    std::string schedule, model, phase = "global";
    double theta = pi, tolerance = 1e-8;
    bool populations = false;
};

int cmd_simulate(const SimulateArgs& a, const fs::path& out, const json& eff) {
    if (a.schedule.empty()) throw UsageError("simulate needs --schedule");
    if (!fs::exists(a.schedule)) throw UsageError("schedule file not found: " + a.schedule);
    const json sj = io::read_json(a.schedule);
    SystemModel fallback = sj.contains("model") ? model_from_json(sj.at("model")) : transmon_preset(3, -1.0);
    const SystemModel m = load_model(a.model, fallback);
    ControlSchedule s;
    try {
        s = ControlSchedule::from_json(sj);
    } catch (const json::exception& e) {
        throw UsageError(std::string("bad schedule: ") + e.what());
    }
    EvolveOptions o;
    o.tolerance = a.tolerance;
    o.record_populations = a.populations;
    const auto r = evolve(m, s, o);
    const auto rep = average_gate_fidelity(r.U, rx(a.theta), SubspaceSpec{{0, 1}}, parse_phase(a.phase));
    const std::string hash = io::config_hash(eff);
    json j = gate_report_json(rep);
    j["steps"] = r.n_steps;
    j["halvings"] = r.halvings;
    j["error_estimate"] = r.error_estimate;
    j["propagator"] = r.method;
    io::write_json(out / "simulate.json", j, hash);
    if (a.populations) {
        std::vector<std::string> head{"t"};
        for (int k = 0; k < m.dim; ++k) head.push_back("p" + std::to_string(k));
        io::CsvWriter w(out / "populations.csv", head, hash);
        const TimeGrid g(r.n_steps, s.grid.tg);
        for (Eigen::Index i = 0; i < r.populations[0].rows(); ++i) {
            std::vector<double> row{g.t(static_cast<std::size_t>(i))};
            for (int k = 0; k < m.dim; ++k) row.push_back(r.populations[0](i, k));
            w.row(row);
        }
    }
    std::printf("error %.6e leakage %.6e\n", rep.error, rep.leakage);
    return 0;
}

// ---------------------------------------------------------------- sweep
struct SweepArgs {
    std::string scenario = "transmon", variable = "tg";
    std::vector<std::string> variants;
    double lo = 4 * pi, hi = 40 * pi, tg = 4 * pi, Delta = -1.0, lambda = std::sqrt(2.0);
    std::size_t points = 7;
    bool log_spacing = false;
};

int cmd_sweep(const SweepArgs& a, const fs::path& out, const json& eff) {
    if (a.points == 0 || !(a.hi > a.lo || (a.points == 1 && a.hi == a.lo))) throw UsageError("empty sweep range");
    SweepSpec spec{a.variable, a.lo, a.hi, a.points, a.log_spacing};
    std::vector<double> values;
    try {
        values = spec.values();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const std::string hash = io::config_hash(eff);
    io::CsvWriter w(out / "sweep.csv", {a.variable, "variant", "error", "leakage", "epsilon", "converged", "message"}, hash);
    int failures = 0;
    if (a.scenario == "transmon") {
        if (a.variable != "tg" && a.variable != "lambda") throw UsageError("transmon sweeps vary tg or lambda");
        const auto variants = a.variants.empty() ? transmon_variants() : a.variants;
        for (const auto& v : variants) {
            if (std::find(transmon_variants().begin(), transmon_variants().end(), v) == transmon_variants().end())
                throw UsageError("unknown variant: " + v);
            const auto rows = sweep(values, [&](double x) {
                TransmonScenario sc;
                sc.Delta = a.Delta;
                sc.lambda = a.variable == "lambda" ? x : a.lambda;
                const double tg = a.variable == "tg" ? x : a.tg;
                return PointOutcome{transmon_report(v, tg, sc), 1.0 / (std::abs(sc.Delta) * tg), true};
            });
            for (const auto& r : rows) {
                failures += !r.message.empty();
                w.row({io::num(r.value), v, io::num(r.error), io::num(r.leakage), io::num(r.epsilon),
                       r.converged ? "1" : "0", r.message});
            }
        }
    } else if (a.scenario == "crosstalk") {
        if (a.variable != "tg") throw UsageError("crosstalk sweeps vary tg");
        const std::vector<std::string> all{"gaussian", "wahwah1", "wahwah2"};
        const auto variants = a.variants.empty() ? all : a.variants;
        CrosstalkScenario sc;
        for (const auto& v : variants) {
            if (std::find(all.begin(), all.end(), v) == all.end()) throw UsageError("unknown variant: " + v);
            const auto rows = sweep(values, [&](double tg) {
                const ControlSchedule s = v == "gaussian" ? crosstalk_gaussian(tg, sc)
                                                          : wahwah_schedule(tg, sc.Delta, sc.delta, sc.theta,
                                                                            v == "wahwah1" ? "1.0" : "2.0", sc.wahwah);
                return PointOutcome{crosstalk_report(s, sc), 1.0 / (std::abs(sc.Delta) * tg), true};
            });
            for (const auto& r : rows) {
                failures += !r.message.empty();
                w.row({io::num(r.value), v, io::num(r.error), io::num(r.leakage), io::num(r.epsilon),
                       r.converged ? "1" : "0", r.message});
            }
        }
    } else {
        throw UsageError("scenario must be transmon or crosstalk");
    }
    std::cout << "wrote " << (out / "sweep.csv").string() << (failures ? " (with failed rows)" : "") << "\n";
    return 0;
}

// ---------------------------------------------------------------- spectrum
struct SpectrumArgs {
    std::string schedule;
    double lo = 0.0, hi = 2.0;
    std::size_t points = 101, steps = 4000;
    int control = 0;
    std::vector<double> at;
};

int cmd_spectrum(const SpectrumArgs& a, const fs::path& out, const json& eff) {
    if (a.schedule.empty()) throw UsageError("spectrum needs --schedule");
    if (!fs::exists(a.schedule)) throw UsageError("schedule file not found: " + a.schedule);
    if (a.at.empty() && (a.points == 0 || a.hi < a.lo)) throw UsageError("empty frequency range");
    const auto s = ControlSchedule::from_json(io::read_json(a.schedule));
    std::vector<std::pair<cplx, Waveform>> terms;
    for (const auto& e : s.entries)
        if (e.control == a.control && e.quadrature != Quadrature::Detuning)
            terms.emplace_back(e.quadrature == Quadrature::X ? cplx{1.0} : I1, e.waveform);
    if (terms.empty()) throw UsageError("schedule has no field on that control");
    const Waveform f = linear_combination(terms);
    const TimeGrid grid(a.steps + (a.steps % 2), s.grid.tg);
    const std::vector<double> ds = a.at.empty() ? linspace(a.lo, a.hi, static_cast<int>(a.points)) : a.at;
    const std::string hash = io::config_hash(eff);
    io::CsvWriter w(out / "spectrum.csv", {"delta", "re", "im", "abs"}, hash);
    for (double d : ds) {
        const cplx F = finite_time_fourier(f, d, grid);
        w.row(std::vector<double>{d, F.real(), F.imag(), std::abs(F)});
    }
    std::cout << "wrote " << (out / "spectrum.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- frames
struct FramesArgs {
    std::string schedule, model, hamiltonian = "tanh";
    int frames = 6;
    double A = 4.0, g = 1.0, tau = 1.0, T = 12.0;
    std::size_t steps = 2000;
};

int cmd_frames(const FramesArgs& a, const fs::path& out, const json& eff) {
    if (a.frames < 1) throw UsageError("--frames must be >= 1");
    Series H;
    if (!a.schedule.empty()) {
        if (!fs::exists(a.schedule)) throw UsageError("schedule file not found: " + a.schedule);
        const json sj = io::read_json(a.schedule);
        const SystemModel m =
            load_model(a.model, sj.contains("model") ? model_from_json(sj.at("model")) : transmon_preset(3, -1.0));
        const auto s = ControlSchedule::from_json(sj);
        H = sample_hamiltonian(m, s, TimeGrid(a.steps, s.grid.tg));
    } else if (a.hamiltonian == "tanh") {
        H = sample_hamiltonian(
            [&](double t) {
                Mat h(2, 2);
                const double d = a.A * std::tanh((t - 0.5 * a.T) / a.tau);
                h << -0.5 * d, 0.5 * a.g, 0.5 * a.g, 0.5 * d;
                return h;
            },
            TimeGrid(a.steps, a.T));
    } else if (a.hamiltonian == "constant") {
        H = sample_hamiltonian(
            [&](double) {
                Mat h(2, 2);
                h << -0.5 * a.A, 0.5 * a.g, 0.5 * a.g, 0.5 * a.A;
                return h;
            },
            TimeGrid(a.steps, a.T));
    } else {
        throw UsageError("hamiltonian must be tanh or constant");
    }
    const auto fsq = superadiabatic_iterate(H, a.frames);
    const auto q = quality_factor(fsq);
    const std::string hash = io::config_hash(eff);
    io::CsvWriter w(out / "frames.csv", {"j", "Q", "inertial_integral", "max_inertial_norm", "transitionless"}, hash);
    for (int j = 0; j < fsq.frames(); ++j) {
        const double mi = *std::max_element(q.norm_I[j].begin(), q.norm_I[j].end());
        w.row({std::to_string(j), io::num(q.Q[j]), io::num(fsq.inertial_integral[j]), io::num(mi),
               q.transitionless[j] ? "1" : "0"});
    }
    io::write_json(out / "frames.json",
                   {{"optimal_frame", q.optimal}, {"diverged_at", fsq.diverged_at}, {"gauge", fsq.gauge}, {"Q", q.Q}},
                   hash);
    std::cout << "optimal frame " << q.optimal << "\n";
    return 0;
}

// ---------------------------------------------------------------- calibrate
struct CalibrateArgs {
    std::string model;
    double tg_units = 12 * pi, bound = 0.5, init_scale = 0.05, f_tolerance = 1e-6, span = 0.02;
    int max_evals = 600, landscape = 0;
    std::size_t steps = 500;
    std::string pair = "x,y";
};

int cmd_calibrate(const CalibrateArgs& a, const fs::path& out, const json& eff) {
    CalibrationScenario sc;
    sc.tg_units = a.tg_units;
    sc.bound = a.bound;
    sc.n_steps = a.steps;
    if (!a.model.empty()) {
        const SystemModel m = load_model(a.model, {});
        sc.Delta = transmon_Delta(m);
        sc.lambda = lambda_ratio(m);
    }
    const auto p = calibration_problem(sc);
    NelderMeadConfig cfg;
    cfg.init_scale = a.init_scale;
    cfg.max_evals = a.max_evals;
    cfg.f_tolerance = a.f_tolerance;
    const auto r = optimize(p, cfg);
    const std::string hash = io::config_hash(eff);
    std::vector<json> trace;
    for (const auto& t : r.trace)
        trace.push_back({{"eval", t.index}, {"alpha", t.alpha}, {"error", t.error}, {"ok", t.ok}});
    io::write_jsonl(out / "trace.jsonl", trace, hash);
    json rep = {{"scenario", to_json(sc)}, {"alpha", r.alpha},         {"error", r.error},
                {"start_error", r.start_error}, {"evaluations", r.evaluations}, {"converged", r.converged}};
    if (a.landscape > 0) {
        if (a.landscape < 2) throw UsageError("--landscape needs at least 2 points per axis");
        const auto comma = a.pair.find(',');
        if (comma == std::string::npos) throw UsageError("--pair must look like x,y");
        LandscapeSpec ls;
        ls.p1 = prefactor_index(a.pair.substr(0, comma));
        ls.p2 = prefactor_index(a.pair.substr(comma + 1));
        ls.fixed = r.alpha;
        ls.lo1 = r.alpha[ls.p1] - a.span;
        ls.hi1 = r.alpha[ls.p1] + a.span;
        ls.lo2 = r.alpha[ls.p2] - a.span;
        ls.hi2 = r.alpha[ls.p2] + a.span;
        ls.n1 = ls.n2 = a.landscape;
        const auto g = landscape_scan(p, ls);
        io::CsvWriter w(out / "landscape.csv", {prefactor_name(ls.p1), prefactor_name(ls.p2), "log10_error"}, hash);
        for (int i = 0; i < ls.n1; ++i)
            for (int j = 0; j < ls.n2; ++j)
                w.row(std::vector<double>{g.axis1[i], g.axis2[j], g.log10_error(i, j)});
        rep["landscape_min"] = {{prefactor_name(ls.p1), g.axis1[g.min_i]}, {prefactor_name(ls.p2), g.axis2[g.min_j]},
                                {"error", g.min_error}, {"failed_cells", g.failures}};
    }
    io::write_json(out / "calibration.json", rep, hash);
    std::printf("error %.4e -> %.4e, alpha = (%.5f, %.5f, %.5f)%s\n", r.start_error, r.error, r.alpha[0], r.alpha[1],
                r.alpha[2], r.converged ? "" : " [not converged]");
    return r.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulse synthesis and leakage-aware gate simulation"};
    app.fallthrough();
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    app.add_option("--config", config_path, "JSON file with option values (command line wins)");
    app.add_option("-o,--out", out_dir, "output directory")->capture_default_str();

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "synthesize a control schedule");
    Settings ss(synth);
    ss.add("--method", "method", sa.method, "gaussian|first-order-drag|drag-detuned|second-order-drag|multi-gap|wahwah|rwa");
    ss.add("--model", "model", sa.model, "model JSON file");
    ss.add("--tg", "tg", sa.tg, "gate time");
    ss.add("--sigma-ratio", "sigma_ratio", sa.sigma_ratio, "tg / sigma");
    ss.add("--theta", "theta", sa.theta, "rotation angle");
    ss.add("--boundary-order", "boundary_order", sa.boundary_order, "boundary vanishing order of the base pulse");
    ss.add("--lambda", "lambda", sa.lambda, "override the DRAG coupling factor");
    ss.add("--steps", "steps", sa.steps, "grid steps (0: automatic)");
    ss.add("--gaps", "gaps", sa.gaps, "gaps for multi-gap, re or re:im");
    ss.add("--version", "version", sa.version, "WAHWAH version 1.0|2.0");
    ss.add("--omega-max", "omega_max", sa.omega_max, "WAHWAH 2.0 searches omega_x up to this multiple of delta");
    ss.add("--Delta", "Delta", sa.Delta, "WAHWAH anharmonicity");
    ss.add("--delta", "delta", sa.delta, "WAHWAH crosstalk detuning");
    ss.add("--carrier", "carrier", sa.carrier, "carrier frequency for rwa");

    SimulateArgs ia;
    auto* simulate = app.add_subcommand("simulate", "propagate a schedule and report the gate error");
    Settings is(simulate);
    is.add("--schedule", "schedule", ia.schedule, "schedule JSON written by synth");
    is.add("--model", "model", ia.model, "model JSON (default: embedded in schedule)");
    is.add("--theta", "theta", ia.theta, "target x rotation");
    is.add("--phase", "phase", ia.phase, "global|none|virtual_z");
    is.add("--tolerance", "tolerance", ia.tolerance, "step-halving tolerance");
    is.flag("--populations", "populations", ia.populations, "write populations.csv for |0>");

    SweepArgs wa;
    auto* sweep_cmd = app.add_subcommand("sweep", "error curves over gate time or coupling");
    Settings ws(sweep_cmd);
    ws.add("--scenario", "scenario", wa.scenario, "transmon|crosstalk");
    ws.add("--variable", "variable", wa.variable, "tg|lambda");
    ws.add("--variants", "variants", wa.variants, "variants to evaluate");
    ws.add("--lo", "lo", wa.lo, "range start");
    ws.add("--hi", "hi", wa.hi, "range end");
    ws.add("--points", "points", wa.points, "number of points");
    ws.flag("--log", "log_spacing", wa.log_spacing, "logarithmic spacing");
    ws.add("--tg", "tg", wa.tg, "gate time for lambda sweeps");
    ws.add("--Delta", "Delta", wa.Delta, "transmon anharmonicity");
    ws.add("--lambda", "lambda", wa.lambda, "lambda_1/lambda_0 for tg sweeps");

    SpectrumArgs pa;
    auto* spectrum = app.add_subcommand("spectrum", "finite-time Fourier transform of a schedule");
    Settings ps(spectrum);
    ps.add("--schedule", "schedule", pa.schedule, "schedule JSON");
    ps.add("--lo", "lo", pa.lo, "first frequency");
    ps.add("--hi", "hi", pa.hi, "last frequency");
    ps.add("--points", "points", pa.points, "number of frequencies");
    ps.add("--at", "at", pa.at, "explicit frequencies");
    ps.add("--steps", "steps", pa.steps, "quadrature steps");
    ps.add("--control", "control", pa.control, "control channel");

    FramesArgs fa;
    auto* frames = app.add_subcommand("frames", "superadiabatic frame report");
    Settings fs_(frames);
    fs_.add("--frames", "frames", fa.frames, "number of iterated frames");
    fs_.add("--schedule", "schedule", fa.schedule, "schedule JSON (otherwise a built-in Hamiltonian)");
    fs_.add("--model", "model", fa.model, "model JSON");
    fs_.add("--hamiltonian", "hamiltonian", fa.hamiltonian, "tanh|constant");
    fs_.add("--A", "A", fa.A, "sweep amplitude");
    fs_.add("--g", "g", fa.g, "gap");
    fs_.add("--tau", "tau", fa.tau, "sweep time scale");
    fs_.add("--T", "T", fa.T, "duration");
    fs_.add("--steps", "steps", fa.steps, "grid steps");

    CalibrateArgs ca;
    auto* calibrate = app.add_subcommand("calibrate", "prefactor tune-up with Nelder-Mead");
    Settings cs(calibrate);
    cs.add("--model", "model", ca.model, "transmon model JSON (default scenario otherwise)");
    cs.add("--tg-units", "tg_units", ca.tg_units, "gate time times |Delta|");
    cs.add("--bound", "bound", ca.bound, "box bound on each prefactor");
    cs.add("--steps", "steps", ca.steps, "propagation grid steps");
    cs.add("--init-scale", "init_scale", ca.init_scale, "initial simplex step");
    cs.add("--max-evals", "max_evals", ca.max_evals, "evaluation budget");
    cs.add("--f-tolerance", "f_tolerance", ca.f_tolerance, "simplex spread in log10 error");
    cs.add("--landscape", "landscape", ca.landscape, "grid points per axis around the optimum (0: off)");
    cs.add("--pair", "pair", ca.pair, "landscape parameters, e.g. x,y");
    cs.add("--span", "span", ca.span, "landscape half width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        json config = json::object();
        if (!config_path.empty()) {
            if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
            config = io::read_json(config_path);
        }
        const fs::path out = out_dir;
        auto section = [&](const char* name) { return config.contains(name) ? config.at(name) : config; };
        if (*synth) return cmd_synth(sa, out, {{"synth", ss.resolve(section("synth"))}});
        if (*simulate) return cmd_simulate(ia, out, {{"simulate", is.resolve(section("simulate"))}});
        if (*sweep_cmd) return cmd_sweep(wa, out, {{"sweep", ws.resolve(section("sweep"))}});
        if (*spectrum) return cmd_spectrum(pa, out, {{"spectrum", ps.resolve(section("spectrum"))}});
        if (*frames) return cmd_frames(fa, out, {{"frames", fs_.resolve(section("frames"))}});
        if (*calibrate) return cmd_calibrate(ca, out, {{"calibrate", cs.resolve(section("calibrate"))}});
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

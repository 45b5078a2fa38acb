#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dragkit/dragkit.hpp"

using namespace dragkit;

namespace {

CalibrationProblem small_problem() {
    CalibrationScenario sc;
    sc.n_steps = 300;
    return calibration_problem(sc);
}

}  // namespace

TEST(NelderMead, RecoversQuadraticMinimum) {
    const Alpha a{0.12, -0.07, 0.31};
    Eigen::Matrix3d Q;
    Q << 3.0, 0.5, 0.0, 0.5, 2.0, 0.3, 0.0, 0.3, 1.0;
    auto f = [&](const Alpha& x) {
        Eigen::Vector3d d(x[0] - a[0], x[1] - a[1], x[2] - a[2]);
        return ObjectiveValue{d.dot(Q * d), true, ""};
    };
    NelderMeadConfig cfg;
    cfg.f_tolerance = 1e-16;
    cfg.max_evals = 5000;
    cfg.log_objective = false;
    const auto r = nelder_mead<3>(f, Alpha{0, 0, 0}, Alpha{-1, -1, -1}, Alpha{1, 1, 1}, cfg);
    EXPECT_TRUE(r.converged);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.alpha[k], a[k], 1e-6);
}

TEST(NelderMead, BestSoFarAndBudget) {
    auto f = [](const Alpha& x) { return ObjectiveValue{std::abs(x[0] - 0.3) + x[1] * x[1] + 1.0, true, ""}; };
    NelderMeadConfig cfg;
    cfg.max_evals = 20;
    cfg.f_tolerance = 0.0;
    cfg.log_objective = false;
    const auto r = nelder_mead<3>(f, Alpha{0, 0, 0}, Alpha{-1, -1, -1}, Alpha{1, 1, 1}, cfg);
    EXPECT_FALSE(r.converged);
    double best = 1e300;
    for (const auto& t : r.trace) best = std::min(best, t.error);
    EXPECT_EQ(r.error, best);
    EXPECT_LE(r.error, r.start_error);
    EXPECT_EQ(static_cast<int>(r.trace.size()), r.evaluations);
    EXPECT_GE(r.evaluations, 20);
}

TEST(NelderMead, StaysInsideBounds) {
    auto f = [](const Alpha& x) { return ObjectiveValue{x[0] + x[1] + x[2] + 10.0, true, ""}; };
    NelderMeadConfig cfg;
    cfg.log_objective = false;
    cfg.f_tolerance = 1e-12;
    cfg.max_evals = 2000;
    const auto r = nelder_mead<3>(f, Alpha{0, 0, 0}, Alpha{-0.2, -0.2, -0.2}, Alpha{0.2, 0.2, 0.2}, cfg);
    for (const auto& t : r.trace)
        for (double v : t.alpha) EXPECT_LE(std::abs(v), 0.2 + 1e-15);
    for (double v : r.alpha) EXPECT_NEAR(v, -0.2, 1e-6);
}

TEST(Calibration, ObjectiveAtZeroIsPipelineError) {
    const auto p = small_problem();
    const auto r = evolve(p.model, p.base, p.evolve);
    const double direct = average_gate_fidelity(r.U, p.target, p.subspace, p.phase).error;
    EXPECT_EQ(objective(p, {0, 0, 0}).error, direct);
}

TEST(Calibration, DegenerateLimitAndContinuity) {
    auto p = small_problem();
    p.lower = {-1, -1, -1};
    const auto dead = objective(p, {-1, 0, 0});
    EXPECT_TRUE(dead.ok);
    EXPECT_GT(dead.error, 0.5);
    const Alpha a{-0.01, 0.02, 0.03};
    for (int k = 0; k < 3; ++k) {
        Alpha b = a;
        b[k] += 1e-6;
        EXPECT_LT(std::abs(objective(p, a).error - objective(p, b).error), 1e-4);
    }
    EXPECT_THROW(objective(p, {0.9, 0, 0}), DomainError);
}

TEST(Calibration, LandscapeConsistencyAndRefinement) {
    const auto p = small_problem();
    LandscapeSpec s;
    s.p1 = 0;
    s.p2 = 1;
    s.lo1 = -0.02;
    s.hi1 = 0.02;
    s.lo2 = -0.4;
    s.hi2 = 0.4;
    s.n1 = s.n2 = 5;
    const auto g = landscape_scan(p, s);
    EXPECT_EQ(g.log10_error.rows(), 5);
    EXPECT_EQ(g.failures, 0);
    EXPECT_DOUBLE_EQ(g.log10_error(2, 2), std::log10(objective(p, {0, 0, 0}).error));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) EXPECT_LE(g.min_error, std::pow(10.0, g.log10_error(i, j)) * (1 + 1e-12));
    LandscapeSpec f = s;
    f.n1 = f.n2 = 9;
    const auto h = landscape_scan(p, f);
    const double cell1 = (s.hi1 - s.lo1) / (s.n1 - 1), cell2 = (s.hi2 - s.lo2) / (s.n2 - 1);
    EXPECT_LT(std::abs(h.axis1[h.min_i] - g.axis1[g.min_i]), cell1 + 1e-12);
    EXPECT_LT(std::abs(h.axis2[h.min_j] - g.axis2[g.min_j]), cell2 + 1e-12);
    s.n1 = 1;
    EXPECT_THROW(landscape_scan(p, s), ConfigError);
}

TEST(Calibration, OptimizerNeverWorseThanStart) {
    const auto p = small_problem();
    NelderMeadConfig cfg;
    cfg.max_evals = 40;
    const auto r = optimize(p, cfg);
    EXPECT_LE(r.error, r.start_error);
    EXPECT_EQ(r.start_error, objective(p, {0, 0, 0}).error);
}

TEST(Io, NumbersUseTwelveSignificantDigits) {
    EXPECT_EQ(io::num(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(io::num(2.5e-9), "2.5e-09");
}

TEST(Io, ConfigHashIsSha1OfCanonicalDump) {
    EXPECT_EQ(io::config_hash(json::object()), "bf21a9e8fbc5a3846fb05b4fa0859e0917b2202f");
    const json a = json::parse(R"({"b":[1,2],"a":1})");
    EXPECT_EQ(io::config_hash(a), "bcf221bfadd4155feea1f993f73c7612b35dced2");
}

TEST(Io, CsvCarriesHashAndIsReproducible) {
    const auto dir = std::filesystem::temp_directory_path() / "dragkit_io_test";
    ControlSchedule s(TimeGrid(10, 4 * pi));
    s.add(0, Quadrature::X, base_gaussian(4 * pi, 4.0, 1, pi));
    io::write_schedule_csv(dir / "a.csv", s, "h1");
    io::write_schedule_csv(dir / "b.csv", s, "h1");
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream f(p);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    const std::string a = slurp(dir / "a.csv");
    EXPECT_EQ(a, slurp(dir / "b.csv"));
    EXPECT_EQ(a.rfind("# config_hash=h1\nt,u_x,u_y,delta\n", 0), 0u);
    EXPECT_THROW(io::read_json(dir / "missing.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

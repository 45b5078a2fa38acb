#include <gtest/gtest.h>

#include "dragkit/dragkit.hpp"
#include "oracles.hpp"

using namespace dragkit;

TEST(Hamiltonians, TransmonLadder) {
    const auto m = transmon_preset(4, -0.7);
    EXPECT_DOUBLE_EQ(m.drift(2), -0.7);
    EXPECT_DOUBLE_EQ(m.drift(3), 3 * -0.7);
    ASSERT_EQ(m.ops.size(), 3u);
    EXPECT_DOUBLE_EQ(m.ops[2].coupling, std::sqrt(3.0));
    EXPECT_DOUBLE_EQ(lambda_ratio(m), std::sqrt(2.0));
    EXPECT_THROW(transmon_preset(2, -1.0), ModelError);
}

TEST(Hamiltonians, RotatingFrameAssemblyMatchesHandWritten) {
    const auto m = transmon_preset(3, -1.3);
    const cplx om(0.4, -0.25);
    const Mat h = assemble_fields(m, {om}, 0.0, 0.0);
    EXPECT_LT((h - oracle::transmon_hamiltonian(om, -1.3, std::sqrt(2.0))).norm(), 1e-15);
    const Mat hd = assemble_fields(m, {om}, 0.2, 0.0);
    EXPECT_DOUBLE_EQ(hd(2, 2).real(), -1.3 + 0.4);
}

TEST(Hamiltonians, CrowdingConditionEnforced) {
    EXPECT_THROW(two_qutrit_crosstalk_preset(1.0, 1.2, -0.3, 0.05), ModelError);
    const auto m = two_qutrit_crosstalk_preset(-0.3, 0.05);
    EXPECT_NEAR(m.drift(4) - m.drift(3) + -0.3, 0.05, 1e-12);
    EXPECT_NEAR(m.drift(5) - m.drift(4) - (m.drift(4) - m.drift(3)), -0.3, 1e-12);
}

TEST(Hamiltonians, ModelJsonRoundTrip) {
    const auto m = transmon_preset(3, -1.0);
    const auto r = model_from_json(m.to_json());
    EXPECT_EQ(r.dim, 3);
    EXPECT_LT((r.drift - m.drift).norm(), 1e-15);
    EXPECT_EQ(r.ops.size(), m.ops.size());
    EXPECT_THROW(model_from_json(json{{"preset", "nope"}}), ConfigError);
}

TEST(Propagator, ConstantRabiMatchesAnalytic) {
    SystemModel m;
    m.dim = 2;
    m.excitation = RVec::Zero(2);
    m.drift = RVec::Zero(2);
    m.ops = {{0, 1, 1.0, 0}};
    const double om = 0.7, T = 3.0;
    ControlSchedule s(TimeGrid(10, T));
    s.add(0, Quadrature::X, constant(T, om));
    const auto r = evolve(m, s);
    Mat ex(2, 2);
    ex << std::cos(om * T / 2), cplx(0, -std::sin(om * T / 2)), cplx(0, -std::sin(om * T / 2)), std::cos(om * T / 2);
    EXPECT_LT(op_norm(r.U - ex), 1e-13);
}

TEST(Propagator, MidpointAgreesWithRk4AndIsSecondOrder) {
    const auto m = transmon_preset(3, -1.0);
    ControlSchedule s(TimeGrid(100, 4 * pi));
    s.add(0, Quadrature::X, base_gaussian(4 * pi, 4.0, 1, pi));
    auto H = [&](double t) { return oracle::transmon_hamiltonian(s.field(0, t), -1.0, std::sqrt(2.0)); };
    const Mat ref = oracle::rk4_unitary(H, 3, 4 * pi, 20000);
    EvolveOptions o;
    o.tolerance = 1e-10;
    o.max_halvings = 14;
    EXPECT_LT(op_norm(evolve(m, s, o).U - ref), 1e-9);
    EvolveOptions fixed;
    fixed.tolerance = 0.0;
    const double e1 = op_norm(evolve(m, s.with_grid(100), fixed).U - ref);
    const double e2 = op_norm(evolve(m, s.with_grid(200), fixed).U - ref);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
}

TEST(Propagator, NonConvergenceRaises) {
    const auto m = transmon_preset(3, -1.0);
    ControlSchedule s(TimeGrid(4, 4 * pi));
    s.add(0, Quadrature::X, base_gaussian(4 * pi, 4.0, 1, pi));
    EvolveOptions o;
    o.tolerance = 1e-14;
    o.max_halvings = 2;
    EXPECT_THROW(evolve(m, s, o), ConvergenceError);
}

TEST(Propagator, PopulationsRecorded) {
    const auto m = transmon_preset(3, -1.0);
    ControlSchedule s(TimeGrid(50, 4 * pi));
    s.add(0, Quadrature::X, base_gaussian(4 * pi, 4.0, 1, pi));
    EvolveOptions o;
    o.record_populations = true;
    const auto r = evolve(m, s, o);
    ASSERT_EQ(r.populations.size(), 3u);
    EXPECT_EQ(static_cast<std::size_t>(r.populations[0].rows()), r.n_steps + 1);
    for (Eigen::Index i = 0; i < r.populations[0].rows(); ++i) EXPECT_NEAR(r.populations[0].row(i).sum(), 1.0, 1e-10);
}

TEST(Fidelity, HandComputedValues) {
    const SubspaceSpec q{{0, 1}};
    EXPECT_NEAR(average_gate_fidelity(Mat::Identity(2, 2), pauli_x(), q).fidelity, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(average_gate_fidelity(pauli_x(), pauli_x(), q).error, 0.0, 1e-15);
    // |1> fully leaks to |2>: M = diag(1, 0), F = (1 + 1) / 6.
    Mat U = Mat::Zero(3, 3);
    U(0, 0) = 1.0;
    U(2, 1) = 1.0;
    U(1, 2) = 1.0;
    const auto r = average_gate_fidelity(U, Mat::Identity(2, 2), q);
    EXPECT_NEAR(r.fidelity, 2.0 / 6.0, 1e-15);
    EXPECT_NEAR(r.leakage, 0.5, 1e-15);
}

TEST(Fidelity, PhaseModes) {
    const SubspaceSpec q{{0, 1}};
    Mat U = Mat::Zero(2, 2);
    U(0, 0) = 1.0;
    U(1, 1) = std::exp(cplx(0, 0.4));
    EXPECT_GT(average_gate_fidelity(U, Mat::Identity(2, 2), q, PhaseMode::Global).error, 1e-3);
    EXPECT_NEAR(average_gate_fidelity(U, Mat::Identity(2, 2), q, PhaseMode::VirtualZ).error, 0.0, 1e-15);
    const Mat minus = -Mat::Identity(2, 2);
    EXPECT_NEAR(average_gate_fidelity(minus, Mat::Identity(2, 2), q, PhaseMode::Global).error, 0.0, 1e-15);
    EXPECT_NEAR(average_gate_fidelity(minus, Mat::Identity(2, 2), q, PhaseMode::None).fidelity, 2.0 / 6.0, 1e-15);
}

TEST(Fidelity, ProductFactorizesLikeTensorProduct) {
    Mat a = rx(0.3), b(2, 2);
    b << std::exp(cplx(0, 0.1)), 0, 0, std::exp(cplx(0, -0.2));
    const Mat ta = rx(0.35), tb = Mat::Identity(2, 2);
    Mat A3 = Mat::Identity(3, 3), B3 = Mat::Identity(3, 3);
    A3.topLeftCorner(2, 2) = a;
    B3.topLeftCorner(2, 2) = b;
    const auto r = product_gate_fidelity({{A3, ta, {{0, 1}}}, {B3, tb, {{0, 1}}}});
    Mat U(4, 4), T(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    U(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
                    T(2 * i + k, 2 * j + l) = ta(i, j) * tb(k, l);
                }
    const Mat M = T.adjoint() * U;
    const double ref = ((M * M.adjoint()).trace().real() + std::norm(M.trace())) / 20.0;
    EXPECT_NEAR(r.fidelity, ref, 1e-14);
}

TEST(Sweep, FailuresRecordedInRow) {
    const auto rows = sweep(std::vector<double>{1.0, 2.0, 3.0}, [](double x) {
        if (x == 2.0) throw ConvergenceError("boom");
        return PointOutcome{FidelityReport{}, x, true};
    });
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].message, "boom");
    EXPECT_TRUE(rows[2].converged);
    EXPECT_THROW((SweepSpec{"tg", 1.0, 2.0, 0, false}.values()), ConfigError);
    EXPECT_THROW((SweepSpec{"tg", 0.0, 2.0, 3, true}.values()), ConfigError);
    const auto v = SweepSpec{"tg", 1.0, 100.0, 3, true}.values();
    EXPECT_NEAR(v[1], 10.0, 1e-12);
}

TEST(Linalg, StencilsMatchTabulatedWeightsAndDegree) {
    const auto w = fd_weights(0.0, {-2, -1, 0, 1, 2});
    const std::vector<double> ref{1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(w[k], ref[k], 1e-15);
    const auto e = fd_weights(0.0, {0, 1, 2, 3, 4});
    EXPECT_NEAR(e[0], -25.0 / 12, 1e-14);
    EXPECT_NEAR(e[4], -3.0 / 12, 1e-14);
    // seven points differentiate degree-6 polynomials exactly, ends included
    const double dt = 0.1;
    std::vector<double> x;
    for (int i = 0; i <= 20; ++i) x.push_back(std::pow(i * dt - 0.7, 6) - 2.0 * i * dt);
    const auto d = fd_derivative(x, dt, 7);
    for (int i = 0; i <= 20; ++i) EXPECT_NEAR(d[i], 6.0 * std::pow(i * dt - 0.7, 5) - 2.0, 1e-10) << i;
    EXPECT_THROW(fd_derivative(x, dt, 4), DomainError);
}

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dragkit/dragkit.hpp"
#include "oracles.hpp"

using namespace dragkit;

namespace {

cplx gk_fourier(const Waveform& u, double d) {
    using boost::math::quadrature::gauss_kronrod;
    const double T = u.tg();
    const double re = gauss_kronrod<double, 61>::integrate(
        [&](double t) { return (u(t) * std::exp(cplx(0, d * t))).real(); }, 0.0, T, 20, 1e-15);
    const double im = gauss_kronrod<double, 61>::integrate(
        [&](double t) { return (u(t) * std::exp(cplx(0, d * t))).imag(); }, 0.0, T, 20, 1e-15);
    return {re, im};
}

}  // namespace

TEST(FirstOrderDrag, QuadratureIsScaledDerivative) {
    const TimeGrid g(200, 4 * pi);
    const Waveform b = base_gaussian(4 * pi, 4.0, 1, pi);
    const auto s = first_order_drag(b, 1.0, -1.0, g);
    for (double t : {1.0, 5.0, 9.0}) EXPECT_NEAR(s.field(0, t).imag(), 0.5 * b.derivative(1)(t).real(), 1e-14);
    EXPECT_THROW(first_order_drag(b, 1.0, 0.0, g), SynthesisError);
    EXPECT_THROW(first_order_drag(gaussian(1.0, 3.0, 4 * pi), 1.0, -1.0, g), DomainError);
    EXPECT_DOUBLE_EQ(transmon_drag_lambda(transmon_preset(3, -1.0)), 1.0);
}

TEST(FirstOrderDrag, DetunedFormHasAreaTheta) {
    const double tg = 20.0, Delta = -2 * pi * 0.3;
    const auto s = first_order_drag_detuned_normalized(gaussian(1.0, 5.0, tg, 1), std::sqrt(2.0), Delta, pi, TimeGrid(400, tg));
    using boost::math::quadrature::gauss_kronrod;
    const double area =
        gauss_kronrod<double, 61>::integrate([&](double t) { return s.field(0, t).real(); }, 0.0, tg, 15, 1e-14);
    EXPECT_NEAR(area, pi, 1e-10);
}

TEST(FirstOrderDrag, SuppressesLeakageAtModerateGateTime) {
    TransmonScenario sc;
    const double eg = transmon_report("gaussian", 8 * pi, sc).error;
    const double e1 = transmon_report("drag1", 8 * pi, sc).error;
    EXPECT_LT(e1, 0.05 * eg);
}

TEST(SecondOrderDrag, BeatsFirstOrderAtEightPi) {
    TransmonScenario sc;
    const double e1 = transmon_report("drag1", 8 * pi, sc).error;
    const double e2 = transmon_report("drag2", 8 * pi, sc).error;
    EXPECT_LT(e2, 0.1 * e1);
    const auto s = transmon_schedule("drag2", 8 * pi, sc);
    EXPECT_EQ(s.provenance.at("canceled_orders").get<int>(), 2);
}

TEST(DerivativeCoefficients, TwoGapClosedForm) {
    const cplx d1 = -1.0, d2(0.3, 0.02);
    const auto c = derivative_coefficients({d1, d2}, 2);
    const auto ref = oracle::two_gap_coefficients(d1, d2);
    for (int r = 0; r < 2; ++r) EXPECT_LT(std::abs(c.a[r] - ref[r]), 1e-13 * std::abs(ref[r]));
    EXPECT_LT(oracle::coefficient_residual(c.a, {d1, d2}), 1e-13);
}

TEST(DerivativeCoefficients, SingleGapIsFirstOrderDrag) {
    const auto c = derivative_coefficients({-1.0}, 1);
    EXPECT_NEAR(std::abs(c.a[0] - cplx(1.0)), 0.0, 1e-15);
}

TEST(DerivativeCoefficients, UnderdeterminedUsesMinimumNorm) {
    const std::vector<cplx> gaps{-1.0, 0.5};
    const auto c = derivative_coefficients(gaps, 4);
    EXPECT_LT(oracle::coefficient_residual(c.a, gaps), 1e-12);
    const auto sq = derivative_coefficients(gaps, 2);
    double n4 = 0.0, n2 = 0.0;
    for (int r = 0; r < 4; ++r) n4 += std::norm(c.a[r] * std::pow(1.0, r + 1));
    for (int r = 0; r < 2; ++r) n2 += std::norm(sq.a[r]);
    EXPECT_LE(n4, n2 + 1e-12);
}

TEST(DerivativeCoefficients, Errors) {
    EXPECT_THROW(derivative_coefficients({1.0, 1.0}, 2), DomainError);
    EXPECT_THROW(derivative_coefficients({1.0, 0.0}, 2), DomainError);
    EXPECT_THROW(derivative_coefficients({1.0, 2.0}, 1), DomainError);
    EXPECT_THROW(derivative_coefficients({1.0, 1.0 + 1e-4, 1.0 + 2e-4, 1.0 + 3e-4, 1.0 + 4e-4}, 5), IllConditionedError);
    EXPECT_TRUE(derivative_coefficients({}, 0).a.empty());
}

TEST(MultiGap, SpectrumVanishesAtEveryGap) {
    const double tg = 16.0;
    const std::vector<cplx> gaps{-1.0, 0.6};
    const Waveform b = base_gaussian(tg, 4.0, 2, pi);
    const Waveform u = multi_gap_pulse(b, gaps);
    for (const auto& g : gaps) {
        const double ref = std::abs(gk_fourier(b, g.real()));
        EXPECT_LT(std::abs(gk_fourier(u, g.real())), 1e-8 * std::max(ref, 1e-3)) << g;
    }
    EXPECT_THROW(multi_gap_pulse(base_gaussian(tg, 4.0, 1, pi), gaps), DomainError);
    EXPECT_LT(std::abs(multi_gap_pulse(b, {})(3.0) - b(3.0)), 1e-15);
}

TEST(SchriefferWolff, BlockGeneratorRemovesLeakageCoupling) {
    const auto m = transmon_preset(3, -1.0);
    Series H{TimeGrid(10, 1.0), {}};
    for (int i = 0; i <= 10; ++i) H.m.push_back(assemble_fields(m, {cplx(0.05, 0.0)}, 0.0, 0.0));
    const auto gen = block_generator(H, SubspaceSpec{{0, 1}});
    const auto eff = sw_effective_hamiltonian(H, gen, 6);
    const double before = std::abs(H[0](2, 1));
    const double after = std::max(std::abs(eff.H[0](2, 1)), std::abs(eff.H[0](2, 0)));
    EXPECT_LT(after, 0.1 * before * 0.05);
    EXPECT_FALSE(eff.diverging);
    // Constant generator: sw_iterate equals the effective Hamiltonian.
    const auto it = sw_iterate(H, gen, 6);
    EXPECT_LT((it[5] - eff.H[5]).norm(), 1e-12);
    // Exact unitary transform agrees with the truncated series.
    const Mat ex = expm_antihermitian(-gen.S[0]) * H[0] * expm_antihermitian(gen.S[0]);
    EXPECT_LT((ex - eff.H[0]).norm(), 1e-10);
}

TEST(SchriefferWolff, TransitionGeneratorCancelsElementToFirstOrder) {
    Series H{TimeGrid(8, 1.0), {}};
    Mat h(2, 2);
    h << 0.0, 0.02, 0.02, 1.0;
    for (int i = 0; i <= 8; ++i) H.m.push_back(h);
    const auto gen = transition_generator(H, 0, 1);
    const auto eff = sw_effective_hamiltonian(H, gen, 1);
    EXPECT_LT(element_residual(eff.H, 0, 1), 0.05 * 0.02);
    EXPECT_THROW(transition_generator(H, 0, 0), DomainError);
}

TEST(Magnus, LinearRampClosedForm) {
    const double a = 0.3, b = 0.2, T = 2.0;
    auto H = [&](double t) {
        Mat h(2, 2);
        h << b * t, a, a, -b * t;
        return h;
    };
    const auto m = magnus_terms(sample_hamiltonian(H, TimeGrid(2000, T)));
    Mat H1(2, 2);
    H1 << b * T * T / 2, a * T, a * T, -b * T * T / 2;
    Mat sy(2, 2);
    sy << 0.0, cplx(0, -1), cplx(0, 1), 0.0;
    EXPECT_LT((m.H1 - H1).norm(), 1e-12);
    EXPECT_LT((m.H2 - (a * b * T * T * T / 6.0) * sy).norm(), 1e-10);
}

TEST(Magnus, ConstantHamiltonianHasNoSecondTerm) {
    Mat h(2, 2);
    h << 0.1, 0.4, 0.4, -0.3;
    const auto m = magnus_terms(sample_hamiltonian([&](double) { return h; }, TimeGrid(100, 3.0)));
    EXPECT_LT((m.H1 - 3.0 * h).norm(), 1e-13);
    EXPECT_LT(m.H2.norm(), 1e-13);
}

TEST(Rwa, CorrectionShapeAndDomain) {
    const TimeGrid g(100, 40.0);
    const Waveform b = base_gaussian(40.0, 4.0, 1, pi);
    const auto s = rwa_correction(b, 2.0, g);
    EXPECT_NEAR(s.field(0, 7.0).imag(), b.derivative(1)(7.0).real() / 8.0, 1e-15);
    EXPECT_THROW(rwa_correction(b, 0.0, g), DomainError);
    EXPECT_THROW(rwa_correction(gaussian(1.0, 10.0, 40.0), 1.0, g), DomainError);
}

TEST(Rwa, ImprovesLabFrameGate) {
    const double w = 1.0;
    const double tg = oracle::gaussian_pi_duration_for_peak(w / 20.0, 4.0, 1);
    const Waveform b = base_gaussian(tg, 4.0, 1, pi);
    const TimeGrid grid(8000, tg);
    ControlSchedule plain(grid);
    plain.add(0, Quadrature::X, b);
    const auto m = two_level_lab_frame(w);
    const Mat target = oracle::lab_frame_pi_target(w, tg);
    const double e0 = average_gate_fidelity(evolve(m, plain).U, target, SubspaceSpec{{0, 1}}).error;
    const double e1 = average_gate_fidelity(evolve(m, rwa_correction(b, w, grid)).U, target, SubspaceSpec{{0, 1}}).error;
    EXPECT_LT(e1, 0.1 * e0);
}

TEST(Wahwah, VersionOneUsesHalfDetuning) {
    WahwahOptions o;
    o.n_steps = 800;
    const double delta = 2 * pi * 0.05;
    const auto s = wahwah_schedule(24.0, -2 * pi * 0.3, delta, pi, "1.0", o);
    EXPECT_DOUBLE_EQ(s.provenance.at("omega_x").get<double>(), delta / 2);
    EXPECT_FALSE(s.provenance.contains("warning"));
    EXPECT_TRUE(wahwah_schedule(10.0, -2 * pi * 0.3, delta, pi, "1.0", o).provenance.contains("warning"));
    EXPECT_THROW(wahwah_schedule(24.0, -2 * pi * 0.3, delta, pi, "3.0", o), ConfigError);
    // x quadrature has rotation area pi.
    using boost::math::quadrature::gauss_kronrod;
    const double area =
        gauss_kronrod<double, 61>::integrate([&](double t) { return s.field(0, t).real(); }, 0.0, 24.0, 15, 1e-14);
    EXPECT_NEAR(area, pi, 1e-10);
}

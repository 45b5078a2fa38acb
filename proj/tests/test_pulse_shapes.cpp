#include <gtest/gtest.h>

#include "dragkit/dragkit.hpp"
#include "oracles.hpp"

using namespace dragkit;

namespace {
constexpr double kTight = 1e-12;
}

TEST(PulseShapes, PlainGaussianDerivativesMatchClosedForm) {
    const double s = 1.3, tg = 10.0;
    const Waveform g = gaussian(2.0, s, tg);
    for (double t : {0.5, 3.0, 5.0, 7.7}) {
        const double x = t - 0.5 * tg;
        const double G = 2.0 * std::exp(-x * x / (2 * s * s));
        EXPECT_NEAR(g(t).real(), G, kTight);
        EXPECT_NEAR(g.derivative(1)(t).real(), -x / (s * s) * G, kTight);
        EXPECT_NEAR(g.derivative(2)(t).real(), (x * x / std::pow(s, 4) - 1 / (s * s)) * G, kTight);
    }
}

TEST(PulseShapes, WindowedGaussianDerivativeMatchesFiniteDifference) {
    const Waveform g = gaussian(1.0, 2.0, 8.0, 3);
    const double h = 1e-4;
    for (int r = 0; r < 3; ++r) {
        const Waveform a = g.derivative(r), b = g.derivative(r + 1);
        for (double t : {0.7, 2.0, 4.1, 6.9}) {
            const double fd = (a(t + h).real() - a(t - h).real()) / (2 * h);
            EXPECT_NEAR(b(t).real(), fd, 1e-6 * (1 + std::abs(fd)));
        }
    }
}

TEST(PulseShapes, BoundaryRemovalVanishesToRequestedOrder) {
    for (int nb = 0; nb <= 4; ++nb) {
        const Waveform g = gaussian(1.0, 2.0, 8.0, nb);
        EXPECT_EQ(g.boundary_order(), nb);
        for (int r = 0; r <= nb; ++r) {
            EXPECT_NEAR(std::abs(g.derivative(r)(0.0)), 0.0, 1e-12) << "nb=" << nb << " r=" << r;
            EXPECT_NEAR(std::abs(g.derivative(r)(8.0)), 0.0, 1e-12) << "nb=" << nb << " r=" << r;
        }
    }
}

TEST(PulseShapes, EvaluationOutsideDomainThrows) {
    const Waveform g = gaussian(1.0, 2.0, 8.0, 1);
    EXPECT_THROW(g(-0.1), DomainError);
    EXPECT_THROW(g(8.1), DomainError);
    EXPECT_NO_THROW(g(8.0));
}

TEST(PulseShapes, SampledDerivativeOrderLimit) {
    std::vector<cplx> v;
    for (int i = 0; i <= 400; ++i) v.push_back(std::sin(M_PI * i / 400.0));
    const Waveform w = sampled(1.0, v, 0);
    EXPECT_NO_THROW(w.derivative(4));
    EXPECT_THROW(w.derivative(5), UnsupportedError);
    EXPECT_NEAR(w.derivative(1)(0.3).real(), M_PI * std::cos(M_PI * 0.3), 1e-7);
    EXPECT_NEAR(w(0.3137).real(), std::sin(M_PI * 0.3137), 1e-9);
}

TEST(PulseShapes, NormalizedAreaAgreesWithTrapezoidOracle) {
    const auto n = normalize_rotation_angle(gaussian(1.0, 2.5, 10.0, 1), M_PI, 2.0);
    const int N = 200000;
    double acc = 0.0;
    for (int i = 0; i <= N; ++i) acc += (i == 0 || i == N ? 0.5 : 1.0) * n.waveform(10.0 * i / N).real();
    acc *= 10.0 / N;
    EXPECT_NEAR(2.0 * acc, M_PI, 1e-9);
}

TEST(PulseShapes, ZeroAreaCannotBeNormalized) {
    EXPECT_THROW(normalize_rotation_angle(sine_basis(1.0, {0.0, 0.0}), M_PI), NormalizationError);
}

TEST(PulseShapes, FourierOfConstantMatchesClosedForm) {
    const double T = 3.0, d = 1.7;
    const Waveform c = constant(T, cplx(0.4, -0.2));
    const cplx exact = cplx(0.4, -0.2) * (std::exp(cplx(0, d * T)) - 1.0) / cplx(0, d);
    EXPECT_LT(std::abs(finite_time_fourier(c, d, TimeGrid(2000, T)) - exact), 1e-12);
}

TEST(PulseShapes, FourierAtZeroIsArea) {
    const Waveform g = gaussian(1.0, 2.0, 8.0, 1);
    EXPECT_NEAR(std::abs(finite_time_fourier(g, 0.0, TimeGrid(4000, 8.0)) - waveform_area(g)), 0.0, 1e-11);
}

TEST(PulseShapes, FourierDerivativeIdentity) {
    const double tg = 6.0;
    const Waveform u = gaussian(1.0, 1.5, tg, 2);
    const TimeGrid grid(20000, tg);
    for (double d : {0.3, 1.0, 4.0}) {
        const cplx f0 = finite_time_fourier(u, d, grid);
        for (int r = 1; r <= 2; ++r) {
            const cplx fr = std::pow(I1, r) * std::pow(d, -r) * finite_time_fourier(u.derivative(r), d, grid);
            EXPECT_LT(std::abs(fr - f0) / std::abs(f0), 1e-9);
        }
    }
}

TEST(PulseShapes, JsonRoundTrip) {
    const Waveform w = 0.5 * gaussian(1.0, 2.0, 8.0, 1) + cplx(0, 1) * gaussian(1.0, 2.0, 8.0, 1).derivative(1);
    const Waveform r = waveform_from_json(json::parse(w.to_json().dump()));
    for (double t : {0.0, 1.3, 4.0, 7.5}) EXPECT_LT(std::abs(w(t) - r(t)), 1e-15);
    EXPECT_EQ(r.boundary_order(), w.boundary_order());
}

TEST(PulseShapes, WahwahEnvelopeIsProductOfGaussianAndSideband) {
    const double tg = 20.0, s = 5.0, wx = 0.3;
    const Waveform w = wahwah_envelope(1.0, s, tg, wx, 1);
    const Waveform g = gaussian(1.0, s, tg, 1);
    for (double t : {2.0, 9.0, 15.0}) EXPECT_NEAR(w(t).real(), g(t).real() * (1 - std::cos(wx * (t - tg / 2))), 1e-13);
}

TEST(ControlSchedule, FieldCombinesQuadraturesAndScales) {
    ControlSchedule s(TimeGrid(100, 8.0));
    s.add(0, Quadrature::X, gaussian(1.0, 2.0, 8.0, 1));
    s.add(0, Quadrature::Y, gaussian(0.5, 2.0, 8.0, 1));
    s.add(0, Quadrature::Detuning, gaussian(0.25, 2.0, 8.0, 1));
    const double g = gaussian(1.0, 2.0, 8.0, 1)(3.0).real();
    EXPECT_NEAR(std::abs(s.field(0, 3.0) - cplx(g, 0.5 * g)), 0.0, kTight);
    const auto sc = s.scaled(2.0, 3.0, 4.0);
    EXPECT_NEAR(std::abs(sc.field(0, 3.0) - cplx(2 * g, 1.5 * g)), 0.0, kTight);
    EXPECT_NEAR(sc.detuning(3.0), g, kTight);
    const auto back = ControlSchedule::from_json(json::parse(s.to_json().dump()));
    EXPECT_NEAR(std::abs(back.field(0, 3.0) - s.field(0, 3.0)), 0.0, kTight);
    EXPECT_THROW(s.add(0, Quadrature::X, gaussian(1.0, 2.0, 9.0)), DomainError);
}

// Profile solves, continuation, derivative data.

#include <cmath>
#include <random>

#include "doctest.h"
#include "latwave/profile.hpp"

using namespace latwave;

namespace {
double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double analytic_omega(double mu, double c0, double c1, double k) {
    const double r2 = 1.0 - 2.0 * mu * (1.0 - std::cos(kTwoPi * k));
    return (c0 + c1 * r2) / kTwoPi;
}
}  // namespace

TEST_CASE("lambda-omega exact wave") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile exact = lambda_omega_wave(s, 1, 6);
    CHECK(sup(profile_residual(s, exact)) <= 1e-12);
    const WaveProfile u = solve_profile(s, exact.k, Vec(0), exact);
    CHECK(u.iterations <= 2);
    CHECK(std::abs(u.omega - 1.0 / (4.0 * kPi)) <= 1e-10);
    CHECK(u.residual <= 1e-12);
}

TEST_CASE("Newton from a perturbed guess") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    WaveProfile guess = lambda_omega_wave(s, 1, 6);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < guess.coeffs.size(); ++i)
        if (i % (2 * guess.K + 1) < 9) guess.coeffs(i) += 1e-2 * g(rng);
    const WaveProfile u = solve_profile(s, guess.k, Vec(0), guess);
    CHECK(u.iterations <= 6);
    CHECK(std::abs(u.omega - analytic_omega(0.5, 1, -1, 1.0 / 6)) <= 1e-10);
}

TEST_CASE("no wave beyond the existence boundary") {
    const SystemSpec s = make_lambda_omega(2.0, 1.0, -1.0);
    try {
        seed_wave(s, 1, 6, Vec(0));
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoConvergence);
    }
}

TEST_CASE("equilibrium profile and translation equivariance") {
    const SystemSpec lin = make_linear_rd(1.0, 1.0);
    const FourierBasis& fb = *basis_for(16, 2);
    CHECK(sup(profile_residual(lin, fb, Vec::Zero(fb.size()), 0.2, 0.37)) == 0.0);

    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    WaveProfile v = u;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < v.coeffs.size(); ++i)
        if (i % (2 * v.K + 1) < 7) v.coeffs(i) += 0.05 * g(rng);
    const double shift = 0.3183;
    WaveProfile vs = v;
    vs.coeffs = shift_profile(v, shift);
    const Vec lhs = profile_residual(s, vs);
    const Vec rhs = v.basis().shift_all(profile_residual(s, v), v.d, shift);
    CHECK(sup(lhs - rhs) <= 1e-12);
    // shift by one period is the identity
    CHECK(sup(shift_profile(u, 1.0) - u.coeffs) <= 1e-14);
    CHECK(sup(evaluate_profile(u, 0.123) - evaluate_profile(u, 1.123)) <= 1e-13);
}

TEST_CASE("continuation in k follows the dispersion relation") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const ContinuationCurve cc = continue_family(s, u, "k", {1.0 / 7, 1.0 / 8});
    REQUIRE(cc.complete);
    REQUIRE(cc.samples.size() >= 2);
    for (const auto& w : cc.samples) CHECK(std::abs(w.omega - analytic_omega(0.5, 1, -1, w.k)) <= 1e-8);
    const ContinuationCurve one = continue_family(s, u, "k", {});
    CHECK(one.samples.size() == 1);
}

TEST_CASE("derivative data of the lambda-omega wave") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const WaveDerivatives wd = wave_derivatives(s, u);
    CHECK(std::abs(wd.dk_omega - (-2 * 0.5 * -1.0 * std::sin(kTwoPi / 6))) <= 1e-8);
    CHECK(std::abs(wd.uad.dot(wd.dzeta) - 1.0) <= 1e-10);
    CHECK(std::abs(wd.uad.dot(wd.dk)) <= 1e-10);

    // d_k u against re-solved neighbours
    const FdDerivatives fd = parameter_derivatives_fd(s, u, 1e-3);
    CHECK(std::abs(fd.domega(0) - wd.dk_omega) / std::abs(wd.dk_omega) <= 1e-5);
}

TEST_CASE("Mixed and Hamiltonian normalizations") {
    const SystemSpec rw = make_roll_waves(1.0, 0.1);
    Vec t(1);
    t << 1.39;
    const WaveProfile m = seed_wave(rw, 1, 6, t);
    const WaveDerivatives md = wave_derivatives(rw, m);
    CHECK(std::abs(md.uad.dot(md.dzeta) - 1.0) <= 1e-10);
    CHECK(std::abs(md.uad.dot(md.dk)) <= 1e-10);
    CHECK(std::abs(md.uad.dot(md.dM[0])) <= 1e-10);

    const SystemSpec qc = make_quartic_chain(1.0, 0.1, 1.0);
    Vec te(2);
    te << 0.12, 0.0185;
    const WaveProfile h = seed_wave(qc, 1, 3, te);
    const WaveDerivatives hd = wave_derivatives(qc, h);
    CHECK(h.residual <= 1e-10);
    CHECK(std::abs(hd.uad.dot(hd.dzeta) - 1.0) <= 1e-10);
    CHECK(std::abs(hd.uad.dot(hd.dE)) <= 1e-10);
    CHECK(std::abs(hd.uad.dot(hd.dM[0])) <= 1e-10);
}

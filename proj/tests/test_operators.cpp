// Difference operators, ring right-hand sides and energy densities.

#include <cmath>
#include <random>

#include "doctest.h"
#include "latwave/lattice.hpp"
#include "latwave/profile.hpp"
#include "latwave/ringsim.hpp"

using namespace latwave;

TEST_CASE("shift of a delta moves it one site back") {
    RingState U = RingState::Zero(4, 1);
    U(0, 0) = 1.0;
    const RingState V = apply_op(ShiftPolynomial::shift(1, 1), U);
    RingState want = RingState::Zero(4, 1);
    want(3, 0) = 1.0;
    CHECK((V - want).norm() == 0.0);
}

TEST_CASE("forward difference kills constants") {
    const SystemSpec s = make_roll_waves(1.3, 0.1);
    const ShiftPolynomial P = ShiftPolynomial::from_stencil(1, s.forward());
    CHECK(P.annihilates_constants());
    CHECK(apply_op(P, RingState::Constant(7, 1, 2.5)).norm() <= 1e-15);
}

TEST_CASE("circulant Laplacian eigenvector") {
    const double mu = 0.7;
    const int L = 12;
    const ShiftPolynomial P = ShiftPolynomial::from_stencil(1, {{-1, mu}, {0, -2 * mu}, {1, mu}});
    RingState U(L, 1);
    for (int j = 0; j < L; ++j) U(j, 0) = std::cos(kTwoPi * j / L);
    const RingState V = apply_op(P, U);
    CHECK((V - 2 * mu * (std::cos(kTwoPi / L) - 1) * U).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("symbols") {
    const double xi = 0.37;
    const CMat S = symbol_matrix(ShiftPolynomial::shift(1, 1), xi, 2);
    const cplx e = std::exp(cplx(0, xi));
    CHECK(std::abs(S(0, 0)) == 0.0);
    CHECK(std::abs(S(0, 1) - e) <= 1e-15);
    CHECK(std::abs(S(1, 0) - e) <= 1e-15);
    CHECK(std::abs(S(1, 1)) == 0.0);

    const double mu = 0.3;
    const ShiftPolynomial lap = ShiftPolynomial::from_stencil(1, {{-1, mu}, {0, -2 * mu}, {1, mu}});
    CHECK(std::abs(symbol_matrix(lap, xi, 1)(0, 0) - 2 * mu * (std::cos(xi) - 1)) <= 1e-15);

    // zero twist is the cyclic reduction
    const CMat S0 = symbol_matrix(lap, 0.0, 3);
    const Mat want = mu * cyclic_shift(3, 1) - 2 * mu * Mat::Identity(3, 3) + mu * cyclic_shift(3, -1);
    CHECK((S0 - want.cast<cplx>()).norm() <= 1e-15);
}

TEST_CASE("xi expansion of an operator") {
    const double mu = 0.4;
    const ShiftPolynomial lap = ShiftPolynomial::from_stencil(1, {{-1, mu}, {0, -2 * mu}, {1, mu}});
    const auto [P1, P2] = bloch_expand_op(lap);
    const ShiftPolynomial want1 = ShiftPolynomial::from_stencil(1, {{1, mu}, {-1, -mu}});
    const ShiftPolynomial want2 = ShiftPolynomial::from_stencil(1, {{1, 0.5 * mu}, {-1, 0.5 * mu}});
    for (double xi : {0.0, 0.3, 1.1}) {
        CHECK((symbol_matrix(P1, xi, 2) - symbol_matrix(want1, xi, 2)).norm() <= 1e-15);
        CHECK((symbol_matrix(P2, xi, 2) - symbol_matrix(want2, xi, 2)).norm() <= 1e-15);
    }
    const auto [I1, I2] = bloch_expand_op(ShiftPolynomial::identity(2));
    CHECK(symbol_matrix(I1, 0.5, 3).norm() == 0.0);
    CHECK(symbol_matrix(I2, 0.5, 3).norm() == 0.0);

    // Taylor remainder of a random polynomial decays like xi^3
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    ShiftPolynomial P(2);
    for (int p = -2; p <= 2; ++p) P.add_term(p, Mat::NullaryExpr(2, 2, [&] { return g(rng); }));
    const auto [Q1, Q2] = bloch_expand_op(P);
    auto rem = [&](double xi) {
        const cplx ix(0, xi);
        return (symbol_matrix(P, xi, 3) - symbol_matrix(P, 0, 3) - ix * symbol_matrix(Q1, 0, 3) -
                ix * ix * symbol_matrix(Q2, 0, 3)).norm();
    };
    const double slope = std::log(rem(0.02) / rem(0.01)) / std::log(2.0);
    CHECK(slope >= 2.7);
}

TEST_CASE("ring right-hand sides") {
    // RD equilibrium
    const SystemSpec lin = make_linear_rd(1.0, 0.0);
    CHECK(rhs_full(lin, RingState::Constant(5, 1, 0.8)).norm() <= 1e-15);

    // lambda-omega plane wave is a relative equilibrium: rhs = 2 pi omega R U
    const SystemSpec lo = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = lambda_omega_wave(lo, 1, 6);
    const RingState U = wave_ring_state(u, 2);
    RingState RU(U.rows(), 2);
    RU.col(0) = -U.col(1);
    RU.col(1) = U.col(0);
    CHECK((rhs_full(lo, U) - kTwoPi * u.omega * RU).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("variational derivative") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    const int L = 9;
    RingState U(L, 1);
    for (int j = 0; j < L; ++j) U(j, 0) = 0.3 * g(rng);

    // H = v^2/2: deltaH = Dtilde^* Dtilde U
    const SystemSpec h = make_harmonic_chain(1.2, 0.0);
    const ShiftPolynomial Dt = ShiftPolynomial::from_stencil(1, h.forward());
    const ShiftPolynomial Dts = ShiftPolynomial::from_stencil(1, h.forward_adj());
    CHECK((variational_derivative(h, U) - apply_op(Dts * Dt, U)).cwiseAbs().maxCoeff() <= 1e-13);

    // gradient of the ring energy
    const SystemSpec q = make_quartic_chain(1.0, 0.1, 1.0);
    const RingState dH = variational_derivative(q, U);
    double err = 0.0;
    for (int j = 0; j < L; ++j) {
        const double e = 1e-5;
        RingState Up = U, Um = U;
        Up(j, 0) += e;
        Um(j, 0) -= e;
        err = std::max(err, std::abs((ring_energy(q, Up) - ring_energy(q, Um)) / (2 * e) - dH(j, 0)));
    }
    CHECK(err <= 1e-6);
}

TEST_CASE("energy density and flux") {
    const SystemSpec q = make_quartic_chain(1.0, 0.1, 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    RingState U(8, 1);
    for (int j = 0; j < 8; ++j) U(j, 0) = g(rng);
    const DensityFlux df = energy_density_flux(q, U);
    CHECK(std::abs(forward_difference(q.eta, df.flux).sum()) <= 1e-13);

    const DensityFlux z = energy_density_flux(q, RingState::Zero(8, 1));
    CHECK(z.density.cwiseAbs().maxCoeff() == 0.0);
    CHECK((z.flux.array() - z.flux(0)).abs().maxCoeff() == 0.0);
}

// Ring integrations against exact solutions.

#include <cmath>
#include <random>

#include "doctest.h"
#include "latwave/ringsim.hpp"

using namespace latwave;

TEST_CASE("zero state stays zero") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const TrajectoryRecord tr = integrate_ring(s, RingState::Zero(12, 2), 3.0, {1.0, 3.0});
    for (const auto& U : tr.states) CHECK(U.norm() == 0.0);
    CHECK_THROWS_AS(integrate_ring(s, RingState::Zero(12, 2), 0.0, {}), Error);
}

TEST_CASE("linear RD against the exponential of the circulant") {
    const double mu = 0.8, a = 1.0;
    const int L = 10;
    const SystemSpec s = make_linear_rd(mu, a);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    RingState U0(L, 1);
    for (int j = 0; j < L; ++j) U0(j, 0) = g(rng);
    // symmetric circulant mu (T - 2 + T^-1) - a, exponentiated through its eigen-decomposition
    Mat C = Mat::Zero(L, L);
    for (int j = 0; j < L; ++j) {
        C(j, j) = -2 * mu - a;
        C(j, (j + 1) % L) += mu;
        C(j, (j + L - 1) % L) += mu;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(C);
    const Mat E = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
    const TrajectoryRecord tr = integrate_ring(s, U0, 1.0, {1.0});
    CHECK((tr.states.back() - E * U0).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("error falls with the tolerance") {
    const double mu = 0.8, a = 1.0;
    const int L = 6;
    const SystemSpec s = make_linear_rd(mu, a);
    RingState U0(L, 1);
    for (int j = 0; j < L; ++j) U0(j, 0) = std::sin(kTwoPi * j / L) + 0.3;
    Mat C = Mat::Zero(L, L);
    for (int j = 0; j < L; ++j) {
        C(j, j) = -2 * mu - a;
        C(j, (j + 1) % L) += mu;
        C(j, (j + L - 1) % L) += mu;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(C);
    const Mat E = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
    const RingState exact = E * U0;
    const double e1 = (integrate_ring(s, U0, 1.0, {1.0}, {1e-6, 1e-9}).states.back() - exact).norm();
    const double e2 = (integrate_ring(s, U0, 1.0, {1.0}, {1e-9, 1e-12}).states.back() - exact).norm();
    CHECK(e2 < e1);
    CHECK(e2 <= 1e-8);
}

TEST_CASE("exact wave recurrence") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const Recurrence r = wave_recurrence(s, u, 10, 1);
    CHECK(r.L == 60);
    CHECK(r.max_drift <= 1e-8);

    // perturbed data drift by about the perturbation: reported, not an error
    RingState U0 = wave_ring_state(u, 10);
    U0(7, 0) += 1e-3;
    const TrajectoryRecord tr = integrate_ring(s, U0, u.period(), {u.period()});
    const double drift = (tr.states.back() - U0).cwiseAbs().maxCoeff();
    CHECK(drift > 1e-5);
    CHECK(drift < 1e-2);
}

TEST_CASE("energy audit on the harmonic chain") {
    const SystemSpec h = make_harmonic_chain(1.0, 1.0);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    RingState U0(16, 1);
    for (Eigen::Index i = 0; i < U0.size(); ++i) U0(i) = 0.2 * g(rng);
    const EnergyAudit ea = energy_audit(h, U0, 20.0);
    CHECK(ea.total_drift <= 1e-8);
    CHECK(ea.local_residual <= 1e-6);
    CHECK_THROWS_AS(energy_audit(make_lambda_omega(0.5, 1, -1), RingState::Zero(6, 2), 1.0), Error);
}

TEST_CASE("packet without coupling stays put") {
    const SystemSpec s0 = make_lambda_omega(0.0, 2.0, -1.0);
    const WaveProfile u0 = seed_wave(s0, 1, 6, Vec(0));
    PacketOptions po;
    po.cells = 60;
    po.sigma = 15;
    po.max_periods = 4;
    const PacketResult pr = wave_packet_velocity(s0, u0, 0.0, po);
    CHECK(std::abs(pr.velocity) <= 1e-3);
}

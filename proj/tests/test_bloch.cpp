// Bloch transform, symbols, monodromies, eigen-solver and branch tracking.

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "latwave/bloch.hpp"

using namespace latwave;

TEST_CASE("dbt of deltas") {
    CMat f = CMat::Zero(8, 1);
    f(0, 0) = 1.0;
    const BlochSample s = dbt(f, 2);
    for (std::size_t m = 0; m < s.xi.size(); ++m) {
        CHECK(std::abs(s.data[m](0, 0) - 1.0) <= 1e-15);
        CHECK(std::abs(s.data[m](1, 0)) <= 1e-15);
    }
    CMat g = CMat::Zero(8, 1);
    g(3, 0) = 1.0;
    const BlochSample t = dbt(g, 2);
    for (std::size_t m = 0; m < t.xi.size(); ++m) {
        CHECK(std::abs(t.data[m](0, 0)) <= 1e-15);
        CHECK(std::abs(t.data[m](1, 0) - std::exp(cplx(0, -3 * t.xi[m]))) <= 1e-14);
    }
    CHECK_THROWS_AS(dbt(CMat(CMat::Zero(7, 1)), 2), Error);
}

TEST_CASE("dbt round trip and finite Parseval") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g;
    for (int N : {2, 3, 6})
        for (int P : {4, 8}) {
            CMat f(N * P, 2);
            for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = cplx(g(rng), g(rng));
            const BlochSample s = dbt(f, N);
            CHECK((idbt(s) - f).cwiseAbs().maxCoeff() <= 1e-12);
            double lhs = 0.0;
            for (const auto& blk : s.data) lhs += blk.squaredNorm();
            CHECK(std::abs(lhs - P * f.squaredNorm()) <= 1e-12 * lhs);
        }
}

TEST_CASE("scalar constant-coefficient monodromy") {
    const SystemSpec s = make_linear_rd(1.0, 1.0);
    const SymbolGenerator gen = SymbolGenerator::constant_state(s, Vec::Zero(1), 1, kPi, 1.0);
    const BlochMonodromy m = monodromy(gen);
    CHECK(std::abs(m.S0(0, 0) - std::exp(-5.0)) <= 1e-10);
}

TEST_CASE("eigen-solver") {
    Mat D = Mat::Zero(3, 3);
    D.diagonal() << 1, 2, 3;
    EigenPairs ep = eig_dense(D.cast<cplx>());
    std::vector<double> v;
    for (Eigen::Index i = 0; i < 3; ++i) v.push_back(ep.values(i).real());
    std::sort(v.begin(), v.end());
    CHECK(std::abs(v[0] - 1) <= 1e-14);
    CHECK(std::abs(v[1] - 2) <= 1e-14);
    CHECK(std::abs(v[2] - 3) <= 1e-14);

    CMat J(2, 2);
    J << 1, 1, 0, 1;
    ep = eig_dense(J);
    CHECK(select_eps0(ep.values).critical == 2);
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(std::abs(ep.values(i) - 1.0) <= 1e-7);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    CMat R(50, 50);
    for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = cplx(g(rng), g(rng));
    CHECK(eig_dense(R).max_residual <= 1e-10);
}

TEST_CASE("symbol periodicity and conjugation") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const double T = u.period();
    const SymbolGenerator gp(s, u, 0.21), gm(s, u, -0.21);
    for (double t : {0.3, 2.9, 7.7}) {
        CHECK((gp.A(t + T) - gp.A(t)).norm() <= 1e-12);
        CHECK((gm.A(t) - gp.A(t).conjugate()).norm() <= 1e-14);
    }
    // RD with linear f about a constant: constant in time
    const SystemSpec lin = make_linear_rd(0.7, 1.0);
    const SymbolGenerator c = SymbolGenerator::constant_state(lin, Vec::Zero(1), 3, 0.0, 2.0);
    CHECK((c.A(0.0) - c.A(1.3)).norm() == 0.0);
}

TEST_CASE("monodromy at xi = 0 keeps 1; Liouville; mu = 0 expansion") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const BlochMonodromy m0 = monodromy(SymbolGenerator(s, u, 0.0));
    const EigenPairs ep = eig_dense(m0.S0);
    double best = 1e300;
    for (Eigen::Index i = 0; i < ep.values.size(); ++i) best = std::min(best, std::abs(ep.values(i) - 1.0));
    CHECK(best <= 1e-8);
    for (double xi : {0.05, -0.31, 0.5}) {
        const SymbolGenerator gen(s, u, xi);
        const BlochMonodromy m = monodromy(gen);
        CHECK(m.liouville_rel_err <= 1e-8);
    }

    const SystemSpec s0 = make_lambda_omega(0.0, 2.0, -1.0);
    const WaveProfile u0 = seed_wave(s0, 1, 6, Vec(0));
    const BlochMonodromy e = monodromy_expansion(SymbolGenerator(s0, u0, 0.3));
    CHECK(e.S1->norm() <= 1e-12);
    CHECK(e.S2->norm() <= 1e-12);
}

TEST_CASE("expansion remainder is third order") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const BlochMonodromy e = monodromy_expansion(SymbolGenerator(s, u, 0.0));
    std::vector<double> xs, rs;
    for (int q = 3; q <= 6; ++q) {
        const double xi = std::pow(2.0, -q) * kPi / 6;
        const cplx ix(0, xi);
        const CMat S = monodromy(SymbolGenerator(s, u, xi)).S0;
        xs.push_back(std::log(xi));
        rs.push_back(std::log((S - e.S0 - ix * *e.S1 - ix * ix * *e.S2).norm()));
    }
    const double slope = (rs.front() - rs.back()) / (xs.front() - xs.back());
    CHECK(slope >= 2.7);
}

// Independent oracle: in the co-rotating frame z_j = e^{i theta_j}(r + w_j) the lambda-omega
// linearization has constant coefficients, so the multipliers of S_xi are exp(T eig B(theta))
// over theta = xi + 2 pi m / N.
TEST_CASE("lambda-omega multipliers from the co-rotating frame") {
    const double mu = 0.5, c0 = 1.0, c1 = -1.0;
    const int N = 6;
    const double kappa = kTwoPi / N;
    const double r2 = 1.0 - 2.0 * mu * (1.0 - std::cos(kappa));
    const SystemSpec s = make_lambda_omega(mu, c0, c1);
    const WaveProfile u = seed_wave(s, 1, N, Vec(0));
    const double T = u.period();
    CMat R(2, 2);
    R << 0, -1, 1, 0;
    CMat react(2, 2);
    react << -2 * r2, 0, 2 * c1 * r2, 0;
    for (double xi : {0.0, 0.04, -0.17, 0.5}) {
        std::vector<cplx> oracle;
        for (int m = 0; m < N; ++m) {
            const double th = xi + kTwoPi * m / N;
            const CMat B = mu * (2 * std::cos(kappa) * (std::cos(th) - 1) * CMat::Identity(2, 2) +
                                 cplx(0, 2 * std::sin(kappa) * std::sin(th)) * R) + react;
            Eigen::ComplexEigenSolver<CMat> es(B);
            for (int i = 0; i < 2; ++i) oracle.push_back(std::exp(T * es.eigenvalues()(i)));
        }
        const EigenPairs ep = eig_dense(monodromy(SymbolGenerator(s, u, xi)).S0);
        REQUIRE(ep.values.size() == 2 * N);
        double worst = 0.0;
        for (const cplx& z : oracle) {
            double best = 1e300;
            for (Eigen::Index i = 0; i < ep.values.size(); ++i) best = std::min(best, std::abs(ep.values(i) - z));
            worst = std::max(worst, best / std::max(1.0, std::abs(z)));
        }
        CHECK(worst <= 1e-8);
    }

    // the tracked critical branch is the oracle multiplier continuing 1
    const EpsSelection sel = select_eps0(eig_dense(monodromy(SymbolGenerator(s, u, 0.0)).S0).values);
    const TrackResult tr = track_branches(s, u, {-0.04, 0.0, 0.04}, tracking_radius(sel));
    REQUIRE(tr.branches.size() == 1);
    for (std::size_t i = 0; i < tr.branches[0].xi.size(); ++i) {
        const double th = tr.branches[0].xi[i];
        const CMat B = mu * (2 * std::cos(kappa) * (std::cos(th) - 1) * CMat::Identity(2, 2) +
                             cplx(0, 2 * std::sin(kappa) * std::sin(th)) * R) + react;
        Eigen::ComplexEigenSolver<CMat> es(B);
        const cplx lam = std::abs(es.eigenvalues()(0)) < std::abs(es.eigenvalues()(1)) ? es.eigenvalues()(0)
                                                                                       : es.eigenvalues()(1);
        CHECK(std::abs(tr.branches[0].lambda[i] - std::exp(T * lam)) <= 1e-8);
    }
    // realness: the branch at -xi is the conjugate of the branch at xi
    CHECK(std::abs(tr.branches[0].lambda.front() - std::conj(tr.branches[0].lambda.back())) <= 1e-10);
}

TEST_CASE("tracking on the grid {0} and the RD Riesz block") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const WaveDerivatives wd = wave_derivatives(s, u);
    const EpsSelection sel = select_eps0(eig_dense(monodromy(SymbolGenerator(s, u, 0.0)).S0).values);
    CHECK(sel.critical == 1);
    const TrackResult tr = track_branches(s, u, {0.0}, tracking_radius(sel));
    REQUIRE(tr.branches.size() == 1);
    CHECK(std::abs(tr.branches[0].lambda[0] - 1.0) <= 1e-8);
    const RieszBlock rb = riesz_block(s, u, wd, 0.0, sel.eps0);
    REQUIRE(rb.Omega.rows() == 1);
    CHECK(std::abs(rb.Omega(0, 0)) <= 1e-8);
}

TEST_CASE("Mixed Riesz block at xi = 0 and its trace") {
    const SystemSpec rw = make_roll_waves(1.0, 0.1);
    Vec t(1);
    t << 1.39;
    const WaveProfile m = seed_wave(rw, 1, 6, t);
    const WaveDerivatives md = wave_derivatives(rw, m);
    const EpsSelection sel = select_eps0(eig_dense(monodromy(SymbolGenerator(rw, m, 0.0)).S0).values);
    CHECK(sel.critical == 2);
    const RieszBlock rb = riesz_block(rw, m, md, 0.0, sel.eps0);
    REQUIRE(rb.Omega.rows() == 2);
    CMat want = CMat::Zero(2, 2);
    want(0, 1) = m.period() * md.dM_omega(0);
    CHECK((rb.Omega - want).cwiseAbs().maxCoeff() <= 1e-7);

    const double xi = 0.01;
    const RieszBlock rx = riesz_block(rw, m, md, xi, sel.eps0);
    const TrackResult tr = track_branches(rw, m, {0.0, xi}, tracking_radius(sel));
    cplx sum = 0.0;
    for (const auto& b : tr.branches) sum += b.lambda.back() - 1.0;
    CHECK(std::abs(rx.Omega.trace() - sum) <= 1e-8);
}

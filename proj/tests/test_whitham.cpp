// Averaged quantities, Jacobians, characteristic speeds, validation helpers.

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "latwave/validate.hpp"
#include "latwave/whitham.hpp"

using namespace latwave;

namespace {
std::vector<double> sorted_real(const CVec& v) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i).real());
    std::sort(out.begin(), out.end());
    return out;
}
}  // namespace

TEST_CASE("characteristic speeds") {
    Mat G(2, 2);
    G << 0, 1, 1, 0;
    CharSpeeds cs = char_speeds(G);
    CHECK(cs.verdict == Hyperbolicity::Strict);
    const auto v = sorted_real(cs.speeds);
    CHECK(std::abs(v[0] + 1) <= 1e-12);
    CHECK(std::abs(v[1] - 1) <= 1e-12);
    CHECK(cs.residual <= 1e-10);

    G << 0, 1, -1, 0;
    cs = char_speeds(G);
    CHECK(cs.verdict == Hyperbolicity::NonHyperbolic);
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(std::abs(std::abs(cs.speeds(i).imag()) - 1) <= 1e-12);

    G << 1, 1, 0, 1;
    CHECK(char_speeds(G).verdict == Hyperbolicity::Weak);
}

TEST_CASE("averaged fluxes on trivial profiles") {
    // H = v^2/2 about a constant: no flux
    const SystemSpec h = make_harmonic_chain(1.0, 0.0);
    const FourierBasis& fb = *basis_for(8, 2);
    Vec c = Vec::Zero(fb.size());
    c(0) = 0.7;
    const FluxRecord fr = averaged_fluxes(h, fb, c, 0.25);
    CHECK(fr.F.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(std::abs(fr.S) <= 1e-15);

    // f_r(r, w) = w averages to eta * mean(w)
    const SystemSpec rw = make_roll_waves(2.0, 0.1);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Vec u = Vec::Zero(2 * fb.size());
    for (int i = 0; i < 5; ++i) u(i) = 0.1 * g(rng), u(fb.size() + i) = 0.1 * g(rng);
    u(0) += 1.5;
    const FluxRecord fm = averaged_fluxes(rw, fb, u, 0.25);
    CHECK(std::abs(fm.F(0) - 2.0 * u(fb.size())) <= 1e-14);
}

TEST_CASE("padding does not change the fluxes") {
    const SystemSpec qc = make_quartic_chain(1.0, 0.1, 1.0);
    Vec te(2);
    te << 0.12, 0.0185;
    const WaveProfile h = seed_wave(qc, 1, 3, te);
    const FluxRecord a = averaged_fluxes(qc, *basis_for(h.K, 2), h.coeffs, h.k);
    const FluxRecord b = averaged_fluxes(qc, *basis_for(h.K, 4), h.coeffs, h.k);
    CHECK((a.F - b.F).cwiseAbs().maxCoeff() <= 1e-11);
    CHECK(std::abs(a.S - b.S) <= 1e-11);
}

TEST_CASE("RD modulation coefficients") {
    const SystemSpec s = make_lambda_omega(0.5, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 6, Vec(0));
    const WaveDerivatives wd = wave_derivatives(s, u);
    const RDWhitham w = rd_whitham(s, u, wd);
    CHECK(std::abs(w.group_velocity - 0.8660254037844386) <= 1e-8);
    const WhithamJacobian jac = whitham_jacobian(s, u, wd);
    REQUIRE(jac.variants.size() == 1);
    CHECK(std::abs(jac.variants[0].G(0, 0) - wd.dk_omega) == 0.0);

    // regauging d_k u by a multiple of d_zeta u and projecting back leaves d unchanged
    WaveDerivatives g = wd;
    g.dk = wd.dk + 0.37 * wd.dzeta;
    g.dk -= g.uad.dot(g.dk) * g.dzeta;
    CHECK(std::abs(rd_diffusion(g, u, s.mu) - w.diffusion) <= 1e-10);

    const SystemSpec s0 = make_lambda_omega(0.0, 2.0, -1.0);
    const WaveProfile u0 = seed_wave(s0, 1, 6, Vec(0));
    const WaveDerivatives w0 = wave_derivatives(s0, u0);
    CHECK(std::abs(rd_group_velocity(w0, u0, 0.0)) == 0.0);
    CHECK(std::abs(rd_diffusion(w0, u0, 0.0)) == 0.0);
}

TEST_CASE("mu = 0: uncoupled sites give a flat, N-fold multiplier 1") {
    const SystemSpec s0 = make_lambda_omega(0.0, 2.0, -1.0);
    const WaveProfile u0 = seed_wave(s0, 1, 6, Vec(0));
    for (double xi : {0.0, 0.03, -0.2}) {
        const EigenPairs ep = eig_dense(monodromy(SymbolGenerator(s0, u0, xi)).S0);
        int ones = 0;
        for (Eigen::Index i = 0; i < ep.values.size(); ++i) ones += std::abs(ep.values(i) - 1.0) <= 1e-8;
        CHECK(ones == 6);
    }
    // a single critical branch is not available, which tracking reports
    const EpsSelection sel = select_eps0(eig_dense(monodromy(SymbolGenerator(s0, u0, 0.0)).S0).values);
    CHECK_THROWS_AS(track_branches(s0, u0, symmetric_grid(0.02 * kPi), tracking_radius(sel)), Error);
    // the flat branch itself fits to zero velocity and diffusion
    SpectralBranch b;
    b.xi = symmetric_grid(0.02 * kPi);
    b.lambda.assign(b.xi.size(), 1.0);
    const RDFit f = fit_rd_branch(b, u0.period());
    CHECK(std::abs(f.a) <= 1e-14);
    CHECK(std::abs(f.b) <= 1e-14);
}

TEST_CASE("extrapolation needs nonzero samples") {
    SpectralBranch b;
    b.xi = {0.0};
    b.lambda = {1.0};
    CHECK_THROWS_AS(extrapolate_velocities({b}, 1.0), Error);
    CHECK_THROWS_AS(fit_rd_branch(b, 1.0), Error);
}

TEST_CASE("quadratic energy: frequency from the linear dispersion") {
    // H = v^2/2 + w2 u^2/2 gives dU/dt = D (Dtilde^* Dtilde + w2) U, so waves cos 2 pi (k j + omega t) have
    // 2 pi omega = eta sin(theta) (4 eta^2 sin^2(theta/2) + w2), theta = 2 pi k, for every amplitude
    const double eta = 1.0, w2 = 1.0;
    const SystemSpec h = make_harmonic_chain(eta, w2);
    const double th = kTwoPi / 4;
    const double om = eta * std::sin(th) * (4 * eta * eta * std::pow(std::sin(th / 2), 2) + w2) / kTwoPi;
    Vec te(2);
    te << 0.0, 1e-4;
    const WaveProfile u = seed_wave(h, 1, 4, te);
    CHECK(std::abs(u.omega - om) <= 1e-8);
}

TEST_CASE("k = 1/4: a second neutral sector, the phase-mode branch is selected") {
    // cos(2 pi k) = 0 removes the diffusive coupling, so the theta = pi sector is neutral too
    const SystemSpec s = make_lambda_omega(0.25, 1.0, -1.0);
    const WaveProfile u = seed_wave(s, 1, 4, Vec(0));
    const EpsSelection sel = select_eps0(eig_dense(monodromy(SymbolGenerator(s, u, 0.0)).S0).values);
    CHECK(sel.critical == 2);
    CHECK_THROWS_AS(track_branches(s, u, symmetric_grid(0.02 * kPi), tracking_radius(sel)), Error);

    const AdaptiveRDFit ad = fit_rd_adaptive(s, u, 0.02 * kPi);
    CHECK(ad.critical == 2);
    CHECK(ad.phase_overlap >= 0.99);
    const WaveDerivatives wd = wave_derivatives(s, u);
    CHECK(std::abs(ad.fit.a - wd.dk_omega) <= 1e-6);
    CHECK(std::abs(ad.fit.a - 0.5) <= 1e-6);
}

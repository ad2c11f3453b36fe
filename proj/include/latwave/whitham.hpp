#pragma once
// Averaged (modulation) quantities: group velocity, diffusion coefficient, averaged fluxes,
// linearized Whitham Jacobians and their characteristic speeds.

#include <string>
#include <vector>

#include "latwave/profile.hpp"

namespace latwave {

/// <u_ad, mu [u'(.+k) - u'(.-k)]>
double rd_group_velocity(const WaveDerivatives& wd, const WaveProfile& u, double mu);
/// <u_ad, mu [d_k u(.+k) - d_k u(.-k)] + mu/2 [u'(.+k) + u'(.-k)]>; needs <u_ad, d_k u> = 0.
double rd_diffusion(const WaveDerivatives& wd, const WaveProfile& u, double mu);

struct RDWhitham {
    double omega = 0.0;
    double dk_omega = 0.0;        // from the bordered solve
    double group_velocity = 0.0;  // adjoint pairing
    double diffusion = 0.0;
};
RDWhitham rd_whitham(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd);

struct FluxRecord {
    Vec F;           // Mixed: d1 entries; Hamiltonian: d entries
    double S = 0.0;  // Hamiltonian energy flux
};
FluxRecord averaged_fluxes(const SystemSpec& s, const WaveProfile& u);
FluxRecord averaged_fluxes(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k);

enum class Hyperbolicity { Strict, Weak, NonHyperbolic };
std::string hyperbolicity_name(Hyperbolicity h);

struct CharSpeeds {
    CVec speeds;
    Hyperbolicity verdict = Hyperbolicity::Strict;
    double residual = 0.0;
};
CharSpeeds char_speeds(const Mat& G);

struct JacobianVariant {
    std::string label;
    Mat G;
    CharSpeeds cs;
};

struct WhithamJacobian {
    SystemClass cls = SystemClass::ReactionDiffusion;
    std::vector<std::string> params;  // column order: k, M0.., E
    Vec domega;                       // one per parameter
    std::vector<Vec> dF;              // per parameter, flux gradient
    Vec dS;                           // per parameter (Hamiltonian)
    FluxRecord fluxes;
    std::vector<JacobianVariant> variants;  // one, or two sign variants for Hamiltonian
    std::string derivative_source;          // "bordered" or "finite-difference"
};

/// Derivatives of the averaged fluxes along du (plus a unit k step when explicit_k), fourth-order differences.
FluxRecord flux_directional(const SystemSpec& s, const WaveProfile& u, const Vec& du, bool explicit_k);

/// Jacobian from the bordered derivative data.
WhithamJacobian whitham_jacobian(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd);
/// Jacobian from re-solved neighbours (central differences with one Richardson halving).
WhithamJacobian whitham_jacobian_fd(const SystemSpec& s, const WaveProfile& u, const FdDerivatives& fd);

struct DerivativeConsistency {
    std::vector<std::string> entries;
    std::vector<double> bordered, finite_difference, rel_diff;
    double max_rel_diff = 0.0;
    double richardson_gap = 0.0;
    bool warning = false;
};
DerivativeConsistency compare_jacobians(const WhithamJacobian& a, const WhithamJacobian& b, double tol = 1e-4);

}  // namespace latwave

#pragma once
// Spectral validation: branch fits against the modulation predictions, Jordan structure at xi = 0
// and the lift/duality identities that tie lattice evolutions to profile operators.

#include <string>
#include <vector>

#include "latwave/bloch.hpp"
#include "latwave/whitham.hpp"

namespace latwave {

struct Check {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::string note;
};

/// value <= tol
Check check_le(const std::string& name, double value, double tol, const std::string& note = "");
/// lo <= value <= hi, stored with tol = hi
Check check_window(const std::string& name, double value, double lo, double hi, const std::string& note = "");

// ---------------------------------------------------------------- RD

/// Fit of mu(xi) = T^-1 Log lambda(xi) = i xi a + (i xi)^2 b + (nuisance up to (i xi)^order).
struct RDFit {
    std::vector<double> xi;
    std::vector<cplx> lambda;
    double a = 0.0, b = 0.0;               // weighted fit with nuisance terms
    double a_two_term = 0.0, b_two_term = 0.0;  // bare two-term fit (diagnostic)
    std::vector<double> remainder;         // |mu - i xi a - (i xi)^2 b|
    double remainder_slope = 0.0;          // log-log slope of the remainder
    bool sideband_unstable = false;        // some |lambda| > 1
};

/// Symmetric grid xi_max * {+-1/8, +-1/4, +-1/2, +-1}.
std::vector<double> symmetric_grid(double xi_max);
RDFit fit_rd_branch(const SpectralBranch& branch, double period, int order = 6);

/// Tracks and fits on symmetric_grid(xi_max), halving xi_max (up to max_halvings times) while the
/// branch leaves the tracking ball, the logarithm would wrap, or the remainder slope is outside [2.7, 3.5].
/// When S0 has more than one multiplier at 1 (a second neutral Bloch sector) every critical branch is
/// tracked and the one whose eigenvector continues the lifted phase mode is fitted.
struct AdaptiveRDFit {
    RDFit fit;
    SpectralBranch branch;
    double xi_max = 0.0;
    double max_liouville = 0.0;
    int critical = 1;             // multipliers at 1 when xi = 0
    double phase_overlap = 1.0;   // |<V, lift(d_zeta u)>| / norms at the smallest |xi|, selected branch
    std::vector<std::pair<double, std::string>> attempts;  // (xi_max, outcome)
};
AdaptiveRDFit fit_rd_adaptive(const SystemSpec& s, const WaveProfile& u, double xi_start, int max_halvings = 6,
                              const TrackOptions& opt = {});

struct ValidationReport {
    SystemClass cls = SystemClass::ReactionDiffusion;
    std::string system;
    double k = 0.0, omega = 0.0;
    double eps0 = 0.0, xi0 = 0.0;
    std::vector<Check> checks;
    // RD
    RDFit fit;
    double a_ref = 0.0, d_ref = 0.0;
    // Mixed / Hamiltonian
    std::vector<cplx> velocities;   // xi -> 0 extrapolated, per branch
    std::vector<cplx> speeds;       // selected variant
    std::vector<int> assignment;    // branch -> speed index
    std::string variant;
    std::vector<std::pair<std::string, double>> variant_errors;  // max relative error per variant
    std::vector<std::pair<double, double>> shrink_history;       // (xi0, extrapolation disagreement)
    double omega_tilde_error = 0.0, omega_tilde_xi = 0.0;
    CMat omega_tilde;
    Mat TG;

    bool passed() const;
};

/// Fit of one branch against the RD group velocity and diffusion coefficient.
ValidationReport validate_rd(const SystemSpec& s, const WaveProfile& u, const SpectralBranch& branch,
                             const RDWhitham& w, double analytic_a = NAN);

// ---------------------------------------------------------------- Mixed / Hamiltonian

/// xi -> 0 velocities from branches on a grid containing +-h, +-2h (h the smallest |xi|):
/// symmetric averages vbar(h) = (v(h) + v(-h))/2, then (4 vbar(h) - vbar(2h)) / 3.
std::vector<cplx> extrapolate_velocities(const std::vector<SpectralBranch>& branches, double period,
                                         double scale = 1.0);

struct Assignment {
    std::vector<int> perm;
    std::vector<double> rel_err;
    double cost = 0.0, second_cost = 0.0;
};
/// Minimal total absolute error permutation; AssignmentAmbiguous if the runner-up is within 10%.
Assignment assign_speeds(const std::vector<cplx>& velocities, const CVec& speeds);

struct SystemValidationOptions {
    double rel_tol = 1e-4;       // per speed
    double omega_tol = 1e-3;     // ||Omega_tilde - T G||
    double riesz_xi_factor = 1e-3;  // xi = factor * pi / N
    int max_shrink = 6;
    double agree_tol = 1e-7;     // relative disagreement of successive extrapolants
    TrackOptions track;
    RieszOptions riesz;
};

/// Adaptive xi0 = 0.1 pi/N 2^-m until the extrapolants from (h, 2h) and (2h, 4h) agree, then
/// assignment to the Jacobian speeds (both Hamiltonian variants) and the Riesz-block limit.
ValidationReport validate_system(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd,
                                 const WhithamJacobian& jac, const SystemValidationOptions& opt = {});

// ---------------------------------------------------------------- structure and identities

struct JordanStructure {
    int multiplicity = 0, expected = 0;
    EpsSelection eps;
    int omega0_rank = 0;
    double zeta_residual = 0.0;                  // ||S0 V^zeta - V^zeta||
    std::vector<double> dM_residual;             // ||S0 V^dM - V^dM - T dM omega V^zeta||
    double dE_residual = 0.0;                    // Hamiltonian
    double k_residual = 0.0;                     // S0 V^dk + S1 V^zeta - V^dk - T dk omega V^zeta
    double eigvec_overlap = 0.0;                 // RD: |<v, V^zeta>| / norms
    double liouville = 0.0;
};

/// Multiplicity of 1 in S0 with eps0 auto-selected; throws MultiplicityMismatch on a count error.
JordanStructure jordan_structure(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd,
                                 const MonodromyOptions& mo = {});

struct DualityAudit {
    double lift_residual = 0.0;      // (i)
    double shift_residual = 0.0;     // (ii)
    double pairing_residual = 0.0;   // (iii)
    double constancy_residual = 0.0; // (iv)
    double pairing_value = 0.0;      // <V^uad, V^zeta>, expected N
};

/// Identities on lifted vectors at random times and seeded random smooth profile vectors.
DualityAudit duality_audit(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd,
                           unsigned seed = 7);

}  // namespace latwave

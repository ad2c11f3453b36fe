#pragma once
// Periodic traveling-wave profiles: residuals, bordered Newton solves, continuation,
// linearized profile operators and the derivative/adjoint data used by the modulation formulas.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latwave/dynamics.hpp"
#include "latwave/fourier.hpp"
#include "latwave/system.hpp"

namespace latwave {

/// Shared, immutable basis for (K, padding).
std::shared_ptr<const FourierBasis> basis_for(int K, int padding);

/// Best rational approximation p/N (lowest terms, N <= maxden) within tol, or N = 0.
std::pair<int, int> rationalize(double k, int maxden = 1000, double tol = 1e-12);

struct WaveProfile {
    std::string system;
    std::map<std::string, double> system_params;
    SystemClass cls = SystemClass::ReactionDiffusion;
    int d = 1;
    int K = 32;
    int padding = 2;
    Vec coeffs;  // stacked real coefficients, component-major
    int p = 0, N = 0;  // k = p/N when N > 0
    double k = 0.0;
    double omega = 0.0;
    Vec params;  // (M_1..M_d1) for Mixed, (M_1..M_d, E) for Hamiltonian
    double residual = 0.0;
    int iterations = 0;
    double slack = 0.0;
    double tol = 1e-10;

    double speed() const { return -omega / k; }
    double period() const { return 1.0 / std::abs(omega); }
    bool rational() const { return N > 0; }
    const FourierBasis& basis() const { return *basis_for(K, padding); }
    Vec component(int c) const { return coeffs.segment(c * (2 * K + 1), 2 * K + 1); }
};

Vec evaluate_profile(const WaveProfile& u, double zeta);
Vec shift_profile(const WaveProfile& u, double s);
/// Complex modes c_n, n = 0..K, one column per component.
CMat complex_modes(const WaveProfile& u);

/// Samples of the profile on the collocation grid shifted by p*k.
struct GridView {
    const FourierBasis& fb;
    const Vec& u;
    int d;
    double k;
    Mat at(int p) const { return fb.grid_values(u, d, p * k); }
};

/// -omega u' + projected spatial right-hand side, in coefficient space.
Vec profile_residual(const SystemSpec& s, const WaveProfile& u);
Vec profile_residual(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k, double omega);

/// delta_k H[u] coefficients (Hamiltonian class).
Vec profile_delta_h(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k);
/// Averages of the class densities: int H(u, Dtilde_k u) for the energy constraint.
double profile_energy(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k);

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 25;
    double singular_rcond = 1e-13;
    int polish_steps = 2;
};

/// Bordered-system constraint row.
struct Constraint {
    enum Kind { Mean, Energy, Phase, CosAmp, SinAmp } kind = Mean;
    int comp = 0;
    double target = 0.0;
    Vec ref;  // Phase: reference coefficients
};

struct BorderedProblem {
    std::vector<std::pair<int, Constraint>> replaced;  // component whose zero-mode row is swapped
    std::vector<Constraint> extra;
    bool slack = false;
    Vec slack_dir;
};

struct NewtonReport {
    Vec x;  // (coeffs, omega[, slack])
    int iterations = 0;
    double residual = 0.0;
    double rcond = 0.0;
    bool converged = false;
    std::vector<double> history;
};

/// Newton on the bordered system at fixed k. Throws NoConvergence / SingularJacobian.
NewtonReport bordered_newton(const SystemSpec& s, const FourierBasis& fb, double k, const BorderedProblem& prob,
                             const Vec& x0, const SolveOptions& opt);
Vec bordered_residual(const SystemSpec& s, const FourierBasis& fb, double k, const BorderedProblem& prob,
                      const Vec& x);
Mat bordered_jacobian(const SystemSpec& s, const FourierBasis& fb, double k, const BorderedProblem& prob,
                      const Vec& x);

/// Fixed-parameter problem for a class: phase pinned against `ref`.
BorderedProblem fixed_problem(const SystemSpec& s, const FourierBasis& fb, double k, const Vec& targets,
                              const Vec& ref);

/// Solves at wavenumber k with class targets (M..., E), starting from guess.
WaveProfile solve_profile(const SystemSpec& s, double k, const Vec& targets, const WaveProfile& guess,
                          const SolveOptions& opt = {});

/// Wave that starts the pipeline: exact for lambda_omega, Hopf/amplitude continuation otherwise.
WaveProfile seed_wave(const SystemSpec& s, int p, int N, const Vec& targets, int K = 32, int padding = 2,
                      const SolveOptions& opt = {});

/// Exact lambda-omega plane wave.
WaveProfile lambda_omega_wave(const SystemSpec& s, int p, int N, int K = 32, int padding = 2);

/// Eigenvalues/vectors of the constant-state symbol at wavenumber theta (d x d).
std::pair<CVec, CMat> constant_state_symbol(const SystemSpec& s, const Vec& ubar, double theta);

struct ContinuationCurve {
    std::string parameter;
    std::vector<double> values;
    std::vector<WaveProfile> samples;
    std::vector<double> step_sizes;
    double max_jump = 0.0;
    bool complete = true;
    std::string message;
};

/// Secant-predictor / Newton-corrector continuation of seed over the listed parameter values.
/// parameter: "k", "M<i>" (0-based component) or "E".
ContinuationCurve continue_family(const SystemSpec& s, const WaveProfile& seed, const std::string& parameter,
                                  const std::vector<double>& values, const SolveOptions& opt = {},
                                  int max_halvings = 6);

struct LinearizationMatrices {
    Mat L, L1, L2, Lstar;
};

/// L = -omega d/dz + A; L1, L2 collect (i xi k)-powers after T_k^p -> e^{i p k xi} T_k^p, d/dz -> d/dz + i xi.
LinearizationMatrices linearization_matrices(const SystemSpec& s, const WaveProfile& u);

struct WaveDerivatives {
    Vec dzeta, dk, dE, uad;
    std::vector<Vec> dM;
    double dk_omega = 0.0;
    Vec dM_omega;
    double dE_omega = 0.0;
    // diagnostics
    Vec kernel_singular_values;
    double adjoint_residual = 0.0;
    Vec adjoint_beta;
    double slack_derivative = 0.0;
};

WaveDerivatives wave_derivatives(const SystemSpec& s, const WaveProfile& u);

/// Parameter derivatives by re-solving at shifted parameters with one Richardson halving.
struct FdDerivatives {
    std::vector<std::string> names;
    Vec domega;
    std::vector<Vec> du;
    std::vector<WaveProfile> plus, minus, plus_half, minus_half;
    double richardson_gap = 0.0;
};
FdDerivatives parameter_derivatives_fd(const SystemSpec& s, const WaveProfile& u, double h = 1e-3,
                                       const SolveOptions& opt = {});

/// Names of the class parameters in order: k, M0.., E.
std::vector<std::string> parameter_names(const SystemSpec& s);
/// Parameter value by name.
double parameter_value(const WaveProfile& u, const std::string& name);
/// Copy of u with parameter `name` set to v (k or targets) -- does not re-solve.
WaveProfile with_parameter(const WaveProfile& u, const std::string& name, double v);

}  // namespace latwave

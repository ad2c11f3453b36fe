#pragma once
// Discrete Bloch transform, time-periodic Bloch symbols of the linearization about a wave,
// monodromy matrices with their xi-expansion, branch tracking and Riesz-block reduction.

#include <optional>
#include <string>
#include <vector>

#include "latwave/dynamics.hpp"
#include "latwave/ode.hpp"
#include "latwave/profile.hpp"

namespace latwave {

// ---------------------------------------------------------------- transform

struct BlochSample {
    int N = 1, P = 1, d = 1;
    std::vector<double> xi;   // xi_m = 2 pi m / L in [-pi/N, pi/N)
    std::vector<CMat> data;   // per m: N x d
};

/// Sampled exponents for L = N P sites, ascending.
std::vector<double> bloch_exponents(int N, int P);
BlochSample dbt(const CMat& f, int N);
BlochSample dbt(const RingState& f, int N);
CMat idbt(const BlochSample& s);

// ---------------------------------------------------------------- symbols

/// t -> A_xi(t), complex Nd x Nd, component-major (index c*N + j).
class SymbolGenerator {
public:
    SymbolGenerator(const SystemSpec& s, const WaveProfile& u, double xi);
    /// Linearization about a constant state on N sites, with an arbitrary nominal period.
    static SymbolGenerator constant_state(const SystemSpec& s, const Vec& ubar, int N, double xi, double period);

    CMat A(double t) const;
    /// Taylor jet in (i xi') about this generator's xi: A, dA/d(i xi), d2A/d(i xi)^2 / 2.
    Jet<CMat> jet(double t, int order) const;

    int N() const { return N_; }
    int d() const { return sys_.d; }
    int dim() const { return N_ * sys_.d; }
    double xi() const { return xi_; }
    double period() const { return period_; }
    const SystemSpec& system() const { return sys_; }

private:
    SymbolGenerator() = default;
    SystemSpec sys_;
    std::shared_ptr<const FourierBasis> fb_;
    Vec coeffs_;
    Vec ubar_;
    bool constant_ = false;
    int N_ = 1;
    double k_ = 0.0, omega_ = 0.0, xi_ = 0.0, period_ = 1.0;
};

/// Lift of a profile-space vector to the lattice: V(c*N + j) = v_c(k j + omega t).
CVec lift(const WaveProfile& u, const Vec& coeffs, double t);

// ---------------------------------------------------------------- monodromy

struct MonodromyOptions {
    double rtol = 1e-12;
    double atol = 1e-14;
};

struct BlochMonodromy {
    double xi = 0.0;
    CMat S0;
    std::optional<CMat> S1, S2;
    double liouville_rel_err = 0.0;
    int segments = 1;  // short propagators multiplied together
    OdeStats stats;
};

/// Evolution S_xi(t1, t0) applied to Phi0.
CMat propagate(const SymbolGenerator& gen, double t0, double t1, const CMat& Phi0, const MonodromyOptions& opt = {});
/// Number of segments so that each short propagator stays well conditioned (||A|| dt <= 4).
int monodromy_segments(const SymbolGenerator& gen);
/// S_xi(T, 0) over one temporal period as a product of segment propagators; the Liouville audit
/// compares sum log det(segment) with the integral of trace A.
BlochMonodromy monodromy(const SymbolGenerator& gen, const MonodromyOptions& opt = {});
/// S, S^(1), S^(2) at the generator's xi via the augmented triangular system.
BlochMonodromy monodromy_expansion(const SymbolGenerator& gen, const MonodromyOptions& opt = {});
/// Integral of trace A over one period (periodic trapezoid).
cplx trace_integral(const SymbolGenerator& gen, int nodes = 512);
/// exp of trace_integral.
cplx liouville_determinant(const SymbolGenerator& gen, int nodes = 512);

// ---------------------------------------------------------------- eigen

struct EigenPairs {
    CVec values;
    CMat vectors;  // unit columns
    double max_residual = 0.0;  // max ||M v - lambda v|| / ||M||
};
EigenPairs eig_dense(const CMat& M);

/// Half the distance from 1 to the first eigenvalue beyond the largest logarithmic gap of |lambda - 1|.
/// Without a gap of at least a factor 10 every eigenvalue counts as critical and eps0 = 0.5.
struct EpsSelection {
    double eps0 = 0.0;
    int critical = 0;
    double noncritical_distance = 0.0;  // 0 when every eigenvalue is critical
    std::vector<double> distances;
};
EpsSelection select_eps0(const CVec& eigenvalues, double floor = 1e-5);
/// Ball radius for branch tracking: 0.9 of the non-critical distance (1.0 if none), never below eps0.
double tracking_radius(const EpsSelection& sel);

// ---------------------------------------------------------------- branches

struct SpectralBranch {
    std::vector<double> xi;
    std::vector<cplx> lambda;
    std::vector<CVec> vectors;
    std::vector<std::string> matching;  // rule used to attach each sample
};

struct TrackOptions {
    MonodromyOptions mono;
    double overlap_threshold = 0.7;
    int max_refinements = 6;
    int jobs = 1;
    int expected = 0;  // branches to follow; 0 uses the class count
};

struct TrackResult {
    std::vector<SpectralBranch> branches;
    double eps0 = 0.0;
    int refinements = 0;
    double max_liouville = 0.0;  // over every monodromy computed
};

/// Expected number of critical branches for the system class.
int expected_branches(const SystemSpec& s);
TrackResult track_branches(const SystemSpec& s, const WaveProfile& u, const std::vector<double>& xi_grid,
                           double eps0, const TrackOptions& opt = {});

/// Branch data as CSV: xi, Re/Im per branch.
std::string branches_csv(const std::vector<SpectralBranch>& branches);

// ---------------------------------------------------------------- riesz

struct RieszOptions {
    MonodromyOptions mono;
    int contour_points = 32;
    double projector_tol = 1e-9;
    int max_doublings = 6;
};

struct RieszBlock {
    double xi = 0.0;
    CMat Omega;         // reduced matrix
    CMat Omega_tilde;   // rescaled, empty at xi = 0
    CMat Q, Qdual;      // continued bases (columns), Qdual^* Q = I
    double duality_error = 0.0;      // before re-dualization
    double projector_change = 0.0;   // last contour doubling
    int contour_points = 0;
    cplx projector_trace = 0.0;
    double liouville = 0.0;
    CVec eigenvalues;  // of S_xi inside the contour
};

RieszBlock riesz_block(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd, double xi,
                       double eps0, const RieszOptions& opt = {});

}  // namespace latwave

#pragma once
// Nonlinear ring integrations: exact-wave recurrence, local energy balance, packet transport.

#include <string>
#include <vector>

#include "latwave/lattice.hpp"
#include "latwave/ode.hpp"
#include "latwave/profile.hpp"

namespace latwave {

struct RingOptions {
    double rtol = 1e-11;
    double atol = 1e-13;
};

struct TrajectoryRecord {
    std::vector<double> t;
    std::vector<RingState> states;
    std::vector<double> energy;          // Hamiltonian class
    std::vector<Vec> component_sums;     // sum over the ring of every component
    OdeStats stats;
};

/// Integrates dU/dt = rhs_full from 0 to t_end with dense output at `times` (sorted, within [0, t_end]).
TrajectoryRecord integrate_ring(const SystemSpec& s, const RingState& U0, double t_end,
                                const std::vector<double>& times, const RingOptions& opt = {});

/// Ring state U_j = u(k j + omega t) on L = N P sites.
RingState wave_ring_state(const WaveProfile& u, int P, double t = 0.0);

struct Recurrence {
    int L = 0;
    std::vector<double> drift;  // max_j |U_j(m T) - U_j(0)| for m = 1..n
    double max_drift = 0.0;
    OdeStats stats;
};
Recurrence wave_recurrence(const SystemSpec& s, const WaveProfile& u, int P, int n_periods,
                           const RingOptions& opt = {});

struct EnergyAudit {
    double total_drift = 0.0;     // max |E(t) - E(0)| / |E(0)|
    double local_residual = 0.0;  // sup |d/dt H_j - Dtilde[flux]_j|
    double energy0 = 0.0;
    int audit_points = 0;
    OdeStats stats;
};
/// Runs the Hamiltonian ring from U0 for t_end and audits global and local energy balance at
/// `points` interior times; time derivatives by fourth-order differences on dense output.
EnergyAudit energy_audit(const SystemSpec& s, const RingState& U0, double t_end, int points = 40,
                         const RingOptions& opt = {});

struct PacketOptions {
    int cells = 200;         // ring of cells * N sites
    double sigma = 40.0;     // envelope width in sites
    double amplitude = 1e-3;
    double travel = 0.25;    // fraction of the ring the prediction may cross
    double max_periods = 8;  // cap on the run; unstable waves amplify rounding noise
    int samples = 60;
    RingOptions ring{1e-12, 1e-15};
};

struct PacketResult {
    double velocity = 0.0;             // sites per unit time
    double predicted = 0.0;            // -d_k omega (sites per unit time)
    double velocity_per_cell = 0.0;    // velocity / N
    std::vector<double> t, centroid, width;
    double t_end = 0.0;
    int L = 0;
};

/// Gaussian-enveloped phase perturbation of an RD wave; centroid of the smoothed |dU|^2.
/// Throws PacketDispersed if the envelope width exceeds a quarter of the ring.
PacketResult wave_packet_velocity(const SystemSpec& s, const WaveProfile& u, double group_velocity,
                                  const PacketOptions& opt = {});

/// CSV of t, centroid, width.
std::string packet_csv(const PacketResult& p);
/// CSV of t and the component sums / energy (decimated trajectory summary).
std::string trajectory_csv(const TrajectoryRecord& tr);

}  // namespace latwave

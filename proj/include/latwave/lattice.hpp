#pragma once
// Full-lattice evaluation on finite rings.

#include <utility>

#include "latwave/dynamics.hpp"

namespace latwave {

/// Ring view: at(p) row j holds U_{(j+p) mod L}.
struct RingView {
    const RingState& U;
    Mat at(int p) const;
};

RingState rhs_full(const SystemSpec& s, const RingState& U);

/// deltaH[U] = grad_U H(U, Dtilde U) + Dtilde^* grad_v H(U, Dtilde U).
RingState variational_derivative(const SystemSpec& s, const RingState& U);

/// Total ring energy sum_j H(U_j, (Dtilde U)_j).
double ring_energy(const SystemSpec& s, const RingState& U);

struct DensityFlux {
    Vec density;
    Vec flux;
};

/// Local energy density and flux; along trajectories d/dt density = Dtilde[flux].
DensityFlux energy_density_flux(const SystemSpec& s, const RingState& U);

/// Dtilde applied to a scalar ring field: eta (x_{j+1} - x_j).
Vec forward_difference(double eta, const Vec& x);

}  // namespace latwave

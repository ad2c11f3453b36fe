#include "latwave/lattice.hpp"

namespace latwave {

Mat RingView::at(int p) const {
    const int L = static_cast<int>(U.rows());
    Mat out(L, U.cols());
    int q = p % L;
    if (q < 0) q += L;
    for (int j = 0; j < L; ++j) out.row(j) = U.row((j + q) % L);
    return out;
}

namespace {
void require_ham(const SystemSpec& s, const char* what) {
    if (s.cls != SystemClass::Hamiltonian) throw Error(ErrorKind::WrongClass, std::string(what) + " needs a Hamiltonian system");
}
void require_width(const SystemSpec& s, const RingState& U) {
    if (U.cols() != s.d) throw Error(ErrorKind::DimensionMismatch, "ring state width != system dimension");
    if (U.rows() < 1) throw Error(ErrorKind::DimensionMismatch, "empty ring");
}
}  // namespace

RingState rhs_full(const SystemSpec& s, const RingState& U) {
    require_width(s, U);
    RingView v{U};
    return spatial_rhs(s, v);
}

RingState variational_derivative(const SystemSpec& s, const RingState& U) {
    require_ham(s, "variational_derivative");
    require_width(s, U);
    RingView v{U};
    CachedView<RingView> cv(v);
    HamFields<RingView> hf{s, cv, {}, {}};
    return hf.delta(0);
}

double ring_energy(const SystemSpec& s, const RingState& U) {
    require_ham(s, "ring_energy");
    require_width(s, U);
    RingView v{U};
    CachedView<RingView> cv(v);
    HamFields<RingView> hf{s, cv, {}, {}};
    return hf.density(0).sum();
}

DensityFlux energy_density_flux(const SystemSpec& s, const RingState& U) {
    require_ham(s, "energy_density_flux");
    require_width(s, U);
    RingView v{U};
    CachedView<RingView> cv(v);
    HamFields<RingView> hf{s, cv, {}, {}};
    return {hf.density(0), hf.flux(0)};
}

Vec forward_difference(double eta, const Vec& x) {
    const Eigen::Index L = x.size();
    Vec out(L);
    for (Eigen::Index j = 0; j < L; ++j) out(j) = eta * (x((j + 1) % L) - x(j));
    return out;
}

}  // namespace latwave

#include "latwave/ringsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "latwave/io.hpp"

namespace latwave {

namespace {

OdeOptions ode_options(const RingOptions& opt) {
    OdeOptions o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    return o;
}

}  // namespace

TrajectoryRecord integrate_ring(const SystemSpec& s, const RingState& U0, double t_end,
                                const std::vector<double>& times, const RingOptions& opt) {
    if (!(t_end > 0)) throw Error(ErrorKind::DimensionMismatch, "t_end must be positive");
    if (U0.cols() != s.d) throw Error(ErrorKind::DimensionMismatch, "ring state width != system dimension");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw Error(ErrorKind::DimensionMismatch, "sample times must increase");
    TrajectoryRecord tr;
    auto f = [&s](double, const RingState& U) { return rhs_full(s, U); };
    auto sink = [&](double t, const RingState& U) {
        tr.t.push_back(t);
        tr.states.push_back(U);
        tr.component_sums.push_back(U.colwise().sum().transpose());
        if (s.cls == SystemClass::Hamiltonian) tr.energy.push_back(ring_energy(s, U));
    };
    Dopri5<RingState>::integrate(f, 0.0, U0, t_end, ode_options(opt), &tr.stats, times, sink);
    return tr;
}

RingState wave_ring_state(const WaveProfile& u, int P, double t) {
    if (!u.rational()) throw Error(ErrorKind::IrrationalWavenumber, "ring states need k = p/N");
    const int L = u.N * P;
    const FourierBasis& fb = u.basis();
    RingState U(L, u.d);
    for (int j = 0; j < L; ++j) U.row(j) = fb.eval_all(u.coeffs, u.d, u.k * j + u.omega * t).transpose();
    return U;
}

Recurrence wave_recurrence(const SystemSpec& s, const WaveProfile& u, int P, int n_periods, const RingOptions& opt) {
    if (P < 1 || n_periods < 1) throw Error(ErrorKind::DimensionMismatch, "P and n_periods must be positive");
    const RingState U0 = wave_ring_state(u, P);
    const double T = u.period();
    std::vector<double> times;
    for (int m = 1; m <= n_periods; ++m) times.push_back(m * T);
    const TrajectoryRecord tr = integrate_ring(s, U0, n_periods * T, times, opt);
    Recurrence r;
    r.L = static_cast<int>(U0.rows());
    r.stats = tr.stats;
    for (const auto& U : tr.states) {
        r.drift.push_back((U - U0).cwiseAbs().maxCoeff());
        r.max_drift = std::max(r.max_drift, r.drift.back());
    }
    return r;
}

EnergyAudit energy_audit(const SystemSpec& s, const RingState& U0, double t_end, int points, const RingOptions& opt) {
    if (s.cls != SystemClass::Hamiltonian) throw Error(ErrorKind::WrongClass, "energy_audit needs a Hamiltonian system");
    if (points < 1) throw Error(ErrorKind::DimensionMismatch, "need at least one audit point");
    const double h = 2e-3 * t_end / std::max(1, points);
    std::vector<double> times;
    for (int i = 0; i < points; ++i) {
        const double tc = t_end * (i + 0.5) / points;
        for (int q = -2; q <= 2; ++q) times.push_back(tc + q * h);
    }
    times.push_back(t_end);
    const TrajectoryRecord tr = integrate_ring(s, U0, t_end, times, opt);
    EnergyAudit a;
    a.stats = tr.stats;
    a.energy0 = ring_energy(s, U0);
    a.audit_points = points;
    const double scale = std::max(std::abs(a.energy0), 1e-300);
    for (double e : tr.energy) a.total_drift = std::max(a.total_drift, std::abs(e - a.energy0) / scale);
    for (int i = 0; i < points; ++i) {
        std::vector<Vec> dens;
        for (int q = 0; q < 5; ++q) dens.push_back(energy_density_flux(s, tr.states[5 * i + q]).density);
        const Vec dHdt = (-dens[4] + 8.0 * dens[3] - 8.0 * dens[1] + dens[0]) / (12.0 * h);
        const Vec flux = energy_density_flux(s, tr.states[5 * i + 2]).flux;
        a.local_residual = std::max(a.local_residual, (dHdt - forward_difference(s.eta, flux)).cwiseAbs().maxCoeff());
    }
    return a;
}

namespace {

struct Centroid {
    double c = 0.0, width = 0.0;
};

/// Circular centroid and width of rho on a ring of L sites.
Centroid ring_centroid(const Vec& rho) {
    const Eigen::Index L = rho.size();
    cplx z = 0.0;
    double tot = 0.0;
    for (Eigen::Index j = 0; j < L; ++j) {
        z += rho(j) * std::exp(cplx(0.0, kTwoPi * j / L));
        tot += rho(j);
    }
    Centroid out;
    out.c = std::arg(z) / kTwoPi * L;
    if (out.c < 0) out.c += L;
    double var = 0.0;
    for (Eigen::Index j = 0; j < L; ++j) {
        double dj = std::fmod(j - out.c + 1.5 * L, static_cast<double>(L)) - 0.5 * L;
        var += rho(j) * dj * dj;
    }
    out.width = std::sqrt(var / std::max(tot, 1e-300));
    return out;
}

/// Box average over N consecutive sites (centered) of the row-wise squared norm.
Vec smoothed_energy(const RingState& dU, int N) {
    const Eigen::Index L = dU.rows();
    const Vec e = dU.rowwise().squaredNorm();
    Vec out = Vec::Zero(L);
    for (Eigen::Index j = 0; j < L; ++j)
        for (int q = 0; q < N; ++q) out(j) += e((j + q - N / 2 + L) % L);
    return out / static_cast<double>(N);
}

}  // namespace

PacketResult wave_packet_velocity(const SystemSpec& s, const WaveProfile& u, double group_velocity,
                                  const PacketOptions& opt) {
    if (s.cls != SystemClass::ReactionDiffusion) throw Error(ErrorKind::WrongClass, "packet runs need an RD system");
    PacketResult pr;
    pr.L = u.N * opt.cells;
    pr.predicted = -group_velocity;
    const double T = u.period();
    const double speed = std::max(std::abs(pr.predicted), 0.1);
    pr.t_end = std::min(opt.travel * pr.L / speed, opt.max_periods * T);

    const FourierBasis& fb = u.basis();
    const Vec du = fb.deriv_all(u.coeffs, u.d);
    RingState U0 = wave_ring_state(u, opt.cells);
    const double j0 = 0.5 * pr.L;
    for (int j = 0; j < pr.L; ++j) {
        const double g = std::exp(-0.5 * std::pow((j - j0) / opt.sigma, 2));
        U0.row(j) += opt.amplitude * g * fb.eval_all(du, u.d, u.k * j).transpose();
    }
    std::vector<double> times;
    for (int i = 0; i <= opt.samples; ++i) times.push_back(pr.t_end * i / opt.samples);
    const TrajectoryRecord tr = integrate_ring(s, U0, pr.t_end, times, opt.ring);

    double unwrap = 0.0, prev = j0;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const RingState dU = tr.states[i] - wave_ring_state(u, opt.cells, tr.t[i]);
        const Centroid c = ring_centroid(smoothed_energy(dU, u.N));
        double step = c.c - prev;
        if (step > 0.5 * pr.L) step -= pr.L;
        if (step < -0.5 * pr.L) step += pr.L;
        unwrap += step;
        prev = c.c;
        pr.t.push_back(tr.t[i]);
        pr.centroid.push_back(j0 + unwrap);
        pr.width.push_back(c.width);
        if (c.width > 0.25 * pr.L)
            throw Error(ErrorKind::PacketDispersed, "envelope width " + std::to_string(c.width) + " exceeds a quarter of the ring at t = " +
                                                        std::to_string(tr.t[i]));
    }
    // least-squares slope after the initial transient
    double st = 0, sc = 0, stt = 0, stc = 0;
    int n = 0;
    for (std::size_t i = 0; i < pr.t.size(); ++i) {
        if (pr.t[i] < 0.2 * pr.t_end) continue;
        st += pr.t[i];
        sc += pr.centroid[i];
        stt += pr.t[i] * pr.t[i];
        stc += pr.t[i] * pr.centroid[i];
        ++n;
    }
    pr.velocity = (n * stc - st * sc) / (n * stt - st * st);
    pr.velocity_per_cell = pr.velocity / u.N;
    return pr;
}

std::string packet_csv(const PacketResult& p) {
    std::ostringstream os;
    os << "t,centroid,width\n";
    for (std::size_t i = 0; i < p.t.size(); ++i)
        os << fmt_double(p.t[i]) << "," << fmt_double(p.centroid[i]) << "," << fmt_double(p.width[i]) << "\n";
    return os.str();
}

std::string trajectory_csv(const TrajectoryRecord& tr) {
    std::ostringstream os;
    os << "t";
    const int d = tr.component_sums.empty() ? 0 : static_cast<int>(tr.component_sums[0].size());
    for (int c = 0; c < d; ++c) os << ",sum_" << c;
    if (!tr.energy.empty()) os << ",energy";
    os << "\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        os << fmt_double(tr.t[i]);
        for (int c = 0; c < d; ++c) os << "," << fmt_double(tr.component_sums[i](c));
        if (!tr.energy.empty()) os << "," << fmt_double(tr.energy[i]);
        os << "\n";
    }
    return os.str();
}

}  // namespace latwave

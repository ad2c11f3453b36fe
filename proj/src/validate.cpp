#include "latwave/validate.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace latwave {

Check check_le(const std::string& name, double value, double tol, const std::string& note) {
    return Check{name, value, tol, std::isfinite(value) && value <= tol, note};
}

Check check_window(const std::string& name, double value, double lo, double hi, const std::string& note) {
    Check c{name, value, hi, std::isfinite(value) && value >= lo && value <= hi, note};
    if (c.note.empty()) c.note = "window [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    return c;
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

// ---------------------------------------------------------------- RD

std::vector<double> symmetric_grid(double xi_max) {
    std::vector<double> g;
    for (double f : {-1.0, -0.5, -0.25, -0.125, 0.125, 0.25, 0.5, 1.0}) g.push_back(f * xi_max);
    return g;
}

namespace {

/// Real coefficients c_1..c_order of sum c_m (i xi)^m fitted to mu, residuals scaled by 1/|xi|.
Vec fit_powers(const std::vector<double>& xi, const std::vector<cplx>& mu, int order) {
    const int n = static_cast<int>(xi.size());
    Mat A(2 * n, order);
    Vec rhs(2 * n);
    for (int i = 0; i < n; ++i) {
        const double w = 1.0 / std::abs(xi[i]);
        cplx z = 1.0;
        for (int m = 0; m < order; ++m) {
            z *= cplx(0.0, xi[i]);
            A(2 * i, m) = w * z.real();
            A(2 * i + 1, m) = w * z.imag();
        }
        rhs(2 * i) = w * mu[i].real();
        rhs(2 * i + 1) = w * mu[i].imag();
    }
    return A.colPivHouseholderQr().solve(rhs);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return NAN;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RDFit fit_rd_branch(const SpectralBranch& branch, double period, int order) {
    RDFit f;
    std::vector<cplx> mu;
    for (std::size_t i = 0; i < branch.xi.size(); ++i) {
        if (branch.xi[i] == 0.0) continue;
        const cplx lam = branch.lambda[i];
        if (std::abs(lam - 1.0) >= 1.0)
            throw Error(ErrorKind::BranchMissing, "principal logarithm would wrap: |lambda - 1| >= 1 at xi = " +
                                                      std::to_string(branch.xi[i]));
        f.xi.push_back(branch.xi[i]);
        f.lambda.push_back(lam);
        mu.push_back(std::log(lam) / period);
        if (std::abs(lam) > 1.0 + 1e-12) f.sideband_unstable = true;
    }
    if (f.xi.size() < 2) throw Error(ErrorKind::BranchMissing, "need at least two nonzero xi samples");
    const int ord = std::min<int>(order, static_cast<int>(f.xi.size()));
    const Vec c = fit_powers(f.xi, mu, std::max(2, ord));
    f.a = c(0);
    f.b = c(1);
    const Vec c2 = fit_powers(f.xi, mu, 2);
    f.a_two_term = c2(0);
    f.b_two_term = c2(1);
    std::vector<double> ax;
    for (std::size_t i = 0; i < f.xi.size(); ++i) {
        const cplx ix(0.0, f.xi[i]);
        f.remainder.push_back(std::abs(mu[i] - ix * f.a - ix * ix * f.b));
        ax.push_back(std::abs(f.xi[i]));
    }
    f.remainder_slope = loglog_slope(ax, f.remainder);
    return f;
}

AdaptiveRDFit fit_rd_adaptive(const SystemSpec& s, const WaveProfile& u, double xi_start, int max_halvings,
                              const TrackOptions& opt) {
    const EpsSelection sel = select_eps0(eig_dense(monodromy(SymbolGenerator(s, u, 0.0), opt.mono).S0).values);
    AdaptiveRDFit out;
    out.critical = sel.critical;
    TrackOptions topt = opt;
    if (sel.critical > expected_branches(s)) topt.expected = sel.critical;
    const CVec phase = lift(u, u.basis().deriv_all(u.coeffs, u.d), 0.0);
    double xi_max = xi_start;
    for (int m = 0; m <= max_halvings; ++m, xi_max *= 0.5) {
        try {
            const TrackResult tr = track_branches(s, u, symmetric_grid(xi_max), tracking_radius(sel), topt);
            out.max_liouville = std::max(out.max_liouville, tr.max_liouville);
            if (tr.branches.empty() || (topt.expected == 0 && tr.branches.size() != 1))
                throw Error(ErrorKind::BranchCountMismatch, "expected one critical branch");
            // phase-mode branch: largest overlap at the smallest nonzero |xi|
            std::size_t best = 0;
            double best_ov = -1.0;
            for (std::size_t b = 0; b < tr.branches.size(); ++b) {
                const SpectralBranch& br = tr.branches[b];
                std::size_t i0 = 0;
                double amin = INFINITY;
                for (std::size_t i = 0; i < br.xi.size(); ++i)
                    if (br.xi[i] != 0.0 && std::abs(br.xi[i]) < amin) {
                        amin = std::abs(br.xi[i]);
                        i0 = i;
                    }
                const double ov = std::abs(phase.dot(br.vectors[i0])) / (phase.norm() * br.vectors[i0].norm());
                if (ov > best_ov) {
                    best_ov = ov;
                    best = b;
                }
            }
            out.phase_overlap = best_ov;
            RDFit fit = fit_rd_branch(tr.branches[best], u.period());
            if (!(fit.remainder_slope >= 2.7 && fit.remainder_slope <= 3.5)) {
                out.attempts.emplace_back(xi_max, "remainder slope " + std::to_string(fit.remainder_slope));
                continue;
            }
            out.attempts.emplace_back(xi_max, "ok");
            out.fit = std::move(fit);
            out.branch = tr.branches[best];
            out.xi_max = xi_max;
            return out;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::BranchCountMismatch && e.kind() != ErrorKind::BranchMissing) throw;
            out.attempts.emplace_back(xi_max, e.what());
        }
    }
    throw Error(ErrorKind::BranchMissing, "no admissible xi grid down to xi_max = " + std::to_string(xi_max * 2));
}

ValidationReport validate_rd(const SystemSpec& s, const WaveProfile& u, const SpectralBranch& branch,
                             const RDWhitham& w, double analytic_a) {
    if (s.cls != SystemClass::ReactionDiffusion) throw Error(ErrorKind::WrongClass, "validate_rd needs an RD system");
    ValidationReport r;
    r.cls = s.cls;
    r.system = s.name;
    r.k = u.k;
    r.omega = u.omega;
    r.fit = fit_rd_branch(branch, u.period());
    r.xi0 = 0.0;
    for (double x : r.fit.xi) r.xi0 = std::max(r.xi0, std::abs(x));
    r.a_ref = w.group_velocity;
    r.d_ref = w.diffusion;
    r.checks.push_back(check_le("a_fit vs adjoint pairing", std::abs(r.fit.a - w.group_velocity), 1e-6));
    r.checks.push_back(check_le("a_fit vs d_k omega", std::abs(r.fit.a - w.dk_omega), 1e-6));
    r.checks.push_back(check_le("pairing vs d_k omega", std::abs(w.group_velocity - w.dk_omega), 1e-6));
    if (std::isfinite(analytic_a))
        r.checks.push_back(check_le("a_fit vs analytic", std::abs(r.fit.a - analytic_a), 1e-6));
    r.checks.push_back(check_le("d_fit vs diffusion pairing", std::abs(r.fit.b - w.diffusion), 1e-5));
    r.checks.push_back(check_window("remainder log-log slope", r.fit.remainder_slope, 2.7, 3.5));
    // |lambda| = exp(-T xi^2 d) to second order, so growth goes with d < 0
    const bool predicted = w.diffusion < 0;
    Check sb{"side-band flag vs sign of d", r.fit.sideband_unstable ? 1.0 : 0.0, 0.0,
             predicted == r.fit.sideband_unstable,
             std::string("|lambda| > 1 observed: ") + (r.fit.sideband_unstable ? "yes" : "no")};
    r.checks.push_back(sb);
    return r;
}

// ---------------------------------------------------------------- Mixed / Hamiltonian

std::vector<cplx> extrapolate_velocities(const std::vector<SpectralBranch>& branches, double period, double scale) {
    if (branches.empty()) throw Error(ErrorKind::BranchMissing, "no branches");
    const auto& xi = branches[0].xi;
    double h = INFINITY;
    for (double x : xi)
        if (x > 0) h = std::min(h, x);
    auto find = [&](double x) {
        for (std::size_t i = 0; i < xi.size(); ++i)
            if (std::abs(xi[i] - x) <= 1e-12 * std::abs(x)) return static_cast<int>(i);
        return -1;
    };
    if (!std::isfinite(h) || find(-h) < 0 || find(2 * h) < 0 || find(-2 * h) < 0)
        throw Error(ErrorKind::BranchMissing, "extrapolation needs samples at +-h and +-2h");
    std::vector<cplx> out;
    for (const auto& b : branches) {
        auto v = [&](double x) {
            const int i = find(x);
            return std::log(b.lambda[i]) / (cplx(0.0, x) * period) / scale;
        };
        const cplx v1 = 0.5 * (v(h) + v(-h)), v2 = 0.5 * (v(2 * h) + v(-2 * h));
        out.push_back((4.0 * v1 - v2) / 3.0);
    }
    return out;
}

Assignment assign_speeds(const std::vector<cplx>& velocities, const CVec& speeds) {
    const int n = static_cast<int>(velocities.size());
    if (speeds.size() != n) throw Error(ErrorKind::BranchCountMismatch, "velocity and speed counts differ");
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    Assignment a;
    a.cost = INFINITY;
    a.second_cost = INFINITY;
    do {
        double c = 0;
        for (int i = 0; i < n; ++i) c += std::abs(velocities[i] - speeds(p[i]));
        if (c < a.cost) {
            a.second_cost = a.cost;
            a.cost = c;
            a.perm = p;
        } else if (c < a.second_cost) {
            a.second_cost = c;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    if (n > 1 && a.second_cost <= 1.1 * a.cost)
        throw Error(ErrorKind::AssignmentAmbiguous, "two assignments within 10% cost (" + std::to_string(a.cost) +
                                                        " vs " + std::to_string(a.second_cost) + ")");
    for (int i = 0; i < n; ++i)
        a.rel_err.push_back(std::abs(velocities[i] - speeds(a.perm[i])) / std::max(std::abs(speeds(a.perm[i])), 1e-300));
    return a;
}

ValidationReport validate_system(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd,
                                 const WhithamJacobian& jac, const SystemValidationOptions& opt) {
    if (s.cls == SystemClass::ReactionDiffusion) throw Error(ErrorKind::WrongClass, "validate_system is for Mixed/Hamiltonian");
    ValidationReport r;
    r.cls = s.cls;
    r.system = s.name;
    r.k = u.k;
    r.omega = u.omega;
    const double T = u.period();
    const SymbolGenerator g0(s, u, 0.0);
    const EpsSelection sel = select_eps0(eig_dense(monodromy(g0, opt.track.mono).S0).values);
    r.eps0 = sel.eps0;
    const double radius = tracking_radius(sel);

    // shrink xi0 until the two extrapolants agree, keep the best level
    double best = INFINITY;
    std::vector<cplx> best_v;
    for (int m = 0; m <= opt.max_shrink; ++m) {
        const double xi0 = 0.1 * kPi / u.N * std::ldexp(1.0, -m);
        const TrackResult tr = track_branches(s, u, symmetric_grid(xi0), radius, opt.track);
        // extrapolants from (h, 2h) and from (2h, 4h)
        const std::vector<cplx> e1 = extrapolate_velocities(tr.branches, T);
        std::vector<SpectralBranch> coarse = tr.branches;
        for (auto& b : coarse) {
            SpectralBranch c;
            for (std::size_t i = 0; i < b.xi.size(); ++i)
                if (std::abs(b.xi[i]) > 0.2 * xi0) {
                    c.xi.push_back(b.xi[i]);
                    c.lambda.push_back(b.lambda[i]);
                }
            b = c;
        }
        const std::vector<cplx> e2 = extrapolate_velocities(coarse, T);
        double gap = 0;
        for (std::size_t a = 0; a < e1.size(); ++a)
            gap = std::max(gap, std::abs(e1[a] - e2[a]) / std::max(std::abs(e1[a]), 1e-3));
        r.shrink_history.emplace_back(xi0, gap);
        if (gap < best) {
            best = gap;
            best_v = e1;
            r.xi0 = xi0;
        }
        if (gap <= opt.agree_tol) break;
        if (m > 0 && gap > 4 * r.shrink_history[m - 1].second) break;  // roundoff dominated
    }
    r.velocities = best_v;

    // match against each Jacobian variant
    double best_err = INFINITY;
    const JacobianVariant* chosen = nullptr;
    Assignment chosen_a;
    for (const auto& v : jac.variants) {
        try {
            const Assignment a = assign_speeds(r.velocities, v.cs.speeds);
            const double e = *std::max_element(a.rel_err.begin(), a.rel_err.end());
            r.variant_errors.emplace_back(v.label, e);
            if (e < best_err) {
                best_err = e;
                chosen = &v;
                chosen_a = a;
            }
        } catch (const Error& ex) {
            if (ex.kind() != ErrorKind::AssignmentAmbiguous) throw;
            r.variant_errors.emplace_back(v.label, NAN);
            if (jac.variants.size() == 1) throw;
        }
    }
    if (!chosen) throw Error(ErrorKind::AssignmentAmbiguous, "no Jacobian variant admits an unambiguous assignment");
    r.variant = chosen->label;
    r.assignment = chosen_a.perm;
    for (Eigen::Index i = 0; i < chosen->cs.speeds.size(); ++i) r.speeds.push_back(chosen->cs.speeds(i));
    for (std::size_t a = 0; a < r.velocities.size(); ++a)
        r.checks.push_back(check_le("branch " + std::to_string(a) + " velocity vs speed", chosen_a.rel_err[a],
                                    opt.rel_tol, "relative; variant " + chosen->label));
    if (jac.variants.size() > 1) {
        std::string note;
        for (const auto& [lab, e] : r.variant_errors) note += lab + "=" + std::to_string(e) + " ";
        r.checks.push_back(Check{"sign variant adjudicated", best_err, opt.rel_tol, best_err <= opt.rel_tol,
                                 "selected " + chosen->label + "; " + note});
    }

    // Riesz-block limit
    r.omega_tilde_xi = opt.riesz_xi_factor * kPi / u.N;
    const RieszBlock rb = riesz_block(s, u, wd, r.omega_tilde_xi, sel.eps0, opt.riesz);
    r.omega_tilde = rb.Omega_tilde;
    r.TG = T * chosen->G;
    r.omega_tilde_error = (rb.Omega_tilde - r.TG.cast<cplx>()).norm();
    r.checks.push_back(check_le("||Omega_tilde - T G||", r.omega_tilde_error, opt.omega_tol,
                                "Frobenius, xi = " + std::to_string(r.omega_tilde_xi) +
                                    ", ||T G|| = " + std::to_string(r.TG.norm())));
    return r;
}

// ---------------------------------------------------------------- structure and identities

JordanStructure jordan_structure(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd,
                                 const MonodromyOptions& mo) {
    JordanStructure js;
    js.expected = expected_branches(s);
    const SymbolGenerator g0(s, u, 0.0);
    const BlochMonodromy m = monodromy_expansion(g0, mo);
    js.liouville = m.liouville_rel_err;
    const EigenPairs ep = eig_dense(m.S0);
    js.eps = select_eps0(ep.values);
    int best = -1;
    for (Eigen::Index i = 0; i < ep.values.size(); ++i)
        if (std::abs(ep.values(i) - 1.0) < js.eps.eps0) {
            ++js.multiplicity;
            if (best < 0 || std::abs(ep.values(i) - 1.0) < std::abs(ep.values(best) - 1.0)) best = static_cast<int>(i);
        }

    const double T = u.period();
    const CVec Vz = lift(u, wd.dzeta, 0.0);
    js.zeta_residual = (m.S0 * Vz - Vz).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < wd.dM.size(); ++i) {
        const CVec V = lift(u, wd.dM[i], 0.0);
        js.dM_residual.push_back((m.S0 * V - V - T * wd.dM_omega(i) * Vz).cwiseAbs().maxCoeff());
    }
    if (s.cls == SystemClass::Hamiltonian) {
        const CVec V = lift(u, wd.dE, 0.0);
        js.dE_residual = (m.S0 * V - V - T * wd.dE_omega * Vz).cwiseAbs().maxCoeff();
    }
    const CVec Vk = lift(u, wd.dk, 0.0);
    js.k_residual = (m.S0 * Vk + (*m.S1) * Vz - Vk - T * wd.dk_omega * Vz).cwiseAbs().maxCoeff();
    if (best >= 0) js.eigvec_overlap = std::abs(ep.vectors.col(best).dot(Vz)) / Vz.norm();

    if (js.multiplicity == js.expected) {
        const RieszBlock rb = riesz_block(s, u, wd, 0.0, js.eps.eps0);
        const Eigen::JacobiSVD<CMat> svd(rb.Omega);
        const auto sv = svd.singularValues();
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > 1e-6 * std::max(1.0, sv(0))) ++js.omega0_rank;
    } else {
        throw Error(ErrorKind::MultiplicityMismatch, "multiplicity " + std::to_string(js.multiplicity) +
                                                         " of eigenvalue 1, expected " + std::to_string(js.expected));
    }
    return js;
}

namespace {

/// Smooth random profile vector: coefficients uniform in [-1, 1] damped by exp(-n).
Vec smooth_random(std::mt19937_64& rng, int d, int K) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int M = 2 * K + 1;
    Vec v(d * M);
    for (int c = 0; c < d; ++c) {
        v(c * M) = U(rng);
        for (int n = 1; n <= K; ++n) {
            v(c * M + 2 * n - 1) = U(rng) * std::exp(-double(n));
            v(c * M + 2 * n) = U(rng) * std::exp(-double(n));
        }
    }
    return v;
}

double pairing(const CVec& a, const CVec& b) { return (a.transpose() * b)(0).real(); }

}  // namespace

DualityAudit duality_audit(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> Ut(0.0, 1.0);
    const FourierBasis& fb = u.basis();
    const LinearizationMatrices lm = linearization_matrices(s, u);
    const SymbolGenerator g0(s, u, 0.0);
    const double T = u.period();
    const Eigen::Index n = u.coeffs.size();
    DualityAudit da;

    std::vector<Vec> probes{wd.dzeta, smooth_random(rng, s.d, u.K), smooth_random(rng, s.d, u.K)};
    for (const Vec& v : probes) {
        const double t = T * Ut(rng);
        const Jet<CMat> J = g0.jet(t, 1);
        const CVec Vv = lift(u, v, t);
        // (i)  (d/dt - A0) V^v = -V^{L v}
        const CVec dt = u.omega * lift(u, fb.deriv_all(v, s.d), t);
        da.lift_residual = std::max(da.lift_residual, (dt - J.c[0] * Vv + lift(u, lm.L * v, t)).cwiseAbs().maxCoeff());
        // (ii) A^(1) V^v = V^{(L1 - c) v}
        const Vec w1 = (lm.L1 - u.speed() * Mat::Identity(n, n)) * v;
        da.shift_residual = std::max(da.shift_residual, (J.c[1] * Vv - lift(u, w1, t)).cwiseAbs().maxCoeff());
    }

    // (iii) d/dt <V^w, V^v> = <V^{L* w}, V^v> - <V^w, V^{L v}>
    for (int trial = 0; trial < 2; ++trial) {
        const Vec w = smooth_random(rng, s.d, u.K), v = smooth_random(rng, s.d, u.K);
        const Vec Lsw = lm.Lstar * w, Lv = lm.L * v;
        const double t = T * Ut(rng);
        const double h = 1e-3 * T;
        auto P = [&](double tt) { return pairing(lift(u, w, tt), lift(u, v, tt)); };
        const double deriv = (-P(t + 2 * h) + 8 * P(t + h) - 8 * P(t - h) + P(t - 2 * h)) / (12 * h);
        const double rhs = pairing(lift(u, Lsw, t), lift(u, v, t)) - pairing(lift(u, w, t), lift(u, Lv, t));
        da.pairing_residual = std::max(da.pairing_residual, std::abs(deriv - rhs));
    }

    // (iv) <V^uad(t), V^zeta(t)> = N for all t
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < 16; ++i) {
        const double t = T * Ut(rng);
        const double p = pairing(lift(u, wd.uad, t), lift(u, wd.dzeta, t));
        lo = std::min(lo, p);
        hi = std::max(hi, p);
        da.constancy_residual = std::max(da.constancy_residual, std::abs(p - u.N));
    }
    da.pairing_value = 0.5 * (lo + hi);
    return da;
}

}  // namespace latwave

#include "latwave/profile.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <mutex>
#include <numeric>

namespace latwave {

std::shared_ptr<const FourierBasis> basis_for(int K, int padding) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::shared_ptr<const FourierBasis>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(K, padding);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto b = std::make_shared<const FourierBasis>(K, padding);
    cache.emplace(key, b);
    return b;
}

std::pair<int, int> rationalize(double k, int maxden, double tol) {
    for (int N = 1; N <= maxden; ++N) {
        const double p = std::round(k * N);
        if (std::abs(p / N - k) <= tol) {
            const int pi = static_cast<int>(p);
            const int g = std::gcd(std::abs(pi), N);
            return {pi / (g ? g : 1), N / (g ? g : 1)};
        }
    }
    return {0, 0};
}

Vec evaluate_profile(const WaveProfile& u, double zeta) { return u.basis().eval_all(u.coeffs, u.d, zeta); }

Vec shift_profile(const WaveProfile& u, double s) { return u.basis().shift_all(u.coeffs, u.d, s); }

CMat complex_modes(const WaveProfile& u) {
    CMat out(u.K + 1, u.d);
    for (int c = 0; c < u.d; ++c) out.col(c) = to_complex_modes(u.component(c));
    return out;
}

namespace {

void require_dims(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs) {
    if (coeffs.size() != static_cast<Eigen::Index>(s.d) * fb.size())
        throw Error(ErrorKind::DimensionMismatch, "profile coefficients do not match system dimension " +
                                                      std::to_string(s.d) + " x " + std::to_string(fb.size()));
}

Mat block_diag(const Mat& b, int d) {
    const Eigen::Index n = b.rows();
    Mat out = Mat::Zero(n * d, n * d);
    for (int c = 0; c < d; ++c) out.block(c * n, c * n, n, n) = b;
    return out;
}

OpBuilder<Mat> fourier_builder(const FourierBasis& fb, int d, double k, int order) {
    OpBuilder<Mat> B;
    B.n = fb.size();
    B.d = d;
    B.order = order;
    const FourierBasis* f = &fb;
    B.base_shift = [f, k](int p) { return f->shift_matrix(p * k); };
    B.base_mult = [f](const Vec& v) { return Mat(f->project() * v.asDiagonal() * f->eval_grid()); };
    return B;
}

/// Spatial linearization jet in coefficient space.
Jet<Mat> spatial_jet(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k, int order) {
    const OpBuilder<Mat> B = fourier_builder(fb, s.d, k, order);
    GridView view{fb, coeffs, s.d, k};
    return spatial_linearization(s, B, view);
}

double energy_k_partial(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k) {
    GridView view{fb, coeffs, s.d, k};
    CachedView<GridView> cv(view);
    HamFields<GridView> hf{s, cv, {}, {}};
    const Mat hv = hf.hv(0);
    const Mat dshift = fb.grid_values(fb.deriv_all(coeffs, s.d), s.d, k);
    return s.eta * hv.cwiseProduct(dshift).sum() / fb.grid_size();
}

double constraint_value(const SystemSpec& s, const FourierBasis& fb, double k, const Constraint& c,
                        const Vec& u) {
    const int M = fb.size();
    switch (c.kind) {
        case Constraint::Mean: return u(c.comp * M) - c.target;
        case Constraint::Energy: return profile_energy(s, fb, u, k) - c.target;
        case Constraint::Phase: return fb.deriv_all(c.ref, s.d).dot(u - c.ref);
        case Constraint::CosAmp: return std::sqrt(2.0) * u(c.comp * M + 1) - c.target;
        case Constraint::SinAmp: return u(c.comp * M + 2) - c.target;
    }
    return 0.0;
}

Vec constraint_grad(const SystemSpec& s, const FourierBasis& fb, double k, const Constraint& c, const Vec& u) {
    const int M = fb.size();
    Vec g = Vec::Zero(u.size());
    switch (c.kind) {
        case Constraint::Mean: g(c.comp * M) = 1.0; break;
        case Constraint::Energy: g = profile_delta_h(s, fb, u, k); break;
        case Constraint::Phase: g = fb.deriv_all(c.ref, s.d); break;
        case Constraint::CosAmp: g(c.comp * M + 1) = std::sqrt(2.0); break;
        case Constraint::SinAmp: g(c.comp * M + 2) = 1.0; break;
    }
    return g;
}

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

Vec profile_residual(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k, double omega) {
    require_dims(s, fb, coeffs);
    GridView view{fb, coeffs, s.d, k};
    const Mat g = spatial_rhs(s, view);
    return fb.from_grid(g) - omega * fb.deriv_all(coeffs, s.d);
}

Vec profile_residual(const SystemSpec& s, const WaveProfile& u) {
    if (u.d != s.d) throw Error(ErrorKind::DimensionMismatch, "wave dimension differs from system dimension");
    return profile_residual(s, u.basis(), u.coeffs, u.k, u.omega);
}

Vec profile_delta_h(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k) {
    if (s.cls != SystemClass::Hamiltonian) throw Error(ErrorKind::WrongClass, "delta H needs a Hamiltonian system");
    require_dims(s, fb, coeffs);
    GridView view{fb, coeffs, s.d, k};
    CachedView<GridView> cv(view);
    HamFields<GridView> hf{s, cv, {}, {}};
    return fb.from_grid(hf.delta(0));
}

double profile_energy(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k) {
    if (s.cls != SystemClass::Hamiltonian) throw Error(ErrorKind::WrongClass, "energy needs a Hamiltonian system");
    require_dims(s, fb, coeffs);
    GridView view{fb, coeffs, s.d, k};
    CachedView<GridView> cv(view);
    HamFields<GridView> hf{s, cv, {}, {}};
    return hf.density(0).mean();
}

Vec bordered_residual(const SystemSpec& s, const FourierBasis& fb, double k, const BorderedProblem& prob,
                      const Vec& x) {
    const int n = s.d * fb.size();
    const Vec u = x.head(n);
    const double omega = x(n);
    Vec F(x.size());
    F.head(n) = profile_residual(s, fb, u, k, omega);
    if (prob.slack) F.head(n) += x(n + 1) * prob.slack_dir;
    for (const auto& [comp, c] : prob.replaced) F(comp * fb.size()) = constraint_value(s, fb, k, c, u);
    for (std::size_t i = 0; i < prob.extra.size(); ++i) F(n + i) = constraint_value(s, fb, k, prob.extra[i], u);
    return F;
}

Mat bordered_jacobian(const SystemSpec& s, const FourierBasis& fb, double k, const BorderedProblem& prob,
                      const Vec& x) {
    const int M = fb.size();
    const int n = s.d * M;
    const Vec u = x.head(n);
    const double omega = x(n);
    const Eigen::Index dim = x.size();
    Mat J = Mat::Zero(dim, dim);
    J.topLeftCorner(n, n) = spatial_jet(s, fb, u, k, 0).c[0] - omega * block_diag(fb.deriv_matrix(), s.d);
    J.block(0, n, n, 1) = -fb.deriv_all(u, s.d);
    if (prob.slack) J.block(0, n + 1, n, 1) = prob.slack_dir;
    for (const auto& [comp, c] : prob.replaced) {
        J.row(comp * M).setZero();
        J.block(comp * M, 0, 1, n) = constraint_grad(s, fb, k, c, u).transpose();
    }
    for (std::size_t i = 0; i < prob.extra.size(); ++i)
        J.block(n + i, 0, 1, n) = constraint_grad(s, fb, k, prob.extra[i], u).transpose();
    return J;
}

NewtonReport bordered_newton(const SystemSpec& s, const FourierBasis& fb, double k, const BorderedProblem& prob,
                             const Vec& x0, const SolveOptions& opt) {
    const int n = s.d * fb.size();
    const Eigen::Index expect = n + 1 + (prob.slack ? 1 : 0);
    if (x0.size() != expect || static_cast<Eigen::Index>(n + prob.extra.size()) != expect)
        throw Error(ErrorKind::DimensionMismatch, "bordered system is not square");
    NewtonReport rep;
    Vec x = x0;
    Vec F = bordered_residual(s, fb, k, prob, x);
    double nF = all_finite(F) ? max_abs(F) : INFINITY;
    rep.history.push_back(nF);
    auto step = [&](bool polish) -> bool {
        const Mat J = bordered_jacobian(s, fb, k, prob, x);
        Eigen::PartialPivLU<Mat> lu(J);
        const Vec dx = lu.solve(-F);
        if (!all_finite(dx)) {
            if (polish) return false;
            throw Error(ErrorKind::NoConvergence, "Newton step is not finite (singular bordered matrix)");
        }
        for (double lam = 1.0; lam >= 1.0 / 64; lam *= 0.5) {
            const Vec xt = x + lam * dx;
            const Vec Ft = bordered_residual(s, fb, k, prob, xt);
            if (!all_finite(Ft)) continue;
            const double nt = max_abs(Ft);
            if (nt < nF) {
                x = xt;
                F = Ft;
                nF = nt;
                return true;
            }
        }
        if (polish) return false;
        throw Error(ErrorKind::NoConvergence,
                    "Newton step rejected at iteration " + std::to_string(rep.iterations) +
                        ", residual " + std::to_string(nF));
    };
    while (!(nF <= opt.tol)) {
        if (rep.iterations >= opt.max_iter)
            throw Error(ErrorKind::NoConvergence, "no convergence in " + std::to_string(opt.max_iter) +
                                                      " iterations, residual " + std::to_string(nF));
        step(false);
        ++rep.iterations;
        rep.history.push_back(nF);
    }
    for (int i = 0; i < opt.polish_steps; ++i)
        if (!step(true)) break;
    const Mat J = bordered_jacobian(s, fb, k, prob, x);
    Eigen::PartialPivLU<Mat> lu(J);
    rep.rcond = lu.rcond();
    rep.x = x;
    rep.residual = nF;
    rep.converged = true;
    return rep;
}

BorderedProblem fixed_problem(const SystemSpec& s, const FourierBasis& fb, double k, const Vec& targets,
                              const Vec& ref) {
    if (targets.size() != s.param_count())
        throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(s.param_count()) + " wave parameters");
    BorderedProblem prob;
    Constraint phase;
    phase.kind = Constraint::Phase;
    phase.ref = ref;
    switch (s.cls) {
        case SystemClass::ReactionDiffusion: prob.extra.push_back(phase); break;
        case SystemClass::Mixed:
            for (int i = 0; i < s.d1; ++i) prob.replaced.push_back({i, Constraint{Constraint::Mean, i, targets(i), {}}});
            prob.extra.push_back(phase);
            break;
        case SystemClass::Hamiltonian:
            for (int i = 0; i < s.d; ++i) prob.replaced.push_back({i, Constraint{Constraint::Mean, i, targets(i), {}}});
            prob.extra.push_back(Constraint{Constraint::Energy, 0, targets(s.d), {}});
            prob.extra.push_back(phase);
            prob.slack = true;
            prob.slack_dir = profile_delta_h(s, fb, ref, k);
            break;
    }
    return prob;
}

namespace {

WaveProfile make_wave(const SystemSpec& s, const FourierBasis& fb, double k, const Vec& x, const Vec& targets,
                      const NewtonReport& rep, const SolveOptions& opt) {
    const int n = s.d * fb.size();
    WaveProfile w;
    w.system = s.name;
    w.system_params = s.params;
    w.cls = s.cls;
    w.d = s.d;
    w.K = fb.K();
    w.padding = fb.padding();
    w.coeffs = x.head(n);
    w.k = k;
    std::tie(w.p, w.N) = rationalize(k);
    w.omega = x(n);
    w.params = targets;
    w.slack = x.size() > n + 1 ? x(n + 1) : 0.0;
    w.iterations = rep.iterations;
    w.tol = opt.tol;
    w.residual = max_abs(profile_residual(s, fb, w.coeffs, k, w.omega));
    return w;
}

void check_genuine(const SystemSpec& s, const FourierBasis& fb, const WaveProfile& w) {
    double osc = 0.0;
    for (int c = 0; c < s.d; ++c) osc = std::max(osc, w.component(c).tail(fb.size() - 1).norm());
    if (osc < 1e-8) throw Error(ErrorKind::NoConvergence, "Newton collapsed onto a constant state");
    if (std::abs(w.omega) < 1e-12) throw Error(ErrorKind::NoConvergence, "converged to a standing wave (omega = 0)");
    if (std::abs(w.slack) > 1e-8)
        throw Error(ErrorKind::NoConvergence, "energy slack did not vanish: " + std::to_string(w.slack));
}

}  // namespace

WaveProfile solve_profile(const SystemSpec& s, double k, const Vec& targets, const WaveProfile& guess,
                          const SolveOptions& opt) {
    if (guess.d != s.d) throw Error(ErrorKind::DimensionMismatch, "guess dimension differs from system dimension");
    if (k == 0.0) throw Error(ErrorKind::DimensionMismatch, "wavenumber must be nonzero");
    const FourierBasis& fb = guess.basis();
    const int n = s.d * fb.size();
    const BorderedProblem prob = fixed_problem(s, fb, k, targets, guess.coeffs);
    Vec x0(n + 1 + (prob.slack ? 1 : 0));
    x0.head(n) = guess.coeffs;
    x0(n) = guess.omega;
    if (prob.slack) x0(n + 1) = 0.0;
    const NewtonReport rep = bordered_newton(s, fb, k, prob, x0, opt);
    WaveProfile w = make_wave(s, fb, k, rep.x, targets, rep, opt);
    check_genuine(s, fb, w);
    if (rep.rcond < opt.singular_rcond)
        throw Error(ErrorKind::SingularJacobian,
                    "bordered matrix reciprocal condition " + std::to_string(rep.rcond) + " at the solution");
    return w;
}

WaveProfile lambda_omega_wave(const SystemSpec& s, int p, int N, int K, int padding) {
    if (s.name != "lambda_omega") throw Error(ErrorKind::WrongClass, "exact plane waves exist for lambda_omega only");
    const double k = static_cast<double>(p) / N;
    const double r2 = 1.0 - 2.0 * s.mu * (1.0 - std::cos(kTwoPi * k));
    if (!(r2 > 0.0))
        throw Error(ErrorKind::NoConvergence, "no plane wave: r^2 = " + std::to_string(r2) + " <= 0");
    const double r = std::sqrt(r2);
    WaveProfile w;
    w.system = s.name;
    w.system_params = s.params;
    w.cls = s.cls;
    w.d = 2;
    w.K = K;
    w.padding = padding;
    const int M = 2 * K + 1;
    w.coeffs = Vec::Zero(2 * M);
    w.coeffs(1) = r / std::sqrt(2.0);
    w.coeffs(M + 2) = r / std::sqrt(2.0);
    w.k = k;
    std::tie(w.p, w.N) = rationalize(k);
    w.omega = (s.params.at("c0") + s.params.at("c1") * r2) / kTwoPi;
    w.params = Vec(0);
    w.residual = max_abs(profile_residual(s, w));
    return w;
}

namespace {
struct ConstView {
    Mat row;
    Mat at(int) const { return row; }
};
}  // namespace

std::pair<CVec, CMat> constant_state_symbol(const SystemSpec& s, const Vec& ubar, double theta) {
    OpBuilder<CMat> B;
    B.n = 1;
    B.d = s.d;
    B.order = 0;
    B.base_shift = [theta](int p) { return CMat::Constant(1, 1, std::exp(cplx(0.0, p * theta))); };
    B.base_mult = [](const Vec& v) { return CMat::Constant(1, 1, cplx(v(0), 0.0)); };
    ConstView view{ubar.transpose()};
    const CMat A = spatial_linearization(s, B, view).c[0];
    Eigen::ComplexEigenSolver<CMat> es(A);
    return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

Vec mixed_equilibrium(const SystemSpec& s, const Vec& r) {
    const int d1 = s.d1, d2 = s.d2();
    Vec u(s.d);
    u.head(d1) = r;
    u.tail(d2).setConstant(r(0));
    for (int it = 0; it < 50; ++it) {
        const Vec g = s.g(u);
        if (g.cwiseAbs().maxCoeff() < 1e-14) return u;
        const Mat J = s.Dg(u).rightCols(d2);
        u.tail(d2) -= J.fullPivLu().solve(g);
        if (!u.allFinite()) break;
    }
    if (s.g(u).cwiseAbs().maxCoeff() < 1e-10) return u;
    throw Error(ErrorKind::NoConvergence, "no constant equilibrium for the given averages");
}

/// Seed coefficients: ubar + a Re(v e^{2 pi i z}) with v(0) = 1.
Vec seed_coeffs(const FourierBasis& fb, const Vec& ubar, const CVec& v, double a) {
    const int M = fb.size();
    Vec u = Vec::Zero(ubar.size() * M);
    for (Eigen::Index c = 0; c < ubar.size(); ++c) {
        u(c * M) = ubar(c);
        u(c * M + 1) = a * v(c).real() / std::sqrt(2.0);
        u(c * M + 2) = -a * v(c).imag() / std::sqrt(2.0);
    }
    return u;
}

/// Continues an amplitude-parametrized problem until monitor(x) changes sign; returns the bracketing pair.
struct AmpResult {
    Vec lo, hi;
    double mlo = 0.0, mhi = 0.0;
};

AmpResult amplitude_sweep(const SystemSpec& s, const FourierBasis& fb, double k,
                          const std::function<BorderedProblem(double, const Vec&)>& problem_at,
                          const std::function<Vec(double)>& initial, const std::function<double(const Vec&)>& monitor,
                          double a0, double da, const SolveOptions& opt) {
    double a = a0;
    Vec x = bordered_newton(s, fb, k, problem_at(a, initial(a)), initial(a), opt).x;
    double m = monitor(x);
    const double m0 = m;
    Vec xprev;
    double aprev = 0.0;
    int away = 0;
    for (int step = 0; step < 2000; ++step) {
        double h = da;
        Vec xn;
        double an = a;
        for (int tries = 0;; ++tries) {
            an = a + h;
            Vec pred = x;
            if (xprev.size()) pred = x + (x - xprev) * (h / (a - aprev));
            try {
                xn = bordered_newton(s, fb, k, problem_at(an, x), pred, opt).x;
                break;
            } catch (const Error& e) {
                if (tries >= 8) throw Error(ErrorKind::NoConvergence, std::string("amplitude continuation stalled: ") + e.what());
                h *= 0.5;
            }
        }
        const double mn = monitor(xn);
        if ((mn > 0) != (m0 > 0) || mn == 0.0) return {x, xn, m, mn};
        away = std::abs(mn) > std::abs(m) ? away + 1 : 0;
        if (away >= 5) throw Error(ErrorKind::NoConvergence, "wave parameter target unreachable along the amplitude branch");
        xprev = x;
        aprev = a;
        x = xn;
        a = an;
        m = mn;
    }
    throw Error(ErrorKind::NoConvergence, "amplitude continuation exhausted its step budget");
}

WaveProfile seed_mixed(const SystemSpec& s, int p, int N, const Vec& targets, int K, int padding,
                       const SolveOptions& opt) {
    const double k = static_cast<double>(p) / N;
    const double theta = kTwoPi * k;
    const FourierBasis& fb = *basis_for(K, padding);
    const double Mt = targets(0);
    auto growth = [&](double M0) {
        Vec r = targets.head(s.d1);
        r(0) = M0;
        const Vec ubar = mixed_equilibrium(s, r);
        return constant_state_symbol(s, ubar, theta).first.real().maxCoeff();
    };
    // scan for a Hopf crossing of the constant states in M_0 closest to the target
    double best = NAN, bestdist = INFINITY;
    const int ns = 400;
    double mprev = 1e-2, gprev = growth(mprev);
    for (int i = 1; i <= ns; ++i) {
        const double m = 1e-2 * std::pow(1e4, static_cast<double>(i) / ns);
        const double g = growth(m);
        if ((g > 0) != (gprev > 0)) {
            double lo = mprev, hi = m, glo = gprev;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = growth(mid);
                if ((gm > 0) == (glo > 0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            const double root = 0.5 * (lo + hi);
            if (std::abs(root - Mt) < bestdist) {
                bestdist = std::abs(root - Mt);
                best = root;
            }
        }
        mprev = m;
        gprev = g;
    }
    if (!std::isfinite(best)) throw Error(ErrorKind::NoConvergence, "no Hopf point of constant states found");
    Vec r = targets.head(s.d1);
    r(0) = best;
    const Vec ubar = mixed_equilibrium(s, r);
    auto [ev, V] = constant_state_symbol(s, ubar, theta);
    Eigen::Index ic = 0;
    ev.real().maxCoeff(&ic);
    const double omega0 = ev(ic).imag() / kTwoPi;
    if (std::abs(omega0) < 1e-12) throw Error(ErrorKind::NoConvergence, "Hopf point is stationary (omega = 0)");
    // normalize so the first oscillating component is one
    int lead = 0;
    while (lead < s.d && std::abs(V(lead, ic)) < 1e-12) ++lead;
    if (lead == s.d) throw Error(ErrorKind::NoConvergence, "degenerate Hopf eigenvector");
    const CVec v = V.col(ic) / V(lead, ic);
    const int n = s.d * fb.size();
    if (lead >= s.d1) throw Error(ErrorKind::NoConvergence, "Hopf mode does not move the conserved components");
    auto problem_at = [&](double a, const Vec&) {
        BorderedProblem pr;
        for (int i = 0; i < s.d1; ++i) {
            if (i == lead)
                pr.replaced.push_back({lead, Constraint{Constraint::CosAmp, lead, a, {}}});
            else
                pr.replaced.push_back({i, Constraint{Constraint::Mean, i, targets(i), {}}});
        }
        pr.extra.push_back(Constraint{Constraint::SinAmp, lead, 0.0, {}});
        return pr;
    };
    auto initial = [&](double a) {
        Vec x(n + 1);
        x.head(n) = seed_coeffs(fb, ubar, v, a);
        x(n) = omega0;
        return x;
    };
    auto monitor = [&](const Vec& x) { return x(lead * fb.size()) - targets(lead); };
    const double scale = std::max(1.0, std::abs(ubar(lead)));
    const AmpResult br = amplitude_sweep(s, fb, k, problem_at, initial, monitor, 0.02 * scale, 0.02 * scale, opt);
    const double t = br.mlo / (br.mlo - br.mhi);
    const Vec xg = br.lo + t * (br.hi - br.lo);
    WaveProfile guess;
    guess.system = s.name;
    guess.cls = s.cls;
    guess.d = s.d;
    guess.K = K;
    guess.padding = padding;
    guess.coeffs = xg.head(n);
    guess.omega = xg(n);
    return solve_profile(s, k, targets, guess, opt);
}

WaveProfile seed_hamiltonian(const SystemSpec& s, int p, int N, const Vec& targets, int K, int padding,
                             const SolveOptions& opt) {
    const double k = static_cast<double>(p) / N;
    const double theta = kTwoPi * k;
    const FourierBasis& fb = *basis_for(K, padding);
    const Vec ubar = targets.head(s.d);
    const double Et = targets(s.d);
    auto [ev, V] = constant_state_symbol(s, ubar, theta);
    Eigen::Index ic = 0;
    ev.imag().maxCoeff(&ic);
    const double omega0 = ev(ic).imag() / kTwoPi;
    if (!(omega0 > 1e-12)) throw Error(ErrorKind::NoConvergence, "constant state has no oscillatory linear mode");
    int lead = 0;
    while (lead < s.d && std::abs(V(lead, ic)) < 1e-12) ++lead;
    if (lead == s.d) throw Error(ErrorKind::NoConvergence, "degenerate linear mode");
    const CVec v = V.col(ic) / V(lead, ic);
    const int n = s.d * fb.size();
    const double E0 = s.H(ubar, Vec::Zero(s.d));
    if (!(Et > E0))
        throw Error(ErrorKind::NoConvergence, "energy target " + std::to_string(Et) +
                                                  " does not exceed the constant-state energy " + std::to_string(E0));
    auto problem_at = [&](double a, const Vec& xref) {
        BorderedProblem pr;
        for (int i = 0; i < s.d; ++i) pr.replaced.push_back({i, Constraint{Constraint::Mean, i, ubar(i), {}}});
        pr.extra.push_back(Constraint{Constraint::CosAmp, lead, a, {}});
        pr.extra.push_back(Constraint{Constraint::SinAmp, lead, 0.0, {}});
        pr.slack = true;
        pr.slack_dir = profile_delta_h(s, fb, xref.head(n), k);
        return pr;
    };
    auto initial = [&](double a) {
        Vec x(n + 2);
        x.head(n) = seed_coeffs(fb, ubar, v, a);
        x(n) = omega0;
        x(n + 1) = 0.0;
        return x;
    };
    auto monitor = [&](const Vec& x) { return profile_energy(s, fb, x.head(n), k) - Et; };
    // step from a guess of the amplitude reaching the energy target at linear order
    const Vec probe = seed_coeffs(fb, ubar, v, 1.0);
    const double e1 = profile_energy(s, fb, probe, k) - E0;
    const double a_lin = e1 > 0 ? std::sqrt((Et - E0) / e1) : 0.1;
    const double da = std::max(a_lin / 20.0, 1e-4);
    const AmpResult br = amplitude_sweep(s, fb, k, problem_at, initial, monitor, da, da, opt);
    const double t = br.mlo / (br.mlo - br.mhi);
    const Vec xg = br.lo + t * (br.hi - br.lo);
    WaveProfile guess;
    guess.system = s.name;
    guess.cls = s.cls;
    guess.d = s.d;
    guess.K = K;
    guess.padding = padding;
    guess.coeffs = xg.head(n);
    guess.omega = xg(n);
    return solve_profile(s, k, targets, guess, opt);
}

}  // namespace

WaveProfile seed_wave(const SystemSpec& s, int p, int N, const Vec& targets, int K, int padding,
                      const SolveOptions& opt) {
    if (N <= 0 || p == 0) throw Error(ErrorKind::DimensionMismatch, "wavenumber p/N must be nonzero with N >= 1");
    if (targets.size() != s.param_count())
        throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(s.param_count()) + " wave parameters");
    if (s.name == "lambda_omega") {
        const WaveProfile exact = lambda_omega_wave(s, p, N, K, padding);
        return solve_profile(s, exact.k, targets, exact, opt);
    }
    switch (s.cls) {
        case SystemClass::Mixed: return seed_mixed(s, p, N, targets, K, padding, opt);
        case SystemClass::Hamiltonian: return seed_hamiltonian(s, p, N, targets, K, padding, opt);
        default: break;
    }
    throw Error(ErrorKind::NoConvergence, "no seeding strategy for system " + s.name);
}

std::vector<std::string> parameter_names(const SystemSpec& s) {
    std::vector<std::string> out{"k"};
    const int nm = s.cls == SystemClass::Mixed ? s.d1 : (s.cls == SystemClass::Hamiltonian ? s.d : 0);
    for (int i = 0; i < nm; ++i) out.push_back("M" + std::to_string(i));
    if (s.cls == SystemClass::Hamiltonian) out.push_back("E");
    return out;
}

namespace {
int param_index(const WaveProfile& u, const std::string& name) {
    if (name == "E") {
        if (u.cls != SystemClass::Hamiltonian) throw Error(ErrorKind::WrongClass, "E is a Hamiltonian parameter");
        return static_cast<int>(u.params.size()) - 1;
    }
    if (name.size() > 1 && name[0] == 'M') {
        const int i = std::stoi(name.substr(1));
        const int nm = u.cls == SystemClass::Hamiltonian ? static_cast<int>(u.params.size()) - 1
                                                          : static_cast<int>(u.params.size());
        if (i < 0 || i >= nm) throw Error(ErrorKind::DimensionMismatch, "no average parameter " + name);
        return i;
    }
    throw Error(ErrorKind::SchemaError, "unknown wave parameter " + name);
}
}  // namespace

double parameter_value(const WaveProfile& u, const std::string& name) {
    if (name == "k") return u.k;
    return u.params(param_index(u, name));
}

WaveProfile with_parameter(const WaveProfile& u, const std::string& name, double v) {
    WaveProfile w = u;
    if (name == "k") {
        w.k = v;
        std::tie(w.p, w.N) = rationalize(v);
    } else {
        w.params(param_index(u, name)) = v;
    }
    return w;
}

namespace {
Vec state_vec(const WaveProfile& w) {
    Vec x(w.coeffs.size() + 1);
    x.head(w.coeffs.size()) = w.coeffs;
    x(w.coeffs.size()) = w.omega;
    return x;
}
}  // namespace

ContinuationCurve continue_family(const SystemSpec& s, const WaveProfile& seed, const std::string& parameter,
                                  const std::vector<double>& values, const SolveOptions& opt, int max_halvings) {
    ContinuationCurve curve;
    curve.parameter = parameter;
    curve.values.push_back(parameter_value(seed, parameter));
    curve.samples.push_back(seed);
    WaveProfile cur = seed;
    std::optional<WaveProfile> prev;
    for (double target : values) {
        double pos = parameter_value(cur, parameter);
        if (target == pos) continue;
        double h = target - pos;
        int halvings = 0;
        while (pos != target) {
            if (std::abs(h) > std::abs(target - pos)) h = target - pos;
            const double next = (std::abs(target - pos - h) < 1e-15 * std::max(1.0, std::abs(target))) ? target : pos + h;
            WaveProfile guess = with_parameter(cur, parameter, next);
            if (prev) {
                const double hp = pos - parameter_value(*prev, parameter);
                if (hp != 0.0) {
                    const double r = (next - pos) / hp;
                    guess.coeffs = cur.coeffs + r * (cur.coeffs - prev->coeffs);
                    guess.omega = cur.omega + r * (cur.omega - prev->omega);
                }
            }
            try {
                const double kk = parameter == "k" ? next : cur.k;
                WaveProfile w = solve_profile(s, kk, guess.params, guess, opt);
                curve.max_jump = std::max(curve.max_jump, (state_vec(w) - state_vec(cur)).norm());
                curve.step_sizes.push_back(next - pos);
                prev = cur;
                cur = w;
                pos = next;
                if (pos == target) {
                    curve.values.push_back(target);
                    curve.samples.push_back(cur);
                }
            } catch (const Error& e) {
                if (++halvings > max_halvings) {
                    curve.complete = false;
                    curve.message = std::string(error_kind_name(ErrorKind::StepUnderflow)) +
                                    ": continuation step underflow near " + parameter + " = " +
                                    std::to_string(pos) + " (" + e.what() + ")";
                    return curve;
                }
                h *= 0.5;
            }
        }
    }
    return curve;
}

LinearizationMatrices linearization_matrices(const SystemSpec& s, const WaveProfile& u) {
    if (u.d != s.d) throw Error(ErrorKind::DimensionMismatch, "wave dimension differs from system dimension");
    const FourierBasis& fb = u.basis();
    const Jet<Mat> A = spatial_jet(s, fb, u.coeffs, u.k, 2);
    const Eigen::Index n = u.coeffs.size();
    LinearizationMatrices out;
    out.L = A.c[0] - u.omega * block_diag(fb.deriv_matrix(), s.d);
    out.L1 = A.c[1] + u.speed() * Mat::Identity(n, n);
    out.L2 = A.c[2];
    out.Lstar = out.L.transpose();
    return out;
}

WaveDerivatives wave_derivatives(const SystemSpec& s, const WaveProfile& u) {
    if (u.d != s.d) throw Error(ErrorKind::DimensionMismatch, "wave dimension differs from system dimension");
    const FourierBasis& fb = u.basis();
    const int M = fb.size();
    const int n = s.d * M;
    const BorderedProblem prob = fixed_problem(s, fb, u.k, u.params, u.coeffs);
    Vec x(n + 1 + (prob.slack ? 1 : 0));
    x.head(n) = u.coeffs;
    x(n) = u.omega;
    if (prob.slack) x(n + 1) = u.slack;
    const Mat J = bordered_jacobian(s, fb, u.k, prob, x);
    Eigen::PartialPivLU<Mat> lu(J);
    if (lu.rcond() < 1e-13) throw Error(ErrorKind::SingularJacobian, "bordered matrix singular at the wave");

    WaveDerivatives wd;
    wd.dzeta = fb.deriv_all(u.coeffs, s.d);
    const LinearizationMatrices lm = linearization_matrices(s, u);

    // k: differentiate residual rows analytically, (L1 - c) u' from the shift jets
    Vec Fk = Vec::Zero(x.size());
    Fk.head(n) = (lm.L1 - u.speed() * Mat::Identity(n, n)) * wd.dzeta;
    for (const auto& [comp, c] : prob.replaced) Fk(comp * M) = 0.0;
    for (std::size_t i = 0; i < prob.extra.size(); ++i)
        if (prob.extra[i].kind == Constraint::Energy) Fk(n + i) = energy_k_partial(s, fb, u.coeffs, u.k);
    const Vec sk = lu.solve(-Fk);
    wd.dk = sk.head(n);
    wd.dk_omega = sk(n);

    const int nm = s.cls == SystemClass::Mixed ? s.d1 : (s.cls == SystemClass::Hamiltonian ? s.d : 0);
    wd.dM_omega = Vec::Zero(nm);
    for (int i = 0; i < nm; ++i) {
        Vec rhs = Vec::Zero(x.size());
        rhs(i * M) = 1.0;
        const Vec sol = lu.solve(rhs);
        wd.dM.push_back(sol.head(n));
        wd.dM_omega(i) = sol(n);
    }
    if (s.cls == SystemClass::Hamiltonian) {
        Vec rhs = Vec::Zero(x.size());
        rhs(n) = 1.0;  // energy row is the first extra row
        const Vec sol = lu.solve(rhs);
        wd.dE = sol.head(n);
        wd.dE_omega = sol(n);
        wd.slack_derivative = sol(n + 1);
    }

    // adjoint: kernel of L^T, then the bordered least-squares system fixing the generalized element
    const int ke = std::max(1, s.branch_count() - 1);
    Eigen::JacobiSVD<Mat> svd(lm.L, Eigen::ComputeFullU);
    const Vec sv = svd.singularValues();  // descending
    wd.kernel_singular_values = sv.tail(std::min<Eigen::Index>(ke + 2, sv.size())).reverse();
    const double smax = sv(0);
    const double s_in = sv(n - ke);
    const double s_out = sv(n - ke - 1);
    if (!(s_in <= 1e-6 * smax) || !(s_out >= 1e4 * std::max(s_in, 1e-300)))
        throw Error(ErrorKind::RankDeficiency,
                    "adjoint kernel dimension differs from " + std::to_string(ke) + " (singular values " +
                        std::to_string(s_in / smax) + ", " + std::to_string(s_out / smax) + " relative)");
    const Mat Y = svd.matrixU().rightCols(ke);
    const int nc = 1 + nm + (s.cls == SystemClass::Hamiltonian ? 1 : 0);
    Mat A = Mat::Zero(n + nc, n + ke);
    Vec b = Vec::Zero(n + nc);
    A.topLeftCorner(n, n) = lm.Lstar;
    A.topRightCorner(n, ke) = -Y;
    A.block(n, 0, 1, n) = wd.dzeta.transpose();
    b(n) = 1.0;
    for (int i = 0; i < nm; ++i) A.block(n + 1 + i, 0, 1, n) = wd.dM[i].transpose();
    if (s.cls == SystemClass::Hamiltonian) A.block(n + 1 + nm, 0, 1, n) = wd.dE.transpose();
    const Vec z = A.completeOrthogonalDecomposition().solve(b);
    wd.uad = z.head(n);
    wd.adjoint_beta = z.tail(ke);
    wd.adjoint_residual = (A * z - b).cwiseAbs().maxCoeff();
    if (!(wd.adjoint_residual < 1e-6))
        throw Error(ErrorKind::RankDeficiency, "adjoint bordered system inconsistent, residual " +
                                                   std::to_string(wd.adjoint_residual));
    // normalization: <u_ad, d_k u> = 0
    wd.dk -= wd.uad.dot(wd.dk) * wd.dzeta;
    return wd;
}

FdDerivatives parameter_derivatives_fd(const SystemSpec& s, const WaveProfile& u, double h, const SolveOptions& opt) {
    FdDerivatives fd;
    fd.names = parameter_names(s);
    fd.domega = Vec::Zero(fd.names.size());
    for (std::size_t i = 0; i < fd.names.size(); ++i) {
        const std::string& nm = fd.names[i];
        const double p0 = parameter_value(u, nm);
        auto solve_at = [&](double v) {
            const WaveProfile g = with_parameter(u, nm, v);
            return solve_profile(s, g.k, g.params, g, opt);
        };
        const WaveProfile wp = solve_at(p0 + h), wm = solve_at(p0 - h);
        const WaveProfile wp2 = solve_at(p0 + 0.5 * h), wm2 = solve_at(p0 - 0.5 * h);
        const double D1 = (wp.omega - wm.omega) / (2 * h);
        const double D2 = (wp2.omega - wm2.omega) / h;
        fd.domega(i) = (4 * D2 - D1) / 3;
        const Vec U1 = (wp.coeffs - wm.coeffs) / (2 * h);
        const Vec U2 = (wp2.coeffs - wm2.coeffs) / h;
        fd.du.push_back((4 * U2 - U1) / 3);
        fd.richardson_gap = std::max(fd.richardson_gap, std::abs(D1 - D2) / std::max(1e-14, std::abs(fd.domega(i))));
        fd.plus.push_back(wp);
        fd.minus.push_back(wm);
        fd.plus_half.push_back(wp2);
        fd.minus_half.push_back(wm2);
    }
    return fd;
}

}  // namespace latwave

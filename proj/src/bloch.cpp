#include "latwave/bloch.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <future>
#include <numeric>
#include <sstream>

#include "latwave/io.hpp"

namespace latwave {

// ---------------------------------------------------------------- transform

std::vector<double> bloch_exponents(int N, int P) {
    const int L = N * P;
    std::vector<double> xi;
    const int m0 = -(P / 2);
    for (int m = m0; m < m0 + P; ++m) xi.push_back(kTwoPi * m / L);
    return xi;
}

BlochSample dbt(const CMat& f, int N) {
    const int L = static_cast<int>(f.rows());
    if (N < 1 || L % N != 0)
        throw Error(ErrorKind::DivisibilityViolation, "ring of " + std::to_string(L) + " sites is not divisible by N = " +
                                                          std::to_string(N));
    BlochSample s;
    s.N = N;
    s.P = L / N;
    s.d = static_cast<int>(f.cols());
    s.xi = bloch_exponents(N, s.P);
    for (double xi : s.xi) {
        CMat g = CMat::Zero(N, s.d);
        for (int kap = 0; kap < s.P; ++kap)
            for (int j = 0; j < N; ++j) {
                const int site = kap * N + j;
                g.row(j) += std::exp(cplx(0.0, -site * xi)) * f.row(site);
            }
        s.data.push_back(g);
    }
    return s;
}

BlochSample dbt(const RingState& f, int N) { return dbt(CMat(f.cast<cplx>()), N); }

CMat idbt(const BlochSample& s) {
    const int L = s.N * s.P;
    if (static_cast<int>(s.data.size()) != s.P || static_cast<int>(s.xi.size()) != s.P)
        throw Error(ErrorKind::DimensionMismatch, "Bloch sample has inconsistent sizes");
    CMat f = CMat::Zero(L, s.d);
    for (int m = 0; m < s.P; ++m)
        for (int kap = 0; kap < s.P; ++kap)
            for (int j = 0; j < s.N; ++j) {
                const int site = kap * s.N + j;
                f.row(site) += std::exp(cplx(0.0, site * s.xi[m])) * s.data[m].row(j);
            }
    return f / static_cast<double>(s.P);
}

// ---------------------------------------------------------------- symbols

namespace {

struct LatticeView {
    const FourierBasis& fb;
    const Vec& u;
    int d, N;
    double k, phase;
    Mat at(int p) const {
        Mat out(N, d);
        for (int j = 0; j < N; ++j) out.row(j) = fb.eval_all(u, d, k * (j + p) + phase).transpose();
        return out;
    }
};

struct ConstLatticeView {
    Vec ubar;
    int N;
    Mat at(int) const { return ubar.transpose().replicate(N, 1); }
};

OpBuilder<CMat> lattice_builder(int N, int d, double xi, int order) {
    OpBuilder<CMat> B;
    B.n = N;
    B.d = d;
    B.order = order;
    B.base_shift = [N, xi](int p) { return CMat(std::exp(cplx(0.0, p * xi)) * cyclic_shift(N, p).cast<cplx>()); };
    B.base_mult = [](const Vec& v) { return CMat(v.cast<cplx>().asDiagonal()); };
    return B;
}

}  // namespace

SymbolGenerator::SymbolGenerator(const SystemSpec& s, const WaveProfile& u, double xi) {
    if (u.d != s.d) throw Error(ErrorKind::DimensionMismatch, "wave dimension differs from system dimension");
    if (!u.rational() || u.N < 1)
        throw Error(ErrorKind::IrrationalWavenumber, "Bloch symbols need a rational wavenumber p/N");
    sys_ = s;
    fb_ = basis_for(u.K, u.padding);
    coeffs_ = u.coeffs;
    N_ = u.N;
    k_ = u.k;
    omega_ = u.omega;
    xi_ = xi;
    period_ = u.period();
}

SymbolGenerator SymbolGenerator::constant_state(const SystemSpec& s, const Vec& ubar, int N, double xi,
                                                double period) {
    if (ubar.size() != s.d) throw Error(ErrorKind::DimensionMismatch, "constant state dimension");
    if (N < 1) throw Error(ErrorKind::DimensionMismatch, "N >= 1 required");
    SymbolGenerator g;
    g.sys_ = s;
    g.ubar_ = ubar;
    g.constant_ = true;
    g.N_ = N;
    g.xi_ = xi;
    g.period_ = period;
    return g;
}

Jet<CMat> SymbolGenerator::jet(double t, int order) const {
    const OpBuilder<CMat> B = lattice_builder(N_, sys_.d, xi_, order);
    if (constant_) {
        ConstLatticeView v{ubar_, N_};
        return spatial_linearization(sys_, B, v);
    }
    LatticeView v{*fb_, coeffs_, sys_.d, N_, k_, omega_ * t};
    return spatial_linearization(sys_, B, v);
}

CMat SymbolGenerator::A(double t) const { return jet(t, 0).c[0]; }

CVec lift(const WaveProfile& u, const Vec& coeffs, double t) {
    if (!u.rational()) throw Error(ErrorKind::IrrationalWavenumber, "lift needs a rational wavenumber");
    const FourierBasis& fb = u.basis();
    CVec V(u.N * u.d);
    for (int j = 0; j < u.N; ++j) {
        const Vec val = fb.eval_all(coeffs, u.d, u.k * j + u.omega * t);
        for (int c = 0; c < u.d; ++c) V(c * u.N + j) = val(c);
    }
    return V;
}

// ---------------------------------------------------------------- monodromy

CMat propagate(const SymbolGenerator& gen, double t0, double t1, const CMat& Phi0, const MonodromyOptions& opt) {
    OdeOptions o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    auto f = [&gen](double t, const CMat& Y) { return CMat(gen.A(t) * Y); };
    return Dopri5<CMat>::integrate(f, t0, Phi0, t1, o);
}

cplx trace_integral(const SymbolGenerator& gen, int nodes) {
    const double T = gen.period();
    cplx acc = 0.0;
    for (int i = 0; i < nodes; ++i) acc += gen.A(T * i / nodes).trace();
    return acc * (T / nodes);
}

cplx liouville_determinant(const SymbolGenerator& gen, int nodes) { return std::exp(trace_integral(gen, nodes)); }

int monodromy_segments(const SymbolGenerator& gen) {
    double amax = 0.0;
    for (int i = 0; i < 8; ++i) amax = std::max(amax, gen.A(gen.period() * i / 8).cwiseAbs().colwise().sum().maxCoeff());
    return std::max(1, static_cast<int>(std::ceil(amax * gen.period() / 4.0)));
}

namespace {

OdeOptions ode_options(const MonodromyOptions& opt) {
    OdeOptions o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    return o;
}

void add_stats(OdeStats& acc, const OdeStats& s) {
    acc.steps += s.steps;
    acc.rejected += s.rejected;
    acc.evals += s.evals;
}

/// |exp(sum log det(segment) - int trace A) - 1|
double liouville_error(const SymbolGenerator& gen, cplx logdet) {
    return std::abs(std::exp(logdet - trace_integral(gen)) - 1.0);
}

}  // namespace

BlochMonodromy monodromy(const SymbolGenerator& gen, const MonodromyOptions& opt) {
    BlochMonodromy m;
    m.xi = gen.xi();
    const OdeOptions o = ode_options(opt);
    auto f = [&gen](double t, const CMat& Y) { return CMat(gen.A(t) * Y); };
    const int n = gen.dim();
    m.segments = monodromy_segments(gen);
    const double dt = gen.period() / m.segments;
    CMat S = CMat::Identity(n, n);
    cplx logdet = 0.0;
    for (int i = 0; i < m.segments; ++i) {
        OdeStats st;
        const CMat P = Dopri5<CMat>::integrate(f, i * dt, CMat::Identity(n, n), (i + 1) * dt, o, &st);
        add_stats(m.stats, st);
        logdet += std::log(P.partialPivLu().determinant());
        S = P * S;
    }
    m.S0 = S;
    m.liouville_rel_err = liouville_error(gen, logdet);
    return m;
}

BlochMonodromy monodromy_expansion(const SymbolGenerator& gen, const MonodromyOptions& opt) {
    BlochMonodromy m;
    m.xi = gen.xi();
    const OdeOptions o = ode_options(opt);
    const int n = gen.dim();
    auto f = [&gen, n](double t, const CMat& Y) {
        const Jet<CMat> J = gen.jet(t, 2);
        CMat out(n, 3 * n);
        out.leftCols(n) = J.c[0] * Y.leftCols(n);
        out.middleCols(n, n) = J.c[0] * Y.middleCols(n, n) + J.c[1] * Y.leftCols(n);
        out.rightCols(n) = J.c[0] * Y.rightCols(n) + J.c[1] * Y.middleCols(n, n) + J.c[2] * Y.leftCols(n);
        return out;
    };
    CMat Y0 = CMat::Zero(n, 3 * n);
    Y0.leftCols(n).setIdentity();
    m.segments = monodromy_segments(gen);
    const double dt = gen.period() / m.segments;
    CMat S0 = CMat::Identity(n, n), S1 = CMat::Zero(n, n), S2 = CMat::Zero(n, n);
    cplx logdet = 0.0;
    for (int i = 0; i < m.segments; ++i) {
        OdeStats st;
        const CMat Y = Dopri5<CMat>::integrate(f, i * dt, Y0, (i + 1) * dt, o, &st);
        add_stats(m.stats, st);
        const CMat P0 = Y.leftCols(n), P1 = Y.middleCols(n, n), P2 = Y.rightCols(n);
        logdet += std::log(P0.partialPivLu().determinant());
        // truncated power series product, later segment on the left
        const CMat N2 = P0 * S2 + P1 * S1 + P2 * S0;
        const CMat N1 = P0 * S1 + P1 * S0;
        S0 = P0 * S0;
        S1 = N1;
        S2 = N2;
    }
    m.S0 = S0;
    m.S1 = S1;
    m.S2 = S2;
    m.liouville_rel_err = liouville_error(gen, logdet);
    return m;
}

// ---------------------------------------------------------------- eigen

EigenPairs eig_dense(const CMat& M) {
    if (M.rows() < 1 || M.rows() != M.cols()) throw Error(ErrorKind::DimensionMismatch, "eig_dense needs a square matrix");
    Eigen::ComplexEigenSolver<CMat> es(M, true);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "Schur iteration did not converge");
    EigenPairs ep;
    ep.values = es.eigenvalues();
    ep.vectors = es.eigenvectors();
    const double nm = std::max(M.norm(), 1e-300);
    for (Eigen::Index i = 0; i < ep.vectors.cols(); ++i) {
        ep.vectors.col(i).normalize();
        const double r = (M * ep.vectors.col(i) - ep.values(i) * ep.vectors.col(i)).norm() / nm;
        ep.max_residual = std::max(ep.max_residual, r);
    }
    return ep;
}

EpsSelection select_eps0(const CVec& ev, double floor) {
    EpsSelection sel;
    for (Eigen::Index i = 0; i < ev.size(); ++i) sel.distances.push_back(std::abs(ev(i) - 1.0));
    std::sort(sel.distances.begin(), sel.distances.end());
    const std::size_t n = sel.distances.size();
    if (n < 2) {
        sel.critical = static_cast<int>(n);
        sel.eps0 = 0.5;
        return sel;
    }
    double best = -1.0;
    std::size_t at = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double g = std::log(std::max(sel.distances[i + 1], floor)) - std::log(std::max(sel.distances[i], floor));
        if (g > best) {
            best = g;
            at = i;
        }
    }
    if (best < std::log(10.0)) {
        sel.critical = static_cast<int>(n);
        sel.eps0 = 0.5;
        return sel;
    }
    sel.critical = static_cast<int>(at + 1);
    sel.noncritical_distance = sel.distances[at + 1];
    sel.eps0 = 0.5 * sel.noncritical_distance;
    return sel;
}

double tracking_radius(const EpsSelection& sel) {
    if (sel.noncritical_distance <= 0.0) return std::max(sel.eps0, 1.0);
    return std::max(sel.eps0, 0.9 * sel.noncritical_distance);
}

// ---------------------------------------------------------------- branches

int expected_branches(const SystemSpec& s) { return s.branch_count(); }

namespace {

struct Sample {
    double xi = 0.0;
    double liouville = 0.0;
    std::vector<cplx> lam;
    std::vector<CVec> vec;
};

Sample critical_sample(const SystemSpec& s, const WaveProfile& u, double xi, double eps0, int expect,
                       const MonodromyOptions& mo) {
    const SymbolGenerator gen(s, u, xi);
    const BlochMonodromy m = monodromy(gen, mo);
    const EigenPairs ep = eig_dense(m.S0);
    Sample out;
    out.xi = xi;
    out.liouville = m.liouville_rel_err;
    for (Eigen::Index i = 0; i < ep.values.size(); ++i)
        if (std::abs(ep.values(i) - 1.0) < eps0) {
            out.lam.push_back(ep.values(i));
            out.vec.push_back(ep.vectors.col(i));
        }
    if (static_cast<int>(out.lam.size()) != expect)
        throw Error(ErrorKind::BranchCountMismatch, "found " + std::to_string(out.lam.size()) + " eigenvalues within " +
                                                        std::to_string(eps0) + " of 1 at xi = " + std::to_string(xi) +
                                                        ", expected " + std::to_string(expect));
    return out;
}

cplx velocity(cplx lam, double xi, double T) { return std::log(lam) / (cplx(0.0, xi) * T); }

/// All permutations of 0..n-1 (n small).
std::vector<std::vector<int>> permutations(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> all;
    do all.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return all;
}

/// Orders `next` to continue the branches of `prev`; returns false if some matched overlap is too small.
bool match_step(const Sample& prev, Sample& next, double threshold, std::string& rule) {
    const int n = static_cast<int>(prev.lam.size());
    Mat O(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) O(a, b) = std::abs(prev.vec[a].dot(next.vec[b]));
    const auto perms = permutations(n);
    double best = -1, second = -1;
    int ibest = 0;
    for (std::size_t i = 0; i < perms.size(); ++i) {
        double sc = 0;
        for (int a = 0; a < n; ++a) sc += O(a, perms[i][a]);
        if (sc > best) {
            second = best;
            best = sc;
            ibest = static_cast<int>(i);
        } else if (sc > second) {
            second = sc;
        }
    }
    std::vector<int> chosen = perms[ibest];
    rule = "overlap";
    if (n > 1 && best - second < 0.05) {
        // nearly parallel eigenvectors (Jordan splitting): continue eigenvalues instead
        double cbest = INFINITY;
        for (const auto& p : perms) {
            double c = 0;
            for (int a = 0; a < n; ++a) {
                const cplx pred = std::exp((next.xi / prev.xi) * std::log(prev.lam[a]));
                c += std::abs(pred - next.lam[p[a]]);
            }
            if (c < cbest) {
                cbest = c;
                chosen = p;
            }
        }
        rule = "eigenvalue-continuation";
    }
    for (int a = 0; a < n; ++a)
        if (O(a, chosen[a]) < threshold) return false;
    Sample ordered = next;
    for (int a = 0; a < n; ++a) {
        ordered.lam[a] = next.lam[chosen[a]];
        ordered.vec[a] = next.vec[chosen[a]];
    }
    next = ordered;
    return true;
}

void sort_by_velocity(Sample& s, double T) {
    const int n = static_cast<int>(s.lam.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (s.xi == 0.0) return;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const cplx va = velocity(s.lam[a], s.xi, T), vb = velocity(s.lam[b], s.xi, T);
        if (std::abs(va.real() - vb.real()) > 1e-12) return va.real() < vb.real();
        return va.imag() < vb.imag();
    });
    Sample o = s;
    for (int a = 0; a < n; ++a) {
        o.lam[a] = s.lam[idx[a]];
        o.vec[a] = s.vec[idx[a]];
    }
    s = o;
}

}  // namespace

TrackResult track_branches(const SystemSpec& s, const WaveProfile& u, const std::vector<double>& xi_grid,
                           double eps0, const TrackOptions& opt) {
    if (!u.rational()) throw Error(ErrorKind::IrrationalWavenumber, "branch tracking needs a rational wavenumber");
    std::vector<double> grid = xi_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty()) throw Error(ErrorKind::BranchMissing, "empty xi grid");
    const int n = opt.expected > 0 ? opt.expected : expected_branches(s);
    const double T = u.period();

    std::vector<Sample> samples(grid.size());
    {
        const int jobs = std::max(1, opt.jobs);
        std::size_t next = 0;
        while (next < grid.size()) {
            std::vector<std::future<Sample>> fut;
            for (int w = 0; w < jobs && next < grid.size(); ++w, ++next) {
                const double xi = grid[next];
                fut.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                         [&, xi] { return critical_sample(s, u, xi, eps0, n, opt.mono); }));
            }
            for (std::size_t i = 0; i < fut.size(); ++i) samples[next - fut.size() + i] = fut[i].get();
        }
    }

    TrackResult res;
    res.eps0 = eps0;
    for (const auto& sm : samples) res.max_liouville = std::max(res.max_liouville, sm.liouville);
    std::vector<std::string> rules(grid.size(), "seed");

    // march outward from the smallest |xi| on each side
    std::function<void(const Sample&, Sample&, int, std::string&)> link = [&](const Sample& a, Sample& b, int depth,
                                                                              std::string& rule) {
        Sample bb = b;
        if (match_step(a, bb, opt.overlap_threshold, rule)) {
            b = bb;
            return;
        }
        if (depth >= opt.max_refinements)
            throw Error(ErrorKind::MatchingAmbiguity, "eigenvector overlap below threshold between xi = " +
                                                          std::to_string(a.xi) + " and " + std::to_string(b.xi));
        ++res.refinements;
        Sample mid = critical_sample(s, u, 0.5 * (a.xi + b.xi), eps0, n, opt.mono);
        res.max_liouville = std::max(res.max_liouville, mid.liouville);
        std::string r1, r2;
        link(a, mid, depth + 1, r1);
        link(mid, b, depth + 1, r2);
        rule = "refined:" + r2;
    };
    auto march = [&](std::vector<int> idx) {
        if (idx.empty()) return;
        sort_by_velocity(samples[idx[0]], T);
        for (std::size_t i = 1; i < idx.size(); ++i) link(samples[idx[i - 1]], samples[idx[i]], 0, rules[idx[i]]);
    };
    std::vector<int> pos, neg;
    int zero = -1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] > 0) pos.push_back(static_cast<int>(i));
        else if (grid[i] < 0) neg.insert(neg.begin(), static_cast<int>(i));
        else zero = static_cast<int>(i);
    }
    march(pos);
    march(neg);
    if (!pos.empty() && !neg.empty()) {
        // join the two sides by continuity of velocities through xi = 0
        const Sample& sp = samples[pos[0]];
        const Sample& sn = samples[neg[0]];
        double cbest = INFINITY;
        std::vector<int> chosen;
        for (const auto& p : permutations(n)) {
            double c = 0;
            for (int a = 0; a < n; ++a) c += std::abs(velocity(sp.lam[a], sp.xi, T) - velocity(sn.lam[p[a]], sn.xi, T));
            if (c < cbest) {
                cbest = c;
                chosen = p;
            }
        }
        for (int i : neg) {
            Sample o = samples[i];
            for (int a = 0; a < n; ++a) {
                o.lam[a] = samples[i].lam[chosen[a]];
                o.vec[a] = samples[i].vec[chosen[a]];
            }
            samples[i] = o;
        }
        rules[neg[0]] = "velocity-join";
    }
    if (zero >= 0) rules[zero] = "degenerate-at-zero";

    res.branches.resize(n);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int a = 0; a < n; ++a) {
            res.branches[a].xi.push_back(grid[i]);
            res.branches[a].lambda.push_back(samples[i].lam[a]);
            res.branches[a].vectors.push_back(samples[i].vec[a]);
            res.branches[a].matching.push_back(rules[i]);
        }
    return res;
}

std::string branches_csv(const std::vector<SpectralBranch>& branches) {
    std::ostringstream os;
    os << "xi";
    for (std::size_t a = 0; a < branches.size(); ++a) os << ",re_lambda_" << a << ",im_lambda_" << a;
    os << "\n";
    if (branches.empty()) return os.str();
    for (std::size_t i = 0; i < branches[0].xi.size(); ++i) {
        os << fmt_double(branches[0].xi[i]);
        for (const auto& b : branches) os << "," << fmt_double(b.lambda[i].real()) << "," << fmt_double(b.lambda[i].imag());
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------- riesz

namespace {

/// Trapezoid nodes of (1/2 pi i) contour integral of (z - S)^{-1} on |z - 1| = r, offset by half a node if odd.
CMat contour_sum(const CMat& S, double r, int M, bool odd) {
    const Eigen::Index n = S.rows();
    CMat acc = CMat::Zero(n, n);
    const CMat I = CMat::Identity(n, n);
    for (int j = 0; j < M; ++j) {
        const double th = kTwoPi * (j + (odd ? 0.5 : 0.0)) / M;
        const cplx e = std::exp(cplx(0.0, th));
        const cplx z = 1.0 + r * e;
        acc += (r * e) * (z * I - S).partialPivLu().solve(I);
    }
    return acc / static_cast<double>(M);
}

}  // namespace

RieszBlock riesz_block(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd, double xi, double eps0,
                       const RieszOptions& opt) {
    const SymbolGenerator gen(s, u, xi);
    const BlochMonodromy mono = monodromy(gen, opt.mono);
    const CMat& S = mono.S0;
    const EigenPairs ep = eig_dense(S);
    RieszBlock rb;
    rb.xi = xi;
    rb.liouville = mono.liouville_rel_err;
    std::vector<cplx> inside;
    for (Eigen::Index i = 0; i < ep.values.size(); ++i) {
        const double dist = std::abs(ep.values(i) - 1.0);
        if (std::abs(dist - eps0) < 0.1 * eps0)
            throw Error(ErrorKind::ContourTooClose, "eigenvalue at distance " + std::to_string(dist) +
                                                        " from 1 lies within 10% of the contour radius " +
                                                        std::to_string(eps0));
        if (dist < eps0) inside.push_back(ep.values(i));
    }
    rb.eigenvalues = Eigen::Map<CVec>(inside.data(), static_cast<Eigen::Index>(inside.size()));

    int M = opt.contour_points;
    CMat P = contour_sum(S, eps0, M, false);
    rb.projector_change = INFINITY;
    for (int i = 0; i < opt.max_doublings; ++i) {
        const CMat P2 = 0.5 * (P + contour_sum(S, eps0, M, true));
        rb.projector_change = (P2 - P).cwiseAbs().maxCoeff();
        P = P2;
        M *= 2;
        if (rb.projector_change <= opt.projector_tol) break;
    }
    rb.contour_points = M;
    rb.projector_trace = P.trace();
    const int n = expected_branches(s);
    if (std::abs(rb.projector_trace - static_cast<double>(n)) > 1e-6)
        throw Error(ErrorKind::ProjectorRankMismatch, "projector trace " + std::to_string(rb.projector_trace.real()) +
                                                          " differs from " + std::to_string(n));

    const int N = u.N;
    const int nm = s.cls == SystemClass::Mixed ? s.d1 : (s.cls == SystemClass::Hamiltonian ? s.d : 0);
    const cplx ixi(0.0, xi);
    CMat Q0(N * s.d, n), D0(N * s.d, n);
    Q0.col(0) = lift(u, wd.dzeta, 0.0) + ixi * lift(u, wd.dk, 0.0);
    D0.col(0) = lift(u, wd.uad, 0.0) / static_cast<double>(N);
    const int M1 = 2 * u.K + 1;
    for (int i = 0; i < nm; ++i) {
        Q0.col(1 + i) = lift(u, wd.dM[i], 0.0);
        Vec e = Vec::Zero(s.d * M1);
        e(i * M1) = 1.0;
        D0.col(1 + i) = lift(u, e, 0.0) / static_cast<double>(N);
    }
    if (s.cls == SystemClass::Hamiltonian) {
        Q0.col(n - 1) = lift(u, wd.dE, 0.0);
        D0.col(n - 1) = lift(u, profile_delta_h(s, u.basis(), u.coeffs, u.k), 0.0) / static_cast<double>(N);
    }
    rb.Q = P * Q0;
    rb.Qdual = P.adjoint() * D0;
    const CMat G = rb.Qdual.adjoint() * rb.Q;
    rb.duality_error = (G - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
    rb.Qdual = rb.Qdual * G.inverse().adjoint();
    rb.Omega = rb.Qdual.adjoint() * (S - CMat::Identity(S.rows(), S.cols())) * rb.Q;
    if (xi != 0.0) {
        CVec sig = CVec::Ones(n);
        sig(0) = 1.0 / ixi;
        rb.Omega_tilde = (sig.cwiseInverse().asDiagonal() * rb.Omega * sig.asDiagonal()) / ixi;
    }
    return rb;
}

}  // namespace latwave

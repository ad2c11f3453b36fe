#include "latwave/whitham.hpp"

#include <cmath>

#include "latwave/bloch.hpp"

namespace latwave {

double rd_group_velocity(const WaveDerivatives& wd, const WaveProfile& u, double mu) {
    const FourierBasis& fb = u.basis();
    const Vec a = fb.shift_all(wd.dzeta, u.d, u.k) - fb.shift_all(wd.dzeta, u.d, -u.k);
    return mu * wd.uad.dot(a);
}

double rd_diffusion(const WaveDerivatives& wd, const WaveProfile& u, double mu) {
    const double nrm = wd.uad.dot(wd.dk);
    if (std::abs(nrm) > 1e-9)
        throw Error(ErrorKind::NormalizationViolated, "<u_ad, d_k u> = " + std::to_string(nrm));
    const FourierBasis& fb = u.basis();
    const Vec a = mu * (fb.shift_all(wd.dk, u.d, u.k) - fb.shift_all(wd.dk, u.d, -u.k)) +
                  0.5 * mu * (fb.shift_all(wd.dzeta, u.d, u.k) + fb.shift_all(wd.dzeta, u.d, -u.k));
    return wd.uad.dot(a);
}

RDWhitham rd_whitham(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd) {
    if (s.cls != SystemClass::ReactionDiffusion) throw Error(ErrorKind::WrongClass, "rd_whitham needs an RD system");
    RDWhitham w;
    w.omega = u.omega;
    w.dk_omega = wd.dk_omega;
    w.group_velocity = rd_group_velocity(wd, u, s.mu);
    w.diffusion = rd_diffusion(wd, u, s.mu);
    return w;
}

FluxRecord averaged_fluxes(const SystemSpec& s, const FourierBasis& fb, const Vec& coeffs, double k) {
    GridView view{fb, coeffs, s.d, k};
    CachedView<GridView> cv(view);
    FluxRecord fr;
    switch (s.cls) {
        case SystemClass::Mixed: {
            const Mat f = apply_rows(cv.at(0), s.fr);
            fr.F = s.eta * f.colwise().mean().transpose();
            break;
        }
        case SystemClass::Hamiltonian: {
            HamFields<GridView> hf{s, cv, {}, {}};
            fr.F = s.eta * hf.hu(0).colwise().mean().transpose();
            fr.S = s.eta * hf.flux(0).mean();
            break;
        }
        default: throw Error(ErrorKind::WrongClass, "averaged fluxes are defined for Mixed and Hamiltonian systems");
    }
    return fr;
}

FluxRecord averaged_fluxes(const SystemSpec& s, const WaveProfile& u) {
    if (u.d != s.d) throw Error(ErrorKind::DimensionMismatch, "wave dimension differs from system dimension");
    return averaged_fluxes(s, u.basis(), u.coeffs, u.k);
}

FluxRecord flux_directional(const SystemSpec& s, const WaveProfile& u, const Vec& du, bool explicit_k) {
    const FourierBasis& fb = u.basis();
    const double scale = std::max(1.0, du.cwiseAbs().maxCoeff());
    const double h = 1e-4 / scale;
    auto at = [&](double t) { return averaged_fluxes(s, fb, u.coeffs + t * du, u.k + (explicit_k ? t : 0.0)); };
    const FluxRecord p2 = at(2 * h), p1 = at(h), m1 = at(-h), m2 = at(-2 * h);
    FluxRecord out;
    out.F = (-p2.F + 8.0 * p1.F - 8.0 * m1.F + m2.F) / (12.0 * h);
    out.S = (-p2.S + 8.0 * p1.S - 8.0 * m1.S + m2.S) / (12.0 * h);
    return out;
}

std::string hyperbolicity_name(Hyperbolicity h) {
    switch (h) {
        case Hyperbolicity::Strict: return "strict";
        case Hyperbolicity::Weak: return "weak";
        case Hyperbolicity::NonHyperbolic: return "non-hyperbolic";
    }
    return "?";
}

CharSpeeds char_speeds(const Mat& G) {
    const EigenPairs ep = eig_dense(G.cast<cplx>());
    CharSpeeds cs;
    cs.speeds = ep.values;
    cs.residual = ep.max_residual;
    bool nonhyp = false, all_real = true;
    for (Eigen::Index i = 0; i < cs.speeds.size(); ++i) {
        const cplx a = cs.speeds(i);
        if (std::abs(a.imag()) > 1e-6 * std::max(1.0, std::abs(a))) nonhyp = true;
        if (std::abs(a.imag()) > 1e-8) all_real = false;
    }
    bool distinct = true;
    for (Eigen::Index i = 0; i < cs.speeds.size(); ++i)
        for (Eigen::Index j = i + 1; j < cs.speeds.size(); ++j)
            if (std::abs(cs.speeds(i) - cs.speeds(j)) <= 1e-8 * std::max(1.0, std::abs(cs.speeds(i)))) distinct = false;
    if (nonhyp) cs.verdict = Hyperbolicity::NonHyperbolic;
    else if (all_real && distinct) cs.verdict = Hyperbolicity::Strict;
    else cs.verdict = Hyperbolicity::Weak;
    return cs;
}

namespace {

void assemble(const SystemSpec& s, WhithamJacobian& wj) {
    const int np = static_cast<int>(wj.params.size());
    wj.variants.clear();
    if (s.cls == SystemClass::ReactionDiffusion) {
        Mat G(1, 1);
        G(0, 0) = wj.domega(0);
        wj.variants.push_back({"standard", G, char_speeds(G)});
        return;
    }
    if (s.cls == SystemClass::Mixed) {
        Mat G(np, np);
        for (int a = 0; a < np; ++a) {
            G(0, a) = wj.domega(a);
            for (int i = 0; i < s.d1; ++i) G(1 + i, a) = -wj.dF[a](i);
        }
        wj.variants.push_back({"standard", G, char_speeds(G)});
        return;
    }
    for (double sign : {-1.0, 1.0}) {
        Mat G(np, np);
        for (int a = 0; a < np; ++a) {
            G(0, a) = wj.domega(a);
            const Vec bf = s.Bmat * wj.dF[a];
            for (int i = 0; i < s.d; ++i) G(1 + i, a) = sign * bf(i);
            G(np - 1, a) = wj.dS(a);
        }
        wj.variants.push_back({sign < 0 ? "minus_BdF" : "plus_BdF", G, char_speeds(G)});
    }
}

}  // namespace

WhithamJacobian whitham_jacobian(const SystemSpec& s, const WaveProfile& u, const WaveDerivatives& wd) {
    WhithamJacobian wj;
    wj.cls = s.cls;
    wj.params = parameter_names(s);
    wj.derivative_source = "bordered";
    const int np = static_cast<int>(wj.params.size());
    wj.domega = Vec::Zero(np);
    wj.dS = Vec::Zero(np);
    wj.domega(0) = wd.dk_omega;
    for (Eigen::Index i = 0; i < wd.dM_omega.size(); ++i) wj.domega(1 + i) = wd.dM_omega(i);
    if (s.cls == SystemClass::Hamiltonian) wj.domega(np - 1) = wd.dE_omega;
    if (s.cls != SystemClass::ReactionDiffusion) {
        wj.fluxes = averaged_fluxes(s, u);
        for (int a = 0; a < np; ++a) {
            const std::string& nm = wj.params[a];
            if (nm != "k" && nm != "E" && wd.dM.size() <= static_cast<std::size_t>(std::stoi(nm.substr(1))))
                throw Error(ErrorKind::DerivativeUnavailable, "missing derivative for " + nm);
            const Vec& du = nm == "k" ? wd.dk : (nm == "E" ? wd.dE : wd.dM[std::stoi(nm.substr(1))]);
            if (du.size() != u.coeffs.size()) throw Error(ErrorKind::DerivativeUnavailable, "missing derivative for " + nm);
            const FluxRecord fd = flux_directional(s, u, du, nm == "k");
            wj.dF.push_back(fd.F);
            wj.dS(a) = fd.S;
        }
    }
    assemble(s, wj);
    return wj;
}

WhithamJacobian whitham_jacobian_fd(const SystemSpec& s, const WaveProfile& u, const FdDerivatives& fd) {
    WhithamJacobian wj;
    wj.cls = s.cls;
    wj.params = fd.names;
    wj.derivative_source = "finite-difference";
    const int np = static_cast<int>(wj.params.size());
    if (fd.domega.size() != np || static_cast<int>(fd.plus.size()) != np)
        throw Error(ErrorKind::DerivativeUnavailable, "finite-difference data incomplete");
    wj.domega = fd.domega;
    wj.dS = Vec::Zero(np);
    if (s.cls != SystemClass::ReactionDiffusion) {
        wj.fluxes = averaged_fluxes(s, u);
        for (int a = 0; a < np; ++a) {
            const double h = fd.plus[a].k != u.k ? (fd.plus[a].k - fd.minus[a].k) / 2
                                                  : (parameter_value(fd.plus[a], wj.params[a]) -
                                                     parameter_value(fd.minus[a], wj.params[a])) / 2;
            const FluxRecord p = averaged_fluxes(s, fd.plus[a]), m = averaged_fluxes(s, fd.minus[a]);
            const FluxRecord p2 = averaged_fluxes(s, fd.plus_half[a]), m2 = averaged_fluxes(s, fd.minus_half[a]);
            const Vec D1 = (p.F - m.F) / (2 * h), D2 = (p2.F - m2.F) / h;
            wj.dF.push_back((4 * D2 - D1) / 3);
            const double S1 = (p.S - m.S) / (2 * h), S2 = (p2.S - m2.S) / h;
            wj.dS(a) = (4 * S2 - S1) / 3;
        }
    }
    assemble(s, wj);
    return wj;
}

DerivativeConsistency compare_jacobians(const WhithamJacobian& a, const WhithamJacobian& b, double tol) {
    DerivativeConsistency dc;
    auto add = [&](const std::string& name, double x, double y) {
        dc.entries.push_back(name);
        dc.bordered.push_back(x);
        dc.finite_difference.push_back(y);
        const double r = std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-6});
        dc.rel_diff.push_back(r);
        dc.max_rel_diff = std::max(dc.max_rel_diff, r);
    };
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        add("d" + a.params[i] + "_omega", a.domega(i), b.domega(i));
        if (i < a.dF.size())
            for (Eigen::Index c = 0; c < a.dF[i].size(); ++c)
                add("d" + a.params[i] + "_F" + std::to_string(c), a.dF[i](c), b.dF[i](c));
        if (a.cls == SystemClass::Hamiltonian) add("d" + a.params[i] + "_S", a.dS(i), b.dS(i));
    }
    dc.warning = dc.max_rel_diff > tol;
    return dc;
}

}  // namespace latwave

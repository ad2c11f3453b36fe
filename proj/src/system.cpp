#include "latwave/system.hpp"

#include <cmath>

namespace latwave {

std::string class_name(SystemClass c) {
    switch (c) {
        case SystemClass::ReactionDiffusion: return "reaction_diffusion";
        case SystemClass::Mixed: return "mixed";
        case SystemClass::Hamiltonian: return "hamiltonian";
    }
    return "unknown";
}

SystemClass class_from_name(const std::string& s) {
    if (s == "reaction_diffusion") return SystemClass::ReactionDiffusion;
    if (s == "mixed") return SystemClass::Mixed;
    if (s == "hamiltonian") return SystemClass::Hamiltonian;
    throw Error(ErrorKind::SchemaError, "unknown class tag '" + s + "'");
}

int SystemSpec::branch_count() const {
    switch (cls) {
        case SystemClass::ReactionDiffusion: return 1;
        case SystemClass::Mixed: return d1 + 1;
        case SystemClass::Hamiltonian: return d + 2;
    }
    return 0;
}

int SystemSpec::param_count() const { return branch_count() - 1; }

Stencil SystemSpec::laplacian() const { return {{-1, mu}, {0, -2.0 * mu}, {1, mu}}; }
Stencil SystemSpec::forward() const { return {{0, -eta}, {1, eta}}; }
Stencil SystemSpec::backward() const { return {{-1, -eta}, {0, eta}}; }
Stencil SystemSpec::centered() const { return {{-1, -0.5 * eta}, {1, 0.5 * eta}}; }
Stencil SystemSpec::forward_adj() const { return {{-1, eta}, {0, -eta}}; }

ShiftPolynomial SystemSpec::op(const std::string& which) const {
    if (which == "laplacian") return ShiftPolynomial::from_stencil(d, laplacian());
    if (which == "D1" || which == "D4" || which == "Dtilde") return ShiftPolynomial::from_stencil(d, forward());
    if (which == "D2" || which == "D3") return ShiftPolynomial::from_stencil(d, backward());
    if (which == "D") return ShiftPolynomial::from_stencil(d, centered());
    if (which == "Dtilde*") return ShiftPolynomial::from_stencil(d, forward_adj());
    if (which == "J") {
        ShiftPolynomial P(d);
        for (const auto& [p, c] : centered()) P.add_term(p, c * Bmat);
        return P;
    }
    throw Error(ErrorKind::SchemaError, "unknown operator '" + which + "'");
}

SystemSpec make_lambda_omega(double mu, double c0, double c1) {
    SystemSpec s;
    s.cls = SystemClass::ReactionDiffusion;
    s.name = "lambda_omega";
    s.params = {{"mu", mu}, {"c0", c0}, {"c1", c1}};
    s.d = 2;
    s.mu = mu;
    s.f = [c0, c1](const Vec& u) {
        const double q = u.squaredNorm();
        Vec Ru(2);
        Ru << -u(1), u(0);
        return Vec((1.0 - q) * u + (c0 + c1 * q) * Ru);
    };
    s.Df = [c0, c1](const Vec& u) {
        const double q = u.squaredNorm();
        Mat R(2, 2);
        R << 0, -1, 1, 0;
        const Vec Ru = R * u;
        return Mat((1.0 - q) * Mat::Identity(2, 2) - 2.0 * u * u.transpose() + (c0 + c1 * q) * R +
                   2.0 * c1 * Ru * u.transpose());
    };
    return s;
}

SystemSpec make_linear_rd(double mu, double a) {
    SystemSpec s;
    s.cls = SystemClass::ReactionDiffusion;
    s.name = "linear_rd";
    s.params = {{"mu", mu}, {"a", a}};
    s.d = 1;
    s.mu = mu;
    s.f = [a](const Vec& u) { return Vec(-a * u); };
    s.Df = [a](const Vec&) { return Mat(Mat::Constant(1, 1, -a)); };
    return s;
}

SystemSpec make_roll_waves(double eta, double nu) {
    SystemSpec s;
    s.cls = SystemClass::Mixed;
    s.name = "roll_waves";
    s.params = {{"eta", eta}, {"nu", nu}};
    s.d = 2;
    s.d1 = 1;
    s.eta = eta;
    s.fr = [](const Vec& u) { return Vec(Vec::Constant(1, u(1))); };
    s.Dfr = [](const Vec&) {
        Mat J(1, 2);
        J << 0.0, 1.0;
        return J;
    };
    s.fw = [](const Vec& u) {
        const double r = u(0), w = u(1);
        return Vec(Vec::Constant(1, w * w / r + 0.5 * r * r));
    };
    s.Dfw = [](const Vec& u) {
        const double r = u(0), w = u(1);
        Mat J(1, 2);
        J << -w * w / (r * r) + r, 2.0 * w / r;
        return J;
    };
    s.g = [](const Vec& u) {
        const double r = u(0), w = u(1);
        return Vec(Vec::Constant(1, r - w * std::abs(w) / r));
    };
    s.Dg = [](const Vec& u) {
        const double r = u(0), w = u(1);
        Mat J(1, 2);
        J << 1.0 + w * std::abs(w) / (r * r), -2.0 * std::abs(w) / r;
        return J;
    };
    s.Bvisc = [nu](const Vec&) { return Mat(Mat::Constant(1, 1, nu)); };
    s.dBvisc = [](const Vec&, int) { return Mat(Mat::Zero(1, 1)); };
    return s;
}

namespace {
SystemSpec scalar_chain(double eta, std::function<double(double)> W, std::function<double(double)> W1,
                        std::function<double(double)> W2) {
    SystemSpec s;
    s.cls = SystemClass::Hamiltonian;
    s.d = 1;
    s.eta = eta;
    s.Bmat = Mat::Identity(1, 1);
    s.H = [W](const Vec& u, const Vec& v) { return 0.5 * v(0) * v(0) + W(u(0)); };
    s.HU = [W1](const Vec& u, const Vec&) { return Vec(Vec::Constant(1, W1(u(0)))); };
    s.Hv = [](const Vec&, const Vec& v) { return Vec(v); };
    s.HUU = [W2](const Vec& u, const Vec&) { return Mat(Mat::Constant(1, 1, W2(u(0)))); };
    s.HUv = [](const Vec&, const Vec&) { return Mat(Mat::Zero(1, 1)); };
    s.Hvv = [](const Vec&, const Vec&) { return Mat(Mat::Identity(1, 1)); };
    return s;
}
}  // namespace

SystemSpec make_quartic_chain(double eta, double w2, double w4) {
    SystemSpec s = scalar_chain(
        eta, [w2, w4](double u) { return 0.5 * w2 * u * u + 0.25 * w4 * u * u * u * u; },
        [w2, w4](double u) { return w2 * u + w4 * u * u * u; },
        [w2, w4](double u) { return w2 + 3.0 * w4 * u * u; });
    s.name = "quartic_chain";
    s.params = {{"eta", eta}, {"w2", w2}, {"w4", w4}};
    return s;
}

SystemSpec make_harmonic_chain(double eta, double w2) {
    SystemSpec s = scalar_chain(
        eta, [w2](double u) { return 0.5 * w2 * u * u; }, [w2](double u) { return w2 * u; },
        [w2](double) { return w2; });
    s.name = "harmonic_chain";
    s.params = {{"eta", eta}, {"w2", w2}};
    return s;
}

std::vector<std::string> available_systems() {
    return {"lambda_omega", "roll_waves", "quartic_chain", "harmonic_chain", "linear_rd"};
}

std::map<std::string, double> default_params(const std::string& name) {
    if (name == "lambda_omega") return {{"mu", 0.5}, {"c0", 1.0}, {"c1", -1.0}};
    if (name == "roll_waves") return {{"eta", 1.0}, {"nu", 0.1}};
    if (name == "quartic_chain") return {{"eta", 1.0}, {"w2", 0.1}, {"w4", 1.0}};
    if (name == "harmonic_chain") return {{"eta", 1.0}, {"w2", 1.0}};
    if (name == "linear_rd") return {{"mu", 1.0}, {"a", 1.0}};
    std::string list;
    for (const auto& n : available_systems()) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::SchemaError, "unknown system '" + name + "'; available: " + list);
}

SystemSpec make_system(const std::string& name, const std::map<std::string, double>& given) {
    auto p = default_params(name);
    for (const auto& [key, val] : given) {
        if (!p.count(key)) throw Error(ErrorKind::SchemaError, "system '" + name + "' has no parameter '" + key + "'");
        p[key] = val;
    }
    if (name == "lambda_omega") return make_lambda_omega(p["mu"], p["c0"], p["c1"]);
    if (name == "roll_waves") return make_roll_waves(p["eta"], p["nu"]);
    if (name == "quartic_chain") return make_quartic_chain(p["eta"], p["w2"], p["w4"]);
    if (name == "harmonic_chain") return make_harmonic_chain(p["eta"], p["w2"]);
    return make_linear_rd(p["mu"], p["a"]);
}

namespace {
Mat fd_jac(const PointMap& f, const Vec& u) {
    const Vec f0 = f(u);
    Mat J(f0.size(), u.size());
    for (int i = 0; i < u.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(u(i)));
        Vec up = u, um = u;
        up(i) += h;
        um(i) -= h;
        J.col(i) = (f(up) - f(um)) / (2.0 * h);
    }
    return J;
}

double rel_err(const Mat& A, const Mat& B) { return (A - B).norm() / std::max(1.0, A.norm()); }
}  // namespace

double jacobian_selftest(const SystemSpec& s, const Vec& u, const Vec& v) {
    double worst = 0.0;
    switch (s.cls) {
        case SystemClass::ReactionDiffusion:
            worst = rel_err(s.Df(u), fd_jac(s.f, u));
            break;
        case SystemClass::Mixed:
            worst = std::max({rel_err(s.Dfr(u), fd_jac(s.fr, u)), rel_err(s.Dfw(u), fd_jac(s.fw, u)),
                              rel_err(s.Dg(u), fd_jac(s.g, u))});
            for (int i = 0; i < s.d; ++i) {
                const double h = 1e-6;
                Vec up = u, um = u;
                up(i) += h;
                um(i) -= h;
                worst = std::max(worst, rel_err(s.dBvisc(u, i), (s.Bvisc(up) - s.Bvisc(um)) / (2 * h)));
            }
            break;
        case SystemClass::Hamiltonian: {
            auto HUu = [&](const Vec& x) { return s.HU(x, v); };
            auto HUv = [&](const Vec& y) { return s.HU(u, y); };
            auto Hvv = [&](const Vec& y) { return s.Hv(u, y); };
            auto grad = [&](const PairScalar& F, bool wrt_u) {
                Vec gr(s.d);
                for (int i = 0; i < s.d; ++i) {
                    const double h = 1e-6;
                    Vec a = wrt_u ? u : v, b = a;
                    a(i) += h;
                    b(i) -= h;
                    gr(i) = wrt_u ? (F(a, v) - F(b, v)) / (2 * h) : (F(u, a) - F(u, b)) / (2 * h);
                }
                return gr;
            };
            worst = std::max({rel_err(s.HU(u, v), grad(s.H, true)), rel_err(s.Hv(u, v), grad(s.H, false)),
                              rel_err(s.HUU(u, v), fd_jac(HUu, u)), rel_err(s.HUv(u, v), fd_jac(HUv, v)),
                              rel_err(s.Hvv(u, v), fd_jac(Hvv, v))});
            worst = std::max(worst, (s.Bmat - s.Bmat.transpose()).cwiseAbs().maxCoeff());
            break;
        }
    }
    return worst;
}

}  // namespace latwave

#pragma once
// The three lattice dynamical-system classes and the shipped example systems.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "latwave/core.hpp"
#include "latwave/shift_poly.hpp"

namespace latwave {

enum class SystemClass { ReactionDiffusion, Mixed, Hamiltonian };

std::string class_name(SystemClass c);
SystemClass class_from_name(const std::string& s);

using PointMap = std::function<Vec(const Vec&)>;
using PointJac = std::function<Mat(const Vec&)>;
using PairScalar = std::function<double(const Vec&, const Vec&)>;
using PairMap = std::function<Vec(const Vec&, const Vec&)>;
using PairJac = std::function<Mat(const Vec&, const Vec&)>;

/// One system instance. Only the callables of its class are populated.
struct SystemSpec {
    SystemClass cls = SystemClass::ReactionDiffusion;
    std::string name;
    std::map<std::string, double> params;
    int d = 1;
    int d1 = 0;  // conserved components (Mixed)
    double mu = 0.0;
    double eta = 1.0;
    Mat Bmat;  // Hamiltonian structure matrix

    // reaction-diffusion: dU/dt = mu (T - 2 + T^-1) U + f(U)
    PointMap f;
    PointJac Df;

    // mixed: r_t = -D1 f_r, w_t = -D2 f_w + D3 (B(U) D4 w) + g; u = (r, w)
    PointMap fr, fw, g;
    PointJac Dfr, Dfw, Dg;
    PointJac Bvisc;                               // d2 x d2
    std::function<Mat(const Vec&, int)> dBvisc;  // derivative of B w.r.t. u_i

    // hamiltonian: dU/dt = D Bmat deltaH, H = H(U, Dtilde U)
    PairScalar H;
    PairMap HU, Hv;
    PairJac HUU, HUv, Hvv;

    int d2() const { return d - d1; }
    /// Number of critical Floquet branches: 1, d1 + 1 or d + 2.
    int branch_count() const;
    /// Number of wave parameters besides k: 0, d1 or d + 1.
    int param_count() const;

    // difference stencils
    Stencil laplacian() const;  // mu (T - 2 + T^-1)
    Stencil forward() const;    // eta (T - I): D1, D4, Dtilde
    Stencil backward() const;   // eta (I - T^-1): D2, D3
    Stencil centered() const;   // eta/2 (T - T^-1): D
    Stencil forward_adj() const;  // eta (T^-1 - I): Dtilde*

    /// Named operators as shift polynomials on (R^d)^Z.
    ShiftPolynomial op(const std::string& which) const;
};

SystemSpec make_lambda_omega(double mu, double c0, double c1);
SystemSpec make_roll_waves(double eta, double nu);
SystemSpec make_quartic_chain(double eta, double w2, double w4);
/// Quadratic energy H = v^2/2 + w2 u^2/2 (linear dynamics).
SystemSpec make_harmonic_chain(double eta, double w2);
/// Scalar RD with f(u) = -a u (linear test system).
SystemSpec make_linear_rd(double mu, double a);

/// Build by name with numeric parameters; missing ones take defaults.
SystemSpec make_system(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> available_systems();
std::map<std::string, double> default_params(const std::string& name);

/// Max relative mismatch between supplied Jacobians and central differences at state u (and v).
double jacobian_selftest(const SystemSpec& s, const Vec& u, const Vec& v);

}  // namespace latwave

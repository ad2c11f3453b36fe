#pragma once
// Real orthonormal trigonometric basis on [0,1): 1, sqrt2 cos 2 pi n z, sqrt2 sin 2 pi n z (n <= K).
// With this basis the L2 pairing is the Euclidean dot product of coefficient vectors,
// so adjoints are transposes. Multi-component vectors are stacked component-major.

#include "latwave/core.hpp"

namespace latwave {

class FourierBasis {
public:
    /// Collocation grid has 2*padding*K + 1 points.
    explicit FourierBasis(int K = 32, int padding = 2);

    int K() const { return K_; }
    int size() const { return M_; }
    int grid_size() const { return Q_; }
    int padding() const { return pad_; }

    const Mat& eval_grid() const { return E_; }   // Q x M
    const Mat& project() const { return P_; }     // M x Q
    const Mat& deriv_matrix() const { return D_; }
    const Vec& grid() const { return z_; }

    Mat shift_matrix(double s) const;
    Vec shift(const Vec& a, double s) const;
    Vec deriv(const Vec& a) const;
    Eigen::RowVectorXd basis_row(double z) const;
    double eval(const Vec& a, double z) const;

    // stacked d-component helpers
    Vec shift_all(const Vec& u, int d, double s) const;
    Vec deriv_all(const Vec& u, int d) const;
    Vec eval_all(const Vec& u, int d, double z) const;
    /// Q x d values of u(. + s) on the grid.
    Mat grid_values(const Vec& u, int d, double s = 0.0) const;
    /// Projects Q x d grid values back to stacked coefficients.
    Vec from_grid(const Mat& g) const;

private:
    int K_, M_, Q_, pad_;
    Mat E_, P_, D_;
    Vec z_;
};

/// Complex modes c_n (n = 0..K) of one component from real coefficients.
CVec to_complex_modes(const Vec& a);
Vec from_complex_modes(const CVec& c);

}  // namespace latwave

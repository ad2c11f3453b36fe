#pragma once
// Constant-coefficient difference operators on (R^d)^Z and their Bloch symbols.

#include <map>
#include <utility>

#include "latwave/core.hpp"

namespace latwave {

/// Ring of L sites, one row per site, d columns.
using RingState = Mat;

/// Scalar stencil: offset -> coefficient. Acts componentwise.
using Stencil = std::map<int, double>;

/// sum_p a_p T^p with (T U)_j = U_{j+1}; a_p are d x d.
class ShiftPolynomial {
public:
    explicit ShiftPolynomial(int dim = 1) : dim_(dim) {}

    static ShiftPolynomial identity(int dim);
    static ShiftPolynomial shift(int dim, int p, double c = 1.0);
    static ShiftPolynomial from_stencil(int dim, const Stencil& s);

    int dim() const { return dim_; }
    const std::map<int, Mat>& terms() const { return terms_; }

    /// Adds a to the coefficient at offset p (creates the term if absent).
    void add_term(int p, const Mat& a);

    ShiftPolynomial operator+(const ShiftPolynomial& o) const;
    ShiftPolynomial operator-(const ShiftPolynomial& o) const;
    ShiftPolynomial operator*(double s) const;
    /// Composition: (P*Q)U = P(QU).
    ShiftPolynomial operator*(const ShiftPolynomial& o) const;

    /// Sum of coefficients is zero, i.e. constants are in the kernel.
    bool annihilates_constants(double tol = 1e-14) const;

private:
    int dim_;
    std::map<int, Mat> terms_;
};

/// (PU)_j = sum_p a_p U_{(j+p) mod L}.
RingState apply_op(const ShiftPolynomial& P, const RingState& U);

/// Bloch symbol on N sites, component-major layout (index c*N + j); offset p picks up e^{i p xi}.
CMat symbol_matrix(const ShiftPolynomial& P, double xi, int N);

/// (sum p a_p T^p, sum p^2/2 a_p T^p): first and second xi-coefficients of the symbol.
std::pair<ShiftPolynomial, ShiftPolynomial> bloch_expand_op(const ShiftPolynomial& P);

/// N x N cyclic matrix of T^p (row j has a 1 at column (j+p) mod N).
Mat cyclic_shift(int N, int p);

}  // namespace latwave

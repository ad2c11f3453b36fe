#include "latwave/shift_poly.hpp"

#include <cmath>

namespace latwave {

namespace {
int wrap(int j, int L) {
    int r = j % L;
    return r < 0 ? r + L : r;
}
}  // namespace

ShiftPolynomial ShiftPolynomial::identity(int dim) { return shift(dim, 0, 1.0); }

ShiftPolynomial ShiftPolynomial::shift(int dim, int p, double c) {
    ShiftPolynomial P(dim);
    P.add_term(p, c * Mat::Identity(dim, dim));
    return P;
}

ShiftPolynomial ShiftPolynomial::from_stencil(int dim, const Stencil& s) {
    ShiftPolynomial P(dim);
    for (const auto& [p, c] : s) P.add_term(p, c * Mat::Identity(dim, dim));
    return P;
}

void ShiftPolynomial::add_term(int p, const Mat& a) {
    if (a.rows() != dim_ || a.cols() != dim_)
        throw Error(ErrorKind::DimensionMismatch, "shift polynomial coefficient must be d x d");
    auto it = terms_.find(p);
    if (it == terms_.end())
        terms_.emplace(p, a);
    else
        it->second += a;
}

ShiftPolynomial ShiftPolynomial::operator+(const ShiftPolynomial& o) const {
    if (o.dim_ != dim_) throw Error(ErrorKind::DimensionMismatch, "shift polynomial sum");
    ShiftPolynomial r = *this;
    for (const auto& [p, a] : o.terms_) r.add_term(p, a);
    return r;
}

ShiftPolynomial ShiftPolynomial::operator-(const ShiftPolynomial& o) const { return *this + o * (-1.0); }

ShiftPolynomial ShiftPolynomial::operator*(double s) const {
    ShiftPolynomial r(dim_);
    for (const auto& [p, a] : terms_) r.add_term(p, s * a);
    return r;
}

ShiftPolynomial ShiftPolynomial::operator*(const ShiftPolynomial& o) const {
    if (o.dim_ != dim_) throw Error(ErrorKind::DimensionMismatch, "shift polynomial product");
    ShiftPolynomial r(dim_);
    for (const auto& [p, a] : terms_)
        for (const auto& [q, b] : o.terms_) r.add_term(p + q, a * b);
    return r;
}

bool ShiftPolynomial::annihilates_constants(double tol) const {
    Mat s = Mat::Zero(dim_, dim_);
    for (const auto& [p, a] : terms_) s += a;
    return s.cwiseAbs().maxCoeff() <= tol;
}

RingState apply_op(const ShiftPolynomial& P, const RingState& U) {
    if (U.cols() != P.dim()) throw Error(ErrorKind::DimensionMismatch, "apply_op: state width != d");
    const int L = static_cast<int>(U.rows());
    RingState out = RingState::Zero(L, U.cols());
    for (const auto& [p, a] : P.terms())
        for (int j = 0; j < L; ++j) out.row(j) += (a * U.row(wrap(j + p, L)).transpose()).transpose();
    return out;
}

Mat cyclic_shift(int N, int p) {
    Mat C = Mat::Zero(N, N);
    for (int j = 0; j < N; ++j) C(j, wrap(j + p, N)) = 1.0;
    return C;
}

CMat symbol_matrix(const ShiftPolynomial& P, double xi, int N) {
    if (N < 1) throw Error(ErrorKind::DimensionMismatch, "symbol_matrix: N >= 1 required");
    const int d = P.dim();
    CMat S = CMat::Zero(d * N, d * N);
    for (const auto& [p, a] : P.terms()) {
        const cplx tw = std::polar(1.0, p * xi);
        const Mat C = cyclic_shift(N, p);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                if (a(r, c) != 0.0) S.block(r * N, c * N, N, N) += (tw * a(r, c)) * C.cast<cplx>();
    }
    return S;
}

std::pair<ShiftPolynomial, ShiftPolynomial> bloch_expand_op(const ShiftPolynomial& P) {
    ShiftPolynomial P1(P.dim()), P2(P.dim());
    for (const auto& [p, a] : P.terms()) {
        if (p == 0) continue;
        P1.add_term(p, static_cast<double>(p) * a);
        P2.add_term(p, 0.5 * p * p * a);
    }
    return {P1, P2};
}

}  // namespace latwave

#include "latwave/fourier.hpp"

#include <cmath>

namespace latwave {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

FourierBasis::FourierBasis(int K, int padding) : K_(K), M_(2 * K + 1), Q_(2 * padding * K + 1), pad_(padding) {
    if (K < 1 || padding < 1) throw Error(ErrorKind::DimensionMismatch, "FourierBasis needs K >= 1, padding >= 1");
    z_.resize(Q_);
    for (int q = 0; q < Q_; ++q) z_(q) = static_cast<double>(q) / Q_;
    E_.resize(Q_, M_);
    for (int q = 0; q < Q_; ++q) E_.row(q) = basis_row(z_(q));
    P_ = E_.transpose() / static_cast<double>(Q_);
    D_ = Mat::Zero(M_, M_);
    for (int n = 1; n <= K_; ++n) {
        const double w = kTwoPi * n;
        D_(2 * n - 1, 2 * n) = w;
        D_(2 * n, 2 * n - 1) = -w;
    }
}

Eigen::RowVectorXd FourierBasis::basis_row(double z) const {
    Eigen::RowVectorXd r(M_);
    r(0) = 1.0;
    for (int n = 1; n <= K_; ++n) {
        const double th = kTwoPi * n * z;
        r(2 * n - 1) = kSqrt2 * std::cos(th);
        r(2 * n) = kSqrt2 * std::sin(th);
    }
    return r;
}

Mat FourierBasis::shift_matrix(double s) const {
    Mat T = Mat::Zero(M_, M_);
    T(0, 0) = 1.0;
    for (int n = 1; n <= K_; ++n) {
        const double th = kTwoPi * n * s;
        const double c = std::cos(th), sn = std::sin(th);
        T(2 * n - 1, 2 * n - 1) = c;
        T(2 * n - 1, 2 * n) = sn;
        T(2 * n, 2 * n - 1) = -sn;
        T(2 * n, 2 * n) = c;
    }
    return T;
}

Vec FourierBasis::shift(const Vec& a, double s) const {
    Vec out(M_);
    out(0) = a(0);
    for (int n = 1; n <= K_; ++n) {
        const double th = kTwoPi * n * s;
        const double c = std::cos(th), sn = std::sin(th);
        out(2 * n - 1) = c * a(2 * n - 1) + sn * a(2 * n);
        out(2 * n) = -sn * a(2 * n - 1) + c * a(2 * n);
    }
    return out;
}

Vec FourierBasis::deriv(const Vec& a) const {
    Vec out(M_);
    out(0) = 0.0;
    for (int n = 1; n <= K_; ++n) {
        const double w = kTwoPi * n;
        out(2 * n - 1) = w * a(2 * n);
        out(2 * n) = -w * a(2 * n - 1);
    }
    return out;
}

double FourierBasis::eval(const Vec& a, double z) const { return basis_row(z).dot(a); }

Vec FourierBasis::shift_all(const Vec& u, int d, double s) const {
    Vec out(u.size());
    for (int c = 0; c < d; ++c) out.segment(c * M_, M_) = shift(u.segment(c * M_, M_), s);
    return out;
}

Vec FourierBasis::deriv_all(const Vec& u, int d) const {
    Vec out(u.size());
    for (int c = 0; c < d; ++c) out.segment(c * M_, M_) = deriv(u.segment(c * M_, M_));
    return out;
}

Vec FourierBasis::eval_all(const Vec& u, int d, double z) const {
    const Eigen::RowVectorXd r = basis_row(z);
    Vec out(d);
    for (int c = 0; c < d; ++c) out(c) = r.dot(u.segment(c * M_, M_));
    return out;
}

Mat FourierBasis::grid_values(const Vec& u, int d, double s) const {
    Mat g(Q_, d);
    for (int c = 0; c < d; ++c) g.col(c) = E_ * shift(u.segment(c * M_, M_), s);
    return g;
}

Vec FourierBasis::from_grid(const Mat& g) const {
    const int d = static_cast<int>(g.cols());
    Vec out(d * M_);
    for (int c = 0; c < d; ++c) out.segment(c * M_, M_) = P_ * g.col(c);
    return out;
}

CVec to_complex_modes(const Vec& a) {
    const int K = static_cast<int>((a.size() - 1) / 2);
    CVec c(K + 1);
    c(0) = a(0);
    for (int n = 1; n <= K; ++n) c(n) = cplx(a(2 * n - 1), -a(2 * n)) / kSqrt2;
    return c;
}

Vec from_complex_modes(const CVec& c) {
    const int K = static_cast<int>(c.size() - 1);
    Vec a(2 * K + 1);
    a(0) = c(0).real();
    for (int n = 1; n <= K; ++n) {
        a(2 * n - 1) = kSqrt2 * c(n).real();
        a(2 * n) = -kSqrt2 * c(n).imag();
    }
    return a;
}

}  // namespace latwave

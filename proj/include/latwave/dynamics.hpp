#pragma once
// Class right-hand sides and their linearizations, written once over abstract "views".
//
// A view exposes `Mat at(int p) const` returning an n x d block: row i holds the state at
// sample point i advanced by p lattice sites. Ring states, lattice samples of a profile and
// collocation grids of a profile all fit this shape.

#include <array>
#include <functional>
#include <map>

#include "latwave/system.hpp"

namespace latwave {

/// Caches at(p) so nested stencils do not recompute shifted samples.
template <class View>
class CachedView {
public:
    explicit CachedView(const View& v) : v_(v) {}
    const Mat& at(int p) const {
        auto it = cache_.find(p);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(p, v_.at(p)).first->second;
    }

private:
    const View& v_;
    mutable std::map<int, Mat> cache_;
};

inline Mat apply_rows(const Mat& U, const PointMap& f) {
    Mat out;
    for (int i = 0; i < U.rows(); ++i) {
        const Vec y = f(U.row(i).transpose());
        if (i == 0) out.resize(U.rows(), y.size());
        out.row(i) = y.transpose();
    }
    return out;
}

inline Mat apply_rows2(const Mat& U, const Mat& V, const PairMap& f) {
    Mat out;
    for (int i = 0; i < U.rows(); ++i) {
        const Vec y = f(U.row(i).transpose(), V.row(i).transpose());
        if (i == 0) out.resize(U.rows(), y.size());
        out.row(i) = y.transpose();
    }
    return out;
}

/// Hamiltonian helper quantities at an offset: v = Dtilde U, gradients and deltaH.
template <class View>
struct HamFields {
    const SystemSpec& s;
    const CachedView<View>& cv;
    mutable std::map<int, Mat> vcache, dcache;

    const Mat& v(int p) const {
        auto it = vcache.find(p);
        if (it != vcache.end()) return it->second;
        return vcache.emplace(p, s.eta * (cv.at(p + 1) - cv.at(p))).first->second;
    }
    Mat hv(int p) const { return apply_rows2(cv.at(p), v(p), s.Hv); }
    Mat hu(int p) const { return apply_rows2(cv.at(p), v(p), s.HU); }
    /// deltaH = grad_U H + Dtilde^* grad_v H.
    const Mat& delta(int p) const {
        auto it = dcache.find(p);
        if (it != dcache.end()) return it->second;
        Mat d = hu(p) + s.eta * (hv(p - 1) - hv(p));
        return dcache.emplace(p, std::move(d)).first->second;
    }
    /// J deltaH = D (Bmat deltaH), rows are sample points.
    Mat jdelta(int p) const { return 0.5 * s.eta * (delta(p + 1) - delta(p - 1)) * s.Bmat.transpose(); }
    Vec density(int p) const {
        Vec out(cv.at(p).rows());
        const Mat& U = cv.at(p);
        const Mat& V = v(p);
        for (int i = 0; i < U.rows(); ++i) out(i) = s.H(U.row(i).transpose(), V.row(i).transpose());
        return out;
    }
    /// 1/2 T^-1(deltaH).Bmat deltaH + T^-1(grad_v H).J deltaH.
    Vec flux(int p) const {
        const Mat& dm = delta(p - 1);
        const Mat& d0 = delta(p);
        const Mat hvm = hv(p - 1);
        const Mat jd = jdelta(p);
        Vec out(d0.rows());
        for (int i = 0; i < d0.rows(); ++i)
            out(i) = 0.5 * dm.row(i).dot(d0.row(i) * s.Bmat.transpose()) + hvm.row(i).dot(jd.row(i));
        return out;
    }
};

/// dU/dt sampled at the view's points (the spatial part of every class equation).
template <class View>
Mat spatial_rhs(const SystemSpec& s, const View& view) {
    CachedView<View> cv(view);
    switch (s.cls) {
        case SystemClass::ReactionDiffusion:
            return s.mu * (cv.at(1) - 2.0 * cv.at(0) + cv.at(-1)) + apply_rows(cv.at(0), s.f);
        case SystemClass::Mixed: {
            const int d1 = s.d1, d2 = s.d2();
            auto wpart = [&](int p) { return Mat(cv.at(p).rightCols(d2)); };
            // B(U) D4 w at offset p
            auto visc = [&](int p) {
                const Mat& U = cv.at(p);
                const Mat dw = s.eta * (wpart(p + 1) - wpart(p));
                Mat out(U.rows(), d2);
                for (int i = 0; i < U.rows(); ++i)
                    out.row(i) = (s.Bvisc(U.row(i).transpose()) * dw.row(i).transpose()).transpose();
                return out;
            };
            Mat out(cv.at(0).rows(), s.d);
            out.leftCols(d1) = -s.eta * (apply_rows(cv.at(1), s.fr) - apply_rows(cv.at(0), s.fr));
            out.rightCols(d2) = -s.eta * (apply_rows(cv.at(0), s.fw) - apply_rows(cv.at(-1), s.fw)) +
                                s.eta * (visc(0) - visc(-1)) + apply_rows(cv.at(0), s.g);
            return out;
        }
        case SystemClass::Hamiltonian: {
            HamFields<View> hf{s, cv, {}, {}};
            return hf.jdelta(0);
        }
    }
    return Mat();
}

/// Truncated power series M0 + e M1 + e^2 M2 in one small parameter.
template <class M>
struct Jet {
    std::array<M, 3> c;
    int order = 0;

    static Jet constant(const M& a, int order) {
        Jet j;
        j.order = order;
        j.c[0] = a;
        for (int i = 1; i <= order; ++i) j.c[i] = M::Zero(a.rows(), a.cols());
        return j;
    }
    Jet operator+(const Jet& o) const {
        Jet r = *this;
        for (int i = 0; i <= order; ++i) r.c[i] += o.c[i];
        return r;
    }
    Jet operator-(const Jet& o) const {
        Jet r = *this;
        for (int i = 0; i <= order; ++i) r.c[i] -= o.c[i];
        return r;
    }
    Jet operator*(double s) const {
        Jet r = *this;
        for (int i = 0; i <= order; ++i) r.c[i] *= s;
        return r;
    }
    Jet operator*(const Jet& o) const {
        Jet r;
        r.order = order;
        r.c[0] = c[0] * o.c[0];
        if (order >= 1) r.c[1] = c[0] * o.c[1] + c[1] * o.c[0];
        if (order >= 2) r.c[2] = c[0] * o.c[2] + c[1] * o.c[1] + c[2] * o.c[0];
        return r;
    }
};

/// Field of d_out x d_in matrices sampled at the view's points.
struct JacField {
    int rows = 0, cols = 0;
    std::vector<Vec> entry;  // row-major, each of length npoints
    Vec& operator()(int r, int c) { return entry[r * cols + c]; }
    const Vec& operator()(int r, int c) const { return entry[r * cols + c]; }
    static JacField zero(int rows, int cols, int npts) {
        JacField f;
        f.rows = rows;
        f.cols = cols;
        f.entry.assign(rows * cols, Vec::Zero(npts));
        return f;
    }
};

/// Builds d-component operators on a representation with n scalar unknowns per component.
/// `base_shift(p)` is the n x n shift by p sites (including any Bloch twist);
/// `base_mult(v)` is multiplication by a scalar field v sampled at the view's points.
template <class M>
struct OpBuilder {
    int n = 0;
    int d = 1;
    int order = 0;
    std::function<M(int)> base_shift;
    std::function<M(const Vec&)> base_mult;

    Jet<M> id() const { return Jet<M>::constant(M::Identity(n * d, n * d), order); }
    Jet<M> shift(int p) const {
        const M b = base_shift(p);
        Jet<M> j;
        j.order = order;
        j.c[0] = M::Zero(n * d, n * d);
        for (int a = 0; a < d; ++a) j.c[0].block(a * n, a * n, n, n) = b;
        if (order >= 1) j.c[1] = static_cast<double>(p) * j.c[0];
        if (order >= 2) j.c[2] = (0.5 * p * p) * j.c[0];
        return j;
    }
    Jet<M> stencil(const Stencil& s) const {
        Jet<M> j = Jet<M>::constant(M::Zero(n * d, n * d), order);
        for (const auto& [p, c] : s) j = j + shift(p) * c;
        return j;
    }
    Jet<M> constant(const Mat& C) const {
        M m = M::Zero(n * d, n * d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                if (C(a, b) != 0.0)
                    for (int i = 0; i < n; ++i) m(a * n + i, b * n + i) = C(a, b);
        return Jet<M>::constant(m, order);
    }
    Jet<M> mult(const JacField& f) const {
        M m = M::Zero(n * d, n * d);
        for (int a = 0; a < f.rows; ++a)
            for (int b = 0; b < f.cols; ++b)
                if (f(a, b).cwiseAbs().maxCoeff() != 0.0) m.block(a * n, b * n, n, n) = base_mult(f(a, b));
        return Jet<M>::constant(m, order);
    }
};

/// Samples a pointwise Jacobian into a d x d field; rows of J land at row_offset.
inline JacField sample_jac(int d, int npts, int row_offset, int col_offset,
                           const std::function<Mat(int)>& J_at) {
    JacField f = JacField::zero(d, d, npts);
    for (int i = 0; i < npts; ++i) {
        const Mat J = J_at(i);
        for (int a = 0; a < J.rows(); ++a)
            for (int b = 0; b < J.cols(); ++b) f(row_offset + a, col_offset + b)(i) = J(a, b);
    }
    return f;
}

/// Linearization of spatial_rhs about the sampled state, as an operator jet.
template <class M, class View>
Jet<M> spatial_linearization(const SystemSpec& s, const OpBuilder<M>& B, const View& view) {
    CachedView<View> cv(view);
    const Mat& U0 = cv.at(0);
    const int npts = static_cast<int>(U0.rows());
    auto row = [&](const Mat& U, int i) { return Vec(U.row(i).transpose()); };
    switch (s.cls) {
        case SystemClass::ReactionDiffusion: {
            auto Jf = sample_jac(s.d, npts, 0, 0, [&](int i) { return s.Df(row(U0, i)); });
            return B.stencil(s.laplacian()) + B.mult(Jf);
        }
        case SystemClass::Mixed: {
            const int d1 = s.d1, d2 = s.d2();
            auto Jr = sample_jac(s.d, npts, 0, 0, [&](int i) { return s.Dfr(row(U0, i)); });
            auto Jw = sample_jac(s.d, npts, d1, 0, [&](int i) { return s.Dfw(row(U0, i)); });
            auto Jg = sample_jac(s.d, npts, d1, 0, [&](int i) { return s.Dg(row(U0, i)); });
            auto Jb = sample_jac(s.d, npts, d1, d1, [&](int i) { return s.Bvisc(row(U0, i)); });
            const Mat dw = s.eta * (cv.at(1).rightCols(d2) - U0.rightCols(d2));
            auto Jdb = sample_jac(s.d, npts, d1, 0, [&](int i) {
                Mat J(d2, s.d);
                for (int c = 0; c < s.d; ++c) J.col(c) = s.dBvisc(row(U0, i), c) * dw.row(i).transpose();
                return J;
            });
            return B.stencil(s.forward()) * B.mult(Jr) * (-1.0) - B.stencil(s.backward()) * B.mult(Jw) +
                   B.stencil(s.backward()) * (B.mult(Jb) * B.stencil(s.forward()) + B.mult(Jdb)) + B.mult(Jg);
        }
        case SystemClass::Hamiltonian: {
            const Mat V0 = s.eta * (cv.at(1) - U0);
            auto Huu = sample_jac(s.d, npts, 0, 0, [&](int i) { return s.HUU(row(U0, i), row(V0, i)); });
            auto Huv = sample_jac(s.d, npts, 0, 0, [&](int i) { return s.HUv(row(U0, i), row(V0, i)); });
            auto Hvu = sample_jac(s.d, npts, 0, 0,
                                  [&](int i) { return Mat(s.HUv(row(U0, i), row(V0, i)).transpose()); });
            auto Hvv = sample_jac(s.d, npts, 0, 0, [&](int i) { return s.Hvv(row(U0, i), row(V0, i)); });
            const Jet<M> Dt = B.stencil(s.forward());
            const Jet<M> Dts = B.stencil(s.forward_adj());
            const Jet<M> hess = B.mult(Huu) + B.mult(Huv) * Dt + Dts * B.mult(Hvu) + Dts * B.mult(Hvv) * Dt;
            return B.stencil(s.centered()) * B.constant(s.Bmat) * hess;
        }
    }
    return B.id();
}

}  // namespace latwave

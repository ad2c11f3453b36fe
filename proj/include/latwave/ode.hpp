#pragma once
// Dormand-Prince 5(4) with Hairer's continuous extension, for dense Eigen states (real or complex).

#include <cmath>
#include <functional>
#include <vector>

#include "latwave/core.hpp"

namespace latwave {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h0 = 0.0;  // 0: automatic
    long max_steps = 2000000;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
    long evals = 0;
};

template <class State>
class Dopri5 {
public:
    using Rhs = std::function<State(double, const State&)>;
    /// Called at each requested output time with the interpolated state.
    using Sink = std::function<void(double, const State&)>;

    /// Integrates y' = f(t, y) from t0 to t1; output times must be sorted within [t0, t1].
    static State integrate(const Rhs& f, double t0, const State& y0, double t1, const OdeOptions& opt,
                           OdeStats* stats = nullptr, const std::vector<double>& tout = {}, const Sink& sink = {}) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                                a76 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;
        static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

        OdeStats st;
        const double span = t1 - t0;
        if (span == 0.0) {
            for (double to : tout)
                if (sink) sink(to, y0);
            return y0;
        }
        const double dir = span > 0 ? 1.0 : -1.0;
        State y = y0;
        State k1 = f(t0, y);
        ++st.evals;
        double h = opt.h0 > 0 ? opt.h0 * dir : initial_step(f, t0, y, k1, dir, opt, st);
        const double hmin = 1e-14 * std::abs(span);
        double t = t0;
        std::size_t next_out = 0;
        while (next_out < tout.size() && dir * (tout[next_out] - t0) <= 0) {
            if (sink) sink(tout[next_out], y);
            ++next_out;
        }
        bool last = false;
        while (!last) {
            if (st.steps + st.rejected >= opt.max_steps)
                throw Error(ErrorKind::StepUnderflow, "integrator exceeded the step budget");
            if (dir * (t + h - t1) >= 0) {
                h = t1 - t;
                last = true;
            }
            const State k2 = f(t + c2 * h, y + h * (a21 * k1));
            const State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
            const State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const State y6 = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            const State k6 = f(t + h, y6);
            const State ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            const State k7 = f(t + h, ynew);
            st.evals += 6;
            const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            if (!ynew.allFinite()) throw Error(ErrorKind::NonFiniteState, "non-finite state at t = " + std::to_string(t));
            const double en = error_norm(err, y, ynew, opt);
            if (en <= 1.0) {
                if (next_out < tout.size() && dir * (tout[next_out] - (t + h)) <= 0) {
                    const State ydiff = ynew - y;
                    const State bspl = h * k1 - ydiff;
                    const State r4 = ydiff - h * k7 - bspl;
                    const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                    while (next_out < tout.size() && dir * (tout[next_out] - (t + h)) <= 0) {
                        const double th = (tout[next_out] - t) / h;
                        const double th1 = 1.0 - th;
                        if (sink) sink(tout[next_out], y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))));
                        ++next_out;
                    }
                }
                t = last ? t1 : t + h;
                y = ynew;
                k1 = k7;
                ++st.steps;
                const double fac = en == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
                h *= fac;
            } else {
                last = false;
                ++st.rejected;
                h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
                if (std::abs(h) < hmin)
                    throw Error(ErrorKind::StepUnderflow, "step size underflow at t = " + std::to_string(t));
            }
        }
        if (stats) *stats = st;
        return y;
    }

private:
    static double error_norm(const State& err, const State& y, const State& ynew, const OdeOptions& opt) {
        const auto sc = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array()).eval();
        const double s = (err.cwiseAbs().array() / sc).square().sum();
        return std::sqrt(s / static_cast<double>(err.size()));
    }

    static double initial_step(const Rhs& f, double t0, const State& y0, const State& f0, double dir,
                               const OdeOptions& opt, OdeStats& st) {
        const auto sc = (opt.atol + opt.rtol * y0.cwiseAbs().array()).eval();
        const double n = static_cast<double>(y0.size());
        const double dn0 = std::sqrt((y0.cwiseAbs().array() / sc).square().sum() / n);
        const double dn1 = std::sqrt((f0.cwiseAbs().array() / sc).square().sum() / n);
        double h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
        const State y1 = y0 + (h * dir) * f0;
        const State f1 = f(t0 + h * dir, y1);
        ++st.evals;
        const double dn2 = std::sqrt(((f1 - f0).cwiseAbs().array() / sc).square().sum() / n) / h;
        const double mx = std::max(dn1, dn2);
        const double h1 = mx <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / mx, 0.2);
        return dir * std::min(100 * h, h1);
    }
};

}  // namespace latwave

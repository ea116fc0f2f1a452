#pragma once

// integrate.hpp — fundamental matrix solutions and variational flows.
//
// The engine is an embedded Dormand-Prince 5(4) pair with a mixed
// absolute/relative error norm and cubic Hermite dense output on stored
// (value, derivative) nodes. The controller lands exactly on t = T and
// t = 2T, so the monodromy never relies on interpolation. The internal
// error target is tightened by a fixed factor below the requested tol so
// the Hermite interpolant (one order lower than the integrator) also stays
// within its contract of 10*tol.
//
// Piecewise-constant systems skip the Runge-Kutta path entirely: they
// propagate by exact per-interval matrix exponentials.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/linalg.hpp"
#include "floq/matfun.hpp"
#include "floq/systems.hpp"

namespace floq::ode {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct IntegrationStats {
    long steps = 0;
    long rejected = 0;
    double tol = 0.0;
};

using Rhs = std::function<VectorXd(double, const VectorXd&)>;

// Dense output of a vector ODE solve: nodes with values and derivatives,
// plus the stage-based quartic continuous extension of the Dormand-Prince
// pair on each step (C1 across steps, endpoint values and derivatives
// exact). Cubic Hermite on the stored nodes is the fallback for steps
// without extension data.
struct OdeSolution {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::vector<double> t;
    std::vector<VectorXd> y;
    std::vector<VectorXd> dy;
    std::vector<std::array<VectorXd, 4>> rcont;  // per step: extension coefficients
    IntegrationStats stats;

    VectorXd eval(double s) const { return interpolate(s, false); }
    VectorXd eval_deriv(double s) const { return interpolate(s, true); }

  private:
    VectorXd interpolate(double s, bool deriv) const {
        const double span = t_end - t_begin;
        if (s < t_begin - 1e-12 * span || s > t_end + 1e-12 * span)
            throw OutOfWindow("dense output queried at t = " + std::to_string(s) +
                              " outside [" + std::to_string(t_begin) + ", " + std::to_string(t_end) + "]");
        s = std::clamp(s, t_begin, t_end);
        auto it = std::upper_bound(t.begin(), t.end(), s);
        std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin() - 1);
        if (i + 1 >= t.size()) i = t.size() - 2;
        if (s == t[i]) return deriv ? dy[i] : y[i];
        const double h = t[i + 1] - t[i];
        const double th = (s - t[i]) / h;
        if (i < rcont.size()) {
            // u(th) = y_i + th*ydiff + th(1-th)*c2 + th^2(1-th)*c3 + th^2(1-th)^2*c4
            const auto& c = rcont[i];
            if (!deriv)
                return y[i] + th * c[0] + (th * (1 - th)) * c[1] + (th * th * (1 - th)) * c[2] +
                       (th * th * (1 - th) * (1 - th)) * c[3];
            return (c[0] + (1 - 2 * th) * c[1] + (2 * th - 3 * th * th) * c[2] +
                    (2 * th - 6 * th * th + 4 * th * th * th) * c[3]) /
                   h;
        }
        const double th2 = th * th, th3 = th2 * th;
        if (!deriv) {
            const double h00 = 2 * th3 - 3 * th2 + 1;
            const double h10 = th3 - 2 * th2 + th;
            const double h01 = -2 * th3 + 3 * th2;
            const double h11 = th3 - th2;
            return h00 * y[i] + (h10 * h) * dy[i] + h01 * y[i + 1] + (h11 * h) * dy[i + 1];
        }
        const double g00 = (6 * th2 - 6 * th) / h;
        const double g10 = 3 * th2 - 4 * th + 1;
        const double g01 = (-6 * th2 + 6 * th) / h;
        const double g11 = 3 * th2 - 2 * th;
        return g00 * y[i] + g10 * dy[i] + g01 * y[i + 1] + g11 * dy[i + 1];
    }
};

namespace detail {

// Headroom between the requested tolerance and the internal per-step error
// target; keeps the dense output within 10*tol across the step.
inline constexpr double kDenseHeadroom = 32.0;

}  // namespace detail

// Adaptive Dormand-Prince 5(4). `landmarks` are times the grid must hit
// exactly; `underflow_scale` sets the step floor 1e-14 * underflow_scale.
inline OdeSolution integrate_ode(const Rhs& rhs, const VectorXd& y0, double t_begin, double t_end,
                                 double tol, std::vector<double> landmarks = {},
                                 double underflow_scale = 0.0) {
    if (!(t_end > t_begin)) throw InputError("integrate_ode: empty time window");
    const double span = t_end - t_begin;
    if (underflow_scale <= 0.0) underflow_scale = span;
    const double h_floor = 1e-14 * underflow_scale;
    const double tol_eff = tol / detail::kDenseHeadroom;

    landmarks.push_back(t_end);
    std::sort(landmarks.begin(), landmarks.end());
    landmarks.erase(std::unique(landmarks.begin(), landmarks.end()), landmarks.end());

    // Dormand-Prince coefficients.
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
    // continuous-extension weights
    static const double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    OdeSolution sol;
    sol.t_begin = t_begin;
    sol.t_end = t_end;
    sol.stats.tol = tol;

    double t = t_begin;
    VectorXd y = y0;
    VectorXd k1 = rhs(t, y);
    sol.t.push_back(t);
    sol.y.push_back(y);
    sol.dy.push_back(k1);

    std::size_t next_mark = 0;
    while (next_mark < landmarks.size() && landmarks[next_mark] <= t_begin) ++next_mark;

    const double h_max = span / 16.0;
    double h = std::min(h_max, span / 64.0);

    while (t < t_end) {
        bool hit_mark = false;
        if (next_mark < landmarks.size() && t + h >= landmarks[next_mark] - 1e-14 * span) {
            h = landmarks[next_mark] - t;
            hit_mark = true;
        }
        if (h < h_floor)
            throw StepSizeUnderflow("integrate_ode: step size " + std::to_string(h) +
                                    " fell below the floor at t = " + std::to_string(t));

        const VectorXd k2 = rhs(t + c2 * h, y + h * (a21 * k1));
        const VectorXd k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const VectorXd k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const VectorXd k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const VectorXd k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const VectorXd ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const VectorXd k7 = rhs(t + h, ynew);  // FSAL
        const VectorXd errvec =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        bool finite = ynew.allFinite() && errvec.allFinite();
        if (finite) {
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double w = tol_eff + tol_eff * std::max(std::abs(y(i)), std::abs(ynew(i)));
                const double q = errvec(i) / w;
                err += q * q;
            }
            err = std::sqrt(err / static_cast<double>(y.size()));
        } else {
            err = std::numeric_limits<double>::infinity();
        }

        if (err <= 1.0) {
            const VectorXd ydiff = ynew - y;
            const VectorXd bspl = h * k1 - ydiff;
            std::array<VectorXd, 4> c;
            c[0] = ydiff;
            c[1] = bspl;
            c[2] = ydiff - h * k7 - bspl;
            c[3] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            sol.rcont.push_back(std::move(c));

            t = hit_mark ? landmarks[next_mark] : t + h;
            if (hit_mark) ++next_mark;
            y = ynew;
            k1 = k7;
            sol.t.push_back(t);
            sol.y.push_back(y);
            sol.dy.push_back(k1);
            sol.stats.steps += 1;
        } else {
            sol.stats.rejected += 1;
        }
        const double factor = std::isfinite(err)
                                  ? std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0)
                                  : 0.2;
        h = std::min(factor * h, h_max);
    }
    return sol;
}

// Adaptive Simpson quadrature for the Liouville trace integral.
inline double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-11, int depth = 40) {
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
        const double flm = f(lmid), frm = f(rmid);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
            return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return rec(a, b, fa, fm, fb, whole, depth);
}

// Principal fundamental matrix solution over [0, 2T]: nodes with Phi(t_i)
// and A(t_i) Phi(t_i), dense output in between. Piecewise-constant systems
// use exact per-interval exponentials instead of the Runge-Kutta path.
class MatrixSolution {
  public:
    int n = 0;
    double T = 0.0;
    std::vector<double> t;
    std::vector<MatrixXd> phi;
    std::vector<MatrixXd> dphi;
    IntegrationStats stats;

    // exact piecewise backend (empty when the RK path was used)
    std::vector<double> pw_start;
    std::vector<MatrixXd> pw_A;

    std::vector<MatrixXd> pw_phi0;  // Phi at each segment start

    bool exact_piecewise() const { return !pw_start.empty(); }

    MatrixXd eval(double s) const {
        check_window(s);
        if (exact_piecewise()) {
            const std::size_t i = segment(s);
            return matfun::matrix_exp(MatrixXd((s - pw_start[i]) * pw_A[i])) * pw_phi0[i];
        }
        return unflatten(dense_->eval(s));
    }

    MatrixXd eval_deriv(double s) const {
        check_window(s);
        if (exact_piecewise()) {
            const std::size_t i = segment(s);
            return pw_A[i] * matfun::matrix_exp(MatrixXd((s - pw_start[i]) * pw_A[i])) * pw_phi0[i];
        }
        return unflatten(dense_->eval_deriv(s));
    }

    // Phi(T) from the stored node; the step controller lands on T exactly.
    MatrixXd monodromy() const {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] == T) return phi[i];
        throw NumericalError("monodromy: no node at t = T");
    }

    // internal construction hooks; flat_offset locates the matrix block
    // inside the flattened state (nonzero for coupled variational solves)
    std::shared_ptr<OdeSolution> dense_;
    int flat_offset = 0;
    MatrixXd unflatten(const VectorXd& v) const {
        return Eigen::Map<const MatrixXd>(v.data() + flat_offset, n, n);
    }

  private:
    void check_window(double s) const {
        if (s < -1e-12 * T || s > 2.0 * T * (1.0 + 1e-12))
            throw OutOfWindow("matrix solution queried at t = " + std::to_string(s) +
                              " outside [0, 2T]");
    }
    std::size_t segment(double s) const {
        std::size_t i = 0;
        while (i + 1 < pw_start.size() && s >= pw_start[i + 1]) ++i;
        return i;
    }
};

namespace detail {

inline void validate_solution(MatrixSolution& sol, const std::function<double(double)>& trace_fn,
                              bool exact_trace_sum, double exact_sum) {
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        const double det = sol.phi[i].determinant();
        if (!(std::abs(det) >= 1e-300))
            throw NumericalError("fundamental solution: |det Phi| collapsed at t = " +
                                 std::to_string(sol.t[i]));
    }
    const double detT = sol.monodromy().determinant();
    if (!(detT > 0.0))
        throw NumericalError("fundamental solution: det Phi(T) = " + std::to_string(detT) +
                             " violates Liouville positivity");
    const double quad = exact_trace_sum ? exact_sum : integrate_scalar(trace_fn, 0.0, sol.T);
    const double logdet = std::log(detT);
    if (std::abs(logdet - quad) > 1e-6 * std::max(1.0, std::abs(quad)))
        throw NumericalError("fundamental solution: log det Phi(T) = " + std::to_string(logdet) +
                             " disagrees with the trace integral " + std::to_string(quad));
}

}  // namespace detail

inline MatrixSolution fundamental_solution(const sys::PeriodicLinearSystem& system, double tol) {
    if (!(tol >= 1e-14 && tol <= 1e-4))
        throw InputError("fundamental_solution: tol must lie in [1e-14, 1e-4]");
    const int n = system.n;
    const double T = system.T;

    MatrixSolution sol;
    sol.n = n;
    sol.T = T;
    sol.stats.tol = tol;

    if (const auto* pw = std::get_if<sys::PiecewiseBody>(&system.body)) {
        // Exact propagation: nodes at every breakpoint over two periods.
        MatrixXd cur = MatrixXd::Identity(n, n);
        sol.t.push_back(0.0);
        sol.phi.push_back(cur);
        sol.dphi.push_back(pw->pieces.front() * cur);
        for (int period = 0; period < 2; ++period) {
            const double off = period * T;
            for (std::size_t i = 0; i < pw->pieces.size(); ++i) {
                const double lo = pw->breakpoints[i], hi = pw->breakpoints[i + 1];
                sol.pw_start.push_back(off + lo);
                sol.pw_A.push_back(pw->pieces[i]);
                sol.pw_phi0.push_back(cur);
                cur = matfun::matrix_exp(MatrixXd((hi - lo) * pw->pieces[i])) * cur;
                const double node = off + hi;
                sol.t.push_back(node);
                sol.phi.push_back(cur);
                const MatrixXd& next_A =
                    (i + 1 < pw->pieces.size()) ? pw->pieces[i + 1] : pw->pieces.front();
                sol.dphi.push_back(next_A * cur);
                sol.stats.steps += 1;
            }
        }
        double exact = 0.0;
        for (std::size_t i = 0; i < pw->pieces.size(); ++i)
            exact += pw->pieces[i].trace() * (pw->breakpoints[i + 1] - pw->breakpoints[i]);
        detail::validate_solution(sol, {}, true, exact);
        return sol;
    }

    const Rhs rhs = [&system, n](double t, const VectorXd& y) -> VectorXd {
        const MatrixXd A = sys::evaluate(system, t);
        const Eigen::Map<const MatrixXd> Y(y.data(), n, n);
        const MatrixXd dY = A * Y;
        return Eigen::Map<const VectorXd>(dY.data(), n * n);
    };
    VectorXd y0 = Eigen::Map<const VectorXd>(MatrixXd::Identity(n, n).eval().data(), n * n);
    auto dense = std::make_shared<OdeSolution>(
        integrate_ode(rhs, y0, 0.0, 2.0 * T, tol, {T, 2.0 * T}, T));
    sol.dense_ = dense;
    sol.stats = dense->stats;
    sol.stats.tol = tol;
    for (std::size_t i = 0; i < dense->t.size(); ++i) {
        sol.t.push_back(dense->t[i]);
        sol.phi.push_back(Eigen::Map<const MatrixXd>(dense->y[i].data(), n, n));
        sol.dphi.push_back(Eigen::Map<const MatrixXd>(dense->dy[i].data(), n, n));
    }
    detail::validate_solution(
        sol, [&system](double s) { return sys::evaluate(system, s).trace(); }, false, 0.0);
    return sol;
}

inline MatrixXd monodromy(const MatrixSolution& sol) { return sol.monodromy(); }

inline MatrixXd dense_eval(const MatrixSolution& sol, double t) { return sol.eval(t); }

}  // namespace floq::ode

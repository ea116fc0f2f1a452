#pragma once

// systems.hpp — representations of T-periodic coefficient functions A(t)
// and autonomous vector fields.
//
// Three system bodies:
//   * TrigBody         A0 + sum_k [C_k cos(k w t) + S_k sin(k w t)], w = 2 pi / T;
//   * PiecewiseBody    constant matrix per subinterval of [0, T];
//   * ManufacturedBody A(t) = (Q*'(t) + Q*(t) R*) Q*(t)^-1 built from a chosen
//                      invertible curve Q* and constant R*, so the principal
//                      fundamental solution is Q*(t) e^{tR*} Q*(0)^-1 in
//                      closed form. Manufactured systems are the library's
//                      test oracles.
//
// Half-frequency harmonics (multiples of pi/T) are admitted only inside
// QSpec curves: antiperiodic factors live at half frequency, while plain
// coefficient functions must stay T-periodic.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "floq/errors.hpp"
#include "floq/linalg.hpp"

namespace floq::sys {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct TrigTerm {
    int k = 1;   // harmonic index
    MatrixXd C;  // cosine coefficient
    MatrixXd S;  // sine coefficient
};

// Matrix-valued trigonometric polynomial. `base` terms oscillate at
// k * 2 pi / T, `half` terms at k * pi / T.
struct TrigMatrixPolynomial {
    MatrixXd constant;
    std::vector<TrigTerm> base;
    std::vector<TrigTerm> half;

    MatrixXd eval(double t, double T) const {
        MatrixXd a = constant;
        for (const auto& term : base) {
            const double w = term.k * 2.0 * M_PI / T;
            a += std::cos(w * t) * term.C + std::sin(w * t) * term.S;
        }
        for (const auto& term : half) {
            const double w = term.k * M_PI / T;
            a += std::cos(w * t) * term.C + std::sin(w * t) * term.S;
        }
        return a;
    }

    MatrixXd deriv(double t, double T) const {
        MatrixXd a = MatrixXd::Zero(constant.rows(), constant.cols());
        for (const auto& term : base) {
            const double w = term.k * 2.0 * M_PI / T;
            a += -w * std::sin(w * t) * term.C + w * std::cos(w * t) * term.S;
        }
        for (const auto& term : half) {
            const double w = term.k * M_PI / T;
            a += -w * std::sin(w * t) * term.C + w * std::cos(w * t) * term.S;
        }
        return a;
    }
};

// An invertible matrix curve Q*(t) over the half-frequency grid together
// with its declared signature d*, intending Q*(t+T) = Q*(t) [I_(n-d*) (+) (-I_d*)].
struct QSpec {
    TrigMatrixPolynomial curve;
    int declared_d = 0;
};

struct TrigBody {
    TrigMatrixPolynomial poly;
};

struct PiecewiseBody {
    std::vector<double> breakpoints;  // 0 = t_0 < t_1 < ... < t_m = T
    std::vector<MatrixXd> pieces;     // one matrix per subinterval
};

struct ManufacturedBody {
    QSpec qspec;
    MatrixXd rstar;
};

using SystemBody = std::variant<TrigBody, PiecewiseBody, ManufacturedBody>;

struct PeriodicLinearSystem {
    int n = 0;
    double T = 0.0;
    SystemBody body;

    bool manufactured() const { return std::holds_alternative<ManufacturedBody>(body); }
};

namespace detail {

inline void require_square(const MatrixXd& m, int n, const std::string& what) {
    if (m.rows() != n || m.cols() != n)
        throw InputError(what + ": expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    if (!m.allFinite()) throw InputError(what + ": nonfinite entries");
}

inline void validate_poly(const TrigMatrixPolynomial& p, int n, bool allow_half,
                          const std::string& what) {
    require_square(p.constant, n, what + " constant term");
    for (const auto& t : p.base) {
        if (t.k <= 0) throw InputError(what + ": harmonic indices must be positive");
        require_square(t.C, n, what + " cosine coefficient");
        require_square(t.S, n, what + " sine coefficient");
    }
    for (const auto& t : p.half) {
        if (!allow_half)
            throw InputError(what + ": half-frequency harmonics are only admitted inside QSpec curves");
        if (t.k <= 0) throw InputError(what + ": harmonic indices must be positive");
        require_square(t.C, n, what + " cosine coefficient");
        require_square(t.S, n, what + " sine coefficient");
    }
}

}  // namespace detail

inline PeriodicLinearSystem make_trig_system(int n, double T, TrigMatrixPolynomial poly) {
    if (n <= 0) throw InputError("make_trig_system: dimension must be positive");
    if (!(T > 0.0)) throw InputError("make_trig_system: period must be positive");
    detail::validate_poly(poly, n, /*allow_half=*/false, "trig system");
    return {n, T, TrigBody{std::move(poly)}};
}

inline PeriodicLinearSystem make_constant_system(double T, const MatrixXd& A0) {
    TrigMatrixPolynomial p;
    p.constant = A0;
    return make_trig_system(static_cast<int>(A0.rows()), T, std::move(p));
}

inline PeriodicLinearSystem make_piecewise_system(int n, double T, std::vector<double> breakpoints,
                                                  std::vector<MatrixXd> pieces) {
    if (n <= 0) throw InputError("make_piecewise_system: dimension must be positive");
    if (!(T > 0.0)) throw InputError("make_piecewise_system: period must be positive");
    if (breakpoints.size() < 2 || breakpoints.size() != pieces.size() + 1)
        throw InputError("make_piecewise_system: need m+1 breakpoints for m pieces");
    if (breakpoints.front() != 0.0 || breakpoints.back() != T)
        throw InputError("make_piecewise_system: breakpoints must span exactly [0, T]");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw InputError("make_piecewise_system: breakpoints must strictly increase");
    for (const auto& m : pieces) detail::require_square(m, n, "piecewise piece");
    return {n, T, PiecewiseBody{std::move(breakpoints), std::move(pieces)}};
}

// Probe-grid validation of a QSpec: invertibility margin of det Q*(t) over
// [0, 2T] and the declared (anti)periodicity relation.
struct QSpecReport {
    double min_abs_det = 0.0;
    double max_periodicity_deviation = 0.0;
    bool invertible = false;
    bool periodicity_ok = false;
    bool ok() const { return invertible && periodicity_ok; }
};

inline MatrixXd signature_matrix(int n, int d) {
    VectorXd diag = VectorXd::Ones(n);
    for (int i = n - d; i < n; ++i) diag(i) = -1.0;
    return diag.asDiagonal();
}

inline QSpecReport validate_qspec(const QSpec& q, int n, double T, int probes = 512) {
    QSpecReport rep;
    rep.min_abs_det = std::numeric_limits<double>::infinity();
    const MatrixXd Ad = signature_matrix(n, q.declared_d);
    for (int i = 0; i < probes; ++i) {
        const double t = 2.0 * T * i / probes;
        const MatrixXd Qt = q.curve.eval(t, T);
        rep.min_abs_det = std::min(rep.min_abs_det, std::abs(Qt.determinant()));
        if (t <= T) {
            const MatrixXd QtT = q.curve.eval(t + T, T);
            rep.max_periodicity_deviation =
                std::max(rep.max_periodicity_deviation, (QtT - Qt * Ad).cwiseAbs().maxCoeff());
        }
    }
    rep.invertible = rep.min_abs_det >= 1e-8;
    rep.periodicity_ok = rep.max_periodicity_deviation <= 1e-10;
    return rep;
}

// Builds the system whose fundamental solution is Q*(t) e^{tR*} by design:
// A(t) = (Q*'(t) + Q*(t) R*) Q*(t)^-1.
inline PeriodicLinearSystem manufacture(QSpec q, const MatrixXd& rstar, double T) {
    const int n = static_cast<int>(rstar.rows());
    if (n <= 0) throw InputError("manufacture: dimension must be positive");
    if (!(T > 0.0)) throw InputError("manufacture: period must be positive");
    detail::require_square(rstar, n, "manufacture R*");
    detail::validate_poly(q.curve, n, /*allow_half=*/true, "QSpec curve");
    if (q.declared_d < 0 || q.declared_d > n) throw InputError("manufacture: declared_d out of range");

    for (int i = 0; i < 512; ++i) {
        const double t = 2.0 * T * i / 512;
        const double det = q.curve.eval(t, T).determinant();
        if (std::abs(det) < 1e-8)
            throw SingularQ("manufacture: |det Q*(" + std::to_string(t) + ")| = " +
                            std::to_string(std::abs(det)) + " below 1e-8");
    }
    return {n, T, ManufacturedBody{std::move(q), rstar}};
}

// A(t) with exact periodic extension: plain bodies reduce t mod T,
// manufactured bodies mod 2T (the curve's natural period). Piecewise
// evaluation at a breakpoint returns the right-limit matrix.
inline MatrixXd evaluate(const PeriodicLinearSystem& sys, double t) {
    return std::visit(
        [&](const auto& body) -> MatrixXd {
            using B = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<B, TrigBody>) {
                return body.poly.eval(la::mod_period(t, sys.T), sys.T);
            } else if constexpr (std::is_same_v<B, PiecewiseBody>) {
                const double tr = la::mod_period(t, sys.T);
                std::size_t i = 0;
                while (i + 2 < body.breakpoints.size() && tr >= body.breakpoints[i + 1]) ++i;
                return body.pieces[i];
            } else {
                const double tr = la::mod_period(t, 2.0 * sys.T);
                const MatrixXd Q = body.qspec.curve.eval(tr, sys.T);
                const MatrixXd Qd = body.qspec.curve.deriv(tr, sys.T);
                if (la::cond2(Q) > 1e8)
                    throw SingularQ("evaluate: Q*(t) condition number above 1e8 at t = " +
                                    std::to_string(tr));
                Eigen::PartialPivLU<MatrixXd> lu(Q.transpose());
                return lu.solve((Qd + Q * body.rstar).transpose()).transpose();
            }
        },
        sys.body);
}

struct PeriodReport {
    double max_deviation = 0.0;
    double threshold = 0.0;
    int probes = 0;
    bool pass = false;
};

// Max |A(t+T) - A(t)| over a probe grid. Exact representations must match
// to 1e-12, manufactured ones to 1e-9.
inline PeriodReport validate_period(const PeriodicLinearSystem& sys, int probes) {
    if (probes < 2) throw InputError("validate_period: need at least 2 probes");
    PeriodReport rep;
    rep.probes = probes;
    rep.threshold = sys.manufactured() ? 1e-9 : 1e-12;
    for (int i = 0; i < probes; ++i) {
        const double t = sys.T * i / probes;
        const double dev = (evaluate(sys, t + sys.T) - evaluate(sys, t)).cwiseAbs().maxCoeff();
        rep.max_deviation = std::max(rep.max_deviation, dev);
    }
    rep.pass = rep.max_deviation <= rep.threshold;
    return rep;
}

// Autonomous field z' = f(z), optionally with an analytic Jacobian and a
// time-dependent perturbation g(t, z).
struct AutonomousField {
    int n = 0;
    std::function<VectorXd(const VectorXd&)> f;
    std::function<MatrixXd(const VectorXd&)> jacobian;                // may be empty
    std::function<VectorXd(double, const VectorXd&)> perturbation;    // may be empty

    // Analytic Jacobian when supplied, central finite differences otherwise.
    MatrixXd jac(const VectorXd& z) const {
        if (jacobian) return jacobian(z);
        return fd_jacobian(z);
    }

    MatrixXd fd_jacobian(const VectorXd& z) const {
        MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) {
            const double h = 6e-6 * std::max(1.0, std::abs(z(j)));
            VectorXd zp = z, zm = z;
            zp(j) += h;
            zm(j) -= h;
            J.col(j) = (f(zp) - f(zm)) / (2.0 * h);
        }
        return J;
    }
};

// Checks a supplied analytic Jacobian against central differences at the
// probe points; relative tolerance 1e-5.
inline bool validate_jacobian(const AutonomousField& field, const std::vector<VectorXd>& probes,
                              double* worst = nullptr) {
    double w = 0.0;
    for (const auto& z : probes) {
        const MatrixXd a = field.jacobian(z);
        const MatrixXd d = field.fd_jacobian(z);
        w = std::max(w, (a - d).norm() / std::max(1.0, a.norm()));
    }
    if (worst) *worst = w;
    return w <= 1e-5;
}

}  // namespace floq::sys

#pragma once

// fields.hpp — autonomous vector fields used as fixtures, plus polynomial
// field construction for file-described systems.
//
// Built-ins:
//   * planar_cycle     (x - y - x(x^2+y^2), x + y - y(x^2+y^2)); the unit
//                      circle is a hyperbolic limit cycle of period 2 pi
//                      with nontrivial multiplier e^{-4 pi};
//   * rigid_rotation   (-y, x); every circle is a (non-isolated) periodic
//                      orbit, the monodromy is the identity;
//   * twisted_cycle    a 3D tube around the unit circle whose normal
//                      dynamics, in a frame rotating by pi per period, is
//                      constant diag(a, b) with a = ln(1/2)/(2 pi) and
//                      b = ln(1/4)/(2 pi), so the normal multipliers are
//                      -1/2 and -1/4 and the A-index is 2.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/systems.hpp"

namespace floq::fields {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline sys::AutonomousField planar_cycle() {
    sys::AutonomousField field;
    field.n = 2;
    field.f = [](const VectorXd& z) {
        const double x = z(0), y = z(1), r2 = x * x + y * y;
        VectorXd out(2);
        out << x - y - x * r2, x + y - y * r2;
        return out;
    };
    field.jacobian = [](const VectorXd& z) {
        const double x = z(0), y = z(1);
        MatrixXd J(2, 2);
        J << 1.0 - 3.0 * x * x - y * y, -1.0 - 2.0 * x * y,
             1.0 - 2.0 * x * y,          1.0 - x * x - 3.0 * y * y;
        return J;
    };
    return field;
}

inline sys::AutonomousField rigid_rotation() {
    sys::AutonomousField field;
    field.n = 2;
    field.f = [](const VectorXd& z) {
        VectorXd out(2);
        out << -z(1), z(0);
        return out;
    };
    field.jacobian = [](const VectorXd&) {
        MatrixXd J(2, 2);
        J << 0.0, -1.0, 1.0, 0.0;
        return J;
    };
    return field;
}

// Normal-dynamics matrix of the twisted tube in cylindrical coordinates
// (rho, Z) at angle theta:
//   B(theta) = (1/2) J + c0 I + c1 [[cos, sin], [sin, -cos]](theta),
// the half-angle rotating frame folded into a 2 pi periodic expression.
namespace detail {

inline constexpr double twisted_a() { return -M_LN2 / (2.0 * M_PI); }        // ln(1/2)/(2 pi)
inline constexpr double twisted_b() { return -2.0 * M_LN2 / (2.0 * M_PI); }  // ln(1/4)/(2 pi)

}  // namespace detail

inline sys::AutonomousField twisted_cycle() {
    const double c0 = 0.5 * (detail::twisted_a() + detail::twisted_b());
    const double c1 = 0.5 * (detail::twisted_a() - detail::twisted_b());

    sys::AutonomousField field;
    field.n = 3;
    field.f = [c0, c1](const VectorXd& z) {
        const double X = z(0), Y = z(1), Z = z(2);
        const double r = std::hypot(X, Y);
        const double ct = X / r, st = Y / r;
        const double rho = r - 1.0;
        const double b11 = c0 + c1 * ct, b12 = -0.5 + c1 * st;
        const double b21 = 0.5 + c1 * st, b22 = c0 - c1 * ct;
        const double u1 = b11 * rho + b12 * Z;
        const double u2 = b21 * rho + b22 * Z;
        VectorXd out(3);
        out << u1 * ct - Y, u1 * st + X, u2;
        return out;
    };
    field.jacobian = [c0, c1](const VectorXd& z) {
        const double X = z(0), Y = z(1), Z = z(2);
        const double r = std::hypot(X, Y);
        const double ct = X / r, st = Y / r;
        const double rho = r - 1.0;
        const double dct_dX = st * st / r, dct_dY = -ct * st / r;
        const double dst_dX = -ct * st / r, dst_dY = ct * ct / r;
        const double b11 = c0 + c1 * ct, b12 = -0.5 + c1 * st;
        const double b21 = 0.5 + c1 * st, b22 = c0 - c1 * ct;
        const double u1 = b11 * rho + b12 * Z;
        const double u2 = b21 * rho + b22 * Z;

        const double du1_dX = c1 * dct_dX * rho + b11 * ct + c1 * dst_dX * Z;
        const double du1_dY = c1 * dct_dY * rho + b11 * st + c1 * dst_dY * Z;
        const double du1_dZ = b12;
        const double du2_dX = c1 * dst_dX * rho + b21 * ct - c1 * dct_dX * Z;
        const double du2_dY = c1 * dst_dY * rho + b21 * st - c1 * dct_dY * Z;
        const double du2_dZ = b22;

        MatrixXd J(3, 3);
        J(0, 0) = du1_dX * ct + u1 * dct_dX;
        J(0, 1) = du1_dY * ct + u1 * dct_dY - 1.0;
        J(0, 2) = du1_dZ * ct;
        J(1, 0) = du1_dX * st + u1 * dst_dX + 1.0;
        J(1, 1) = du1_dY * st + u1 * dst_dY;
        J(1, 2) = du1_dZ * st;
        J(2, 0) = du2_dX;
        J(2, 1) = du2_dY;
        J(2, 2) = du2_dZ;
        return J;
    };
    return field;
}

inline sys::AutonomousField field_by_name(const std::string& name) {
    if (name == "planar_cycle") return planar_cycle();
    if (name == "rigid_rotation") return rigid_rotation();
    if (name == "twisted_cycle") return twisted_cycle();
    throw InputError("unknown built-in field '" + name + "'");
}

// Expected orbit seeds for the built-ins, used by fixtures and the CLI
// defaults.
struct OrbitSeed {
    VectorXd z_guess;
    double T_guess = 0.0;
};

inline OrbitSeed seed_by_name(const std::string& name) {
    OrbitSeed s;
    if (name == "planar_cycle") {
        s.z_guess = VectorXd(2);
        s.z_guess << 1.1, 0.0;
        s.T_guess = 6.2;
    } else if (name == "rigid_rotation") {
        s.z_guess = VectorXd(2);
        s.z_guess << 1.0, 0.0;
        s.T_guess = 2.0 * M_PI;
    } else if (name == "twisted_cycle") {
        s.z_guess = VectorXd(3);
        s.z_guess << 1.02, 0.0, 0.01;
        s.T_guess = 6.2;
    } else {
        throw InputError("unknown built-in field '" + name + "'");
    }
    return s;
}

// Polynomial vector field: component i is a sum of monomials
// coeff * prod_j z_j^{e_j}. Covers the fixture-relevant nonlinearities
// without an expression parser.
struct Monomial {
    double coeff = 0.0;
    std::vector<int> exps;
};

inline sys::AutonomousField polynomial_field(int n, std::vector<std::vector<Monomial>> components) {
    if (static_cast<int>(components.size()) != n)
        throw InputError("polynomial_field: one component list per dimension required");
    for (const auto& comp : components)
        for (const auto& m : comp)
            if (static_cast<int>(m.exps.size()) != n)
                throw InputError("polynomial_field: exponent tuples must have length n");

    sys::AutonomousField field;
    field.n = n;
    field.f = [n, components](const VectorXd& z) {
        VectorXd out = VectorXd::Zero(n);
        for (int i = 0; i < n; ++i)
            for (const auto& m : components[i]) {
                double v = m.coeff;
                for (int j = 0; j < n; ++j)
                    for (int e = 0; e < m.exps[j]; ++e) v *= z(j);
                out(i) += v;
            }
        return out;
    };
    field.jacobian = [n, components](const VectorXd& z) {
        MatrixXd J = MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (const auto& m : components[i])
                for (int j = 0; j < n; ++j) {
                    if (m.exps[j] == 0) continue;
                    double v = m.coeff * m.exps[j];
                    for (int k = 0; k < n; ++k) {
                        const int e = (k == j) ? m.exps[k] - 1 : m.exps[k];
                        for (int q = 0; q < e; ++q) v *= z(k);
                    }
                    J(i, j) += v;
                }
        return J;
    };
    return field;
}

// Perturbation term: coeff * trig(freq * t) * prod_j z_j^{e_j}, trig one of
// {1, cos, sin}.
struct PerturbationTerm {
    double coeff = 0.0;
    std::vector<int> exps;
    int trig = 0;  // 0 none, 1 cos, 2 sin
    double freq = 0.0;
};

inline std::function<VectorXd(double, const VectorXd&)> polynomial_perturbation(
    int n, std::vector<std::vector<PerturbationTerm>> components) {
    if (static_cast<int>(components.size()) != n)
        throw InputError("polynomial_perturbation: one component list per dimension required");
    return [n, components](double t, const VectorXd& z) {
        VectorXd out = VectorXd::Zero(n);
        for (int i = 0; i < n; ++i)
            for (const auto& m : components[i]) {
                double v = m.coeff;
                if (m.trig == 1) v *= std::cos(m.freq * t);
                if (m.trig == 2) v *= std::sin(m.freq * t);
                for (int j = 0; j < n; ++j)
                    for (int e = 0; e < m.exps[j]; ++e) v *= z(j);
                out(i) += v;
            }
        return out;
    };
}

}  // namespace floq::fields

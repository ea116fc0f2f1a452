#pragma once

// periodic_orbit.hpp — periodic orbits of autonomous fields and the first
// variational equation y' = Df(phi(t)) y along them.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>

#include "floq/errors.hpp"
#include "floq/integrate.hpp"
#include "floq/systems.hpp"

namespace floq::orbit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A T-periodic orbit with dense samplers over [0, 2T]. Queries beyond the
// window reduce mod 2T (the orbit closes to within its residual).
struct PeriodicOrbit {
    VectorXd z0;
    double T = 0.0;
    std::shared_ptr<const ode::OdeSolution> path;
    std::function<VectorXd(const VectorXd&)> f;
    double closure_residual = 0.0;

    VectorXd sample(double s) const { return path->eval(la::mod_period(s, 2.0 * T)); }
    VectorXd tangent(double s) const { return f(sample(s)); }
};

inline PeriodicOrbit make_orbit(const sys::AutonomousField& field, const VectorXd& z0, double T,
                                double tol = 1e-12) {
    if (!(T > 0.0)) throw InputError("make_orbit: period must be positive");
    const ode::Rhs rhs = [&field](double, const VectorXd& z) { return field.f(z); };
    auto path = std::make_shared<ode::OdeSolution>(
        ode::integrate_ode(rhs, z0, 0.0, 2.0 * T, tol, {T, 2.0 * T}, T));

    PeriodicOrbit orb;
    orb.z0 = z0;
    orb.T = T;
    orb.path = path;
    orb.f = field.f;
    orb.closure_residual = (path->eval(T) - z0).norm();
    if (orb.closure_residual > 1e-8 * (1.0 + z0.norm()))
        throw NumericalError("make_orbit: closure residual " + std::to_string(orb.closure_residual) +
                             " too large for a periodic orbit");
    double min_speed = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 256; ++i) min_speed = std::min(min_speed, orb.tangent(T * i / 256.0).norm());
    if (!(min_speed >= 1e-8))
        throw NumericalError("make_orbit: orbit is numerically stationary (min |phi'| = " +
                             std::to_string(min_speed) + ")");
    return orb;
}

}  // namespace floq::orbit

namespace floq::ode {

// Principal solution of the first variational equation along the orbit,
// integrated jointly with the orbit itself so both share step control.
inline MatrixSolution variational_solution(const sys::AutonomousField& field,
                                           const orbit::PeriodicOrbit& orb, double tol) {
    if (!(tol >= 1e-14 && tol <= 1e-4))
        throw InputError("variational_solution: tol must lie in [1e-14, 1e-4]");
    if (orb.closure_residual > 1e-8 * (1.0 + orb.z0.norm()))
        throw InputError("variational_solution: orbit closure residual too large");

    const int n = field.n;
    const double T = orb.T;
    const Rhs rhs = [&field, n](double, const VectorXd& state) -> VectorXd {
        const VectorXd z = state.head(n);
        const Eigen::Map<const MatrixXd> Y(state.data() + n, n, n);
        const MatrixXd dY = field.jac(z) * Y;
        VectorXd out(n + n * n);
        out.head(n) = field.f(z);
        out.tail(n * n) = Eigen::Map<const VectorXd>(dY.data(), n * n);
        return out;
    };
    VectorXd y0(n + n * n);
    y0.head(n) = orb.z0;
    y0.tail(n * n) = Eigen::Map<const VectorXd>(MatrixXd::Identity(n, n).eval().data(), n * n);

    auto dense = std::make_shared<OdeSolution>(integrate_ode(rhs, y0, 0.0, 2.0 * T, tol, {T, 2.0 * T}, T));

    MatrixSolution sol;
    sol.n = n;
    sol.T = T;
    sol.dense_ = dense;
    sol.flat_offset = n;
    sol.stats = dense->stats;
    sol.stats.tol = tol;
    for (std::size_t i = 0; i < dense->t.size(); ++i) {
        sol.t.push_back(dense->t[i]);
        sol.phi.push_back(Eigen::Map<const MatrixXd>(dense->y[i].data() + n, n, n));
        sol.dphi.push_back(Eigen::Map<const MatrixXd>(dense->dy[i].data() + n, n, n));
    }
    detail::validate_solution(
        sol,
        [&field, &dense, n](double s) { return field.jac(dense->eval(s).head(n)).trace(); },
        false, 0.0);
    return sol;
}

}  // namespace floq::ode

#pragma once

// Shared in-code fixtures: the manufactured rotation family with closed-form
// Floquet data, used as oracles across the test suites.

#include <Eigen/Dense>

#include <cmath>

#include "floq/systems.hpp"

namespace testfx {

inline Eigen::MatrixXd rotation_w() {
    Eigen::MatrixXd w(2, 2);
    w << 0, -M_PI, M_PI, 0;
    return w;
}

// Q*(t) = exp(t W) = [[cos pi t, -sin pi t], [sin pi t, cos pi t]], a
// half-frequency trig curve with Q*(t+1) = -Q*(t).
inline floq::sys::QSpec rotation_qspec() {
    floq::sys::QSpec q;
    q.declared_d = 2;
    q.curve.constant = Eigen::MatrixXd::Zero(2, 2);
    floq::sys::TrigTerm t;
    t.k = 1;
    t.C = Eigen::MatrixXd::Identity(2, 2);
    t.S = (Eigen::MatrixXd(2, 2) << 0, -1, 1, 0).finished();
    q.curve.half.push_back(std::move(t));
    return q;
}

inline Eigen::MatrixXd qstar_closed_form(double t) {
    Eigen::MatrixXd q(2, 2);
    q << std::cos(M_PI * t), -std::sin(M_PI * t), std::sin(M_PI * t), std::cos(M_PI * t);
    return q;
}

// Monodromy diag(-1, -2), A-index 2.
inline floq::sys::PeriodicLinearSystem manufactured_d2() {
    Eigen::MatrixXd rstar(2, 2);
    rstar << 0, 0, 0, std::log(2.0);
    return floq::sys::manufacture(rotation_qspec(), rstar, 1.0);
}

// Monodromy -I2, A-index 0 (the negative pair).
inline floq::sys::PeriodicLinearSystem manufactured_neg_identity() {
    return floq::sys::manufacture(rotation_qspec(), Eigen::MatrixXd::Zero(2, 2), 1.0);
}

}  // namespace testfx

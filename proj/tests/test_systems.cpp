#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "fixtures.hpp"
#include "floq/fields.hpp"
#include "floq/systems.hpp"

using namespace floq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("evaluate: the three body kinds") {
    SUBCASE("constant body returns A0 everywhere") {
        MatrixXd a0(2, 2);
        a0 << 0, 1, -1, 0;
        const auto system = sys::make_constant_system(1.0, a0);
        for (double t : {0.0, 0.37, 5.0, -2.25}) CHECK((sys::evaluate(system, t) - a0).norm() == 0.0);
    }
    SUBCASE("trig body: cos(2 pi t) I vanishes at t = 1/4") {
        sys::TrigMatrixPolynomial p;
        p.constant = MatrixXd::Zero(2, 2);
        p.base.push_back({1, MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)});
        const auto system = sys::make_trig_system(2, 1.0, std::move(p));
        CHECK(sys::evaluate(system, 0.25).norm() <= 1e-15);
        CHECK((sys::evaluate(system, 0.0) - MatrixXd::Identity(2, 2)).norm() <= 1e-15);
    }
    SUBCASE("manufactured body at t = 0 equals W + R*") {
        const auto system = testfx::manufactured_d2();
        MatrixXd expect = testfx::rotation_w();
        expect(1, 1) += std::log(2.0);
        CHECK((sys::evaluate(system, 0.0) - expect).norm() <= 1e-14);
    }
    SUBCASE("piecewise evaluation returns the right-limit at breakpoints") {
        MatrixXd a1 = MatrixXd::Identity(2, 2), a2 = 2.0 * MatrixXd::Identity(2, 2);
        const auto system = sys::make_piecewise_system(2, 1.0, {0.0, 0.4, 1.0}, {a1, a2});
        CHECK((sys::evaluate(system, 0.4) - a2).norm() == 0.0);
        CHECK((sys::evaluate(system, 0.0) - a1).norm() == 0.0);
        CHECK((sys::evaluate(system, 1.0) - a1).norm() == 0.0);  // wraps to t = 0
    }
    SUBCASE("evaluate is pure") {
        const auto system = testfx::manufactured_d2();
        const MatrixXd a = sys::evaluate(system, 0.731);
        const MatrixXd b = sys::evaluate(system, 0.731);
        CHECK(a == b);
    }
}

TEST_CASE("manufacture: construction and closed forms") {
    SUBCASE("Q* = I gives the constant system A = R*") {
        sys::QSpec q;
        q.curve.constant = MatrixXd::Identity(2, 2);
        MatrixXd rstar(2, 2);
        rstar << 0.3, -1.0, 0.2, 0.7;
        const auto system = sys::manufacture(q, rstar, 1.0);
        for (double t : {0.0, 0.3, 0.9}) CHECK((sys::evaluate(system, t) - rstar).norm() <= 1e-13);
    }
    SUBCASE("Q* = exp(tW), R* = 0 gives the constant system A = W") {
        const auto system = testfx::manufactured_neg_identity();
        for (double t : {0.0, 0.21, 0.77})
            CHECK((sys::evaluate(system, t) - testfx::rotation_w()).norm() <= 1e-12);
    }
    SUBCASE("singular curves are rejected") {
        sys::QSpec q;
        q.curve.constant = MatrixXd::Zero(2, 2);
        // cos(pi t) I is singular at t = 1/2
        q.curve.half.push_back({1, MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)});
        CHECK_THROWS_AS((void)sys::manufacture(q, MatrixXd::Zero(2, 2), 1.0), SingularQ);
    }
    SUBCASE("half-frequency terms are rejected outside QSpec") {
        sys::TrigMatrixPolynomial p;
        p.constant = MatrixXd::Zero(2, 2);
        p.half.push_back({1, MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)});
        CHECK_THROWS_AS((void)sys::make_trig_system(2, 1.0, std::move(p)), InputError);
    }
    SUBCASE("manufactured defining residual on a fine grid") {
        const auto system = testfx::manufactured_d2();
        const auto& body = std::get<sys::ManufacturedBody>(system.body);
        double worst = 0.0;
        for (int i = 0; i < 256; ++i) {
            const double t = 2.0 * i / 256.0;
            const MatrixXd q = body.qspec.curve.eval(t, 1.0);
            const MatrixXd qd = body.qspec.curve.deriv(t, 1.0);
            const MatrixXd a = sys::evaluate(system, t);
            worst = std::max(worst, (qd + q * body.rstar - a * q).norm());
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("validate_period") {
    SUBCASE("constant system passes with zero deviation") {
        const auto rep = sys::validate_period(sys::make_constant_system(1.0, MatrixXd::Identity(2, 2)), 16);
        CHECK(rep.max_deviation == 0.0);
        CHECK(rep.pass);
    }
    SUBCASE("base-frequency trig system is exactly periodic") {
        sys::TrigMatrixPolynomial p;
        p.constant = MatrixXd::Zero(2, 2);
        p.base.push_back({2, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)});
        const auto rep = sys::validate_period(sys::make_trig_system(2, 1.0, std::move(p)), 32);
        CHECK(rep.pass);
        CHECK(rep.threshold == 1e-12);
    }
    SUBCASE("declared d = 0 with an antiperiodic half term fails") {
        sys::QSpec q;
        q.declared_d = 0;
        q.curve.constant = MatrixXd::Identity(2, 2);
        MatrixXd e = MatrixXd::Zero(2, 2);
        e(0, 0) = 0.3;
        q.curve.half.push_back({1, e, MatrixXd::Zero(2, 2)});  // cos(pi t / T) E term
        const auto qrep = sys::validate_qspec(q, 2, 1.0);
        CHECK_FALSE(qrep.periodicity_ok);
        CHECK(qrep.invertible);
        const auto system = sys::manufacture(q, MatrixXd::Zero(2, 2), 1.0);
        const auto rep = sys::validate_period(system, 32);
        CHECK_FALSE(rep.pass);
        CHECK(rep.max_deviation > 1e-3);
    }
    SUBCASE("the declared relation of the rotation curve validates") {
        const auto qrep = sys::validate_qspec(testfx::rotation_qspec(), 2, 1.0);
        CHECK(qrep.ok());
        CHECK(qrep.min_abs_det >= 0.99);
    }
    SUBCASE("probe precondition") {
        CHECK_THROWS_AS(
            (void)sys::validate_period(sys::make_constant_system(1.0, MatrixXd::Identity(2, 2)), 1),
            InputError);
    }
}

TEST_CASE("construction validation") {
    CHECK_THROWS_AS((void)sys::make_constant_system(-1.0, MatrixXd::Identity(2, 2)), InputError);
    CHECK_THROWS_AS((void)sys::make_piecewise_system(2, 1.0, {0.0, 1.0, 0.5},
                                                     {MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)}),
                    InputError);
    CHECK_THROWS_AS((void)sys::make_piecewise_system(2, 1.0, {0.0, 0.5},
                                                     {MatrixXd::Identity(3, 3)}),
                    InputError);
    MatrixXd bad = MatrixXd::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS((void)sys::make_constant_system(1.0, bad), InputError);
}

TEST_CASE("autonomous fields: analytic Jacobians match finite differences") {
    std::vector<VectorXd> planar_probes, twisted_probes;
    for (double a : {0.2, 1.7, 3.9}) {
        VectorXd z2(2);
        z2 << 1.02 * std::cos(a), 1.02 * std::sin(a);
        planar_probes.push_back(z2);
        VectorXd z3(3);
        z3 << 0.97 * std::cos(a), 0.97 * std::sin(a), 0.05;
        twisted_probes.push_back(z3);
    }
    double worst = 0.0;
    CHECK(sys::validate_jacobian(fields::planar_cycle(), planar_probes, &worst));
    CHECK(sys::validate_jacobian(fields::rigid_rotation(), planar_probes));
    CHECK(sys::validate_jacobian(fields::twisted_cycle(), twisted_probes, &worst));
}

TEST_CASE("polynomial fields reproduce the planar built-in") {
    // f1 = x - y - x^3 - x y^2, f2 = x + y - x^2 y - y^3
    std::vector<std::vector<fields::Monomial>> comps(2);
    comps[0] = {{1.0, {1, 0}}, {-1.0, {0, 1}}, {-1.0, {3, 0}}, {-1.0, {1, 2}}};
    comps[1] = {{1.0, {1, 0}}, {1.0, {0, 1}}, {-1.0, {2, 1}}, {-1.0, {0, 3}}};
    const auto poly = fields::polynomial_field(2, comps);
    const auto builtin = fields::planar_cycle();
    for (double a : {0.1, 2.2, 4.4}) {
        VectorXd z(2);
        z << 1.3 * std::cos(a), 0.8 * std::sin(a);
        CHECK((poly.f(z) - builtin.f(z)).norm() <= 1e-14);
        CHECK((poly.jacobian(z) - builtin.jacobian(z)).norm() <= 1e-12);
    }
}

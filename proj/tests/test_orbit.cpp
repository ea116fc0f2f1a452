#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "floq/fields.hpp"
#include "floq/orbit.hpp"

using namespace floq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

orbit::PeriodicOrbit planar_orbit() {
    VectorXd zg(2);
    zg << 1.1, 0.0;
    return orbit::refine_orbit(fields::planar_cycle(), zg, 6.2);
}

}  // namespace

TEST_CASE("refine_orbit") {
    SUBCASE("planar limit cycle from a nearby guess") {
        const auto orb = planar_orbit();
        CHECK(std::abs(orb.T - 2.0 * M_PI) <= 1e-8);
        CHECK(std::abs(orb.z0.norm() - 1.0) <= 1e-8);
        CHECK(orb.closure_residual <= 1e-9);
    }
    SUBCASE("rigid rotation closes immediately") {
        VectorXd zg(2);
        zg << 1.0, 0.0;
        const auto orb = orbit::refine_orbit(fields::rigid_rotation(), zg, 2.0 * M_PI);
        CHECK(std::abs(orb.T - 2.0 * M_PI) <= 1e-10);
        CHECK((orb.z0 - zg).norm() <= 1e-12);
    }
    SUBCASE("equilibrium guess degenerates the section") {
        CHECK_THROWS_AS((void)orbit::refine_orbit(fields::planar_cycle(), VectorXd::Zero(2), 6.2),
                        DegenerateSection);
    }
    SUBCASE("a hopeless period guess finds no return") {
        VectorXd zg(2);
        zg << 1.1, 0.0;
        CHECK_THROWS_AS((void)orbit::refine_orbit(fields::planar_cycle(), zg, 1.0), NoConvergence);
    }
}

TEST_CASE("q0_index") {
    CHECK(orbit::q0_index(MatrixXd::Identity(3, 3), VectorXd::Unit(3, 0)) == 0);
    MatrixXd j2(2, 2);
    j2 << 1, 1, 0, 1;
    CHECK(orbit::q0_index(j2, VectorXd::Unit(2, 0)) == 1);
    MatrixXd j3 = MatrixXd::Identity(3, 3);
    j3(0, 1) = 1;
    j3(1, 2) = 1;
    CHECK(orbit::q0_index(j3, VectorXd::Unit(3, 0)) == 2);
    SUBCASE("planar monodromy: the anchor is not in range(M - I)") {
        const auto field = fields::planar_cycle();
        const auto orb = planar_orbit();
        const auto psi = ode::variational_solution(field, orb, 1e-12);
        CHECK(orbit::q0_index(psi.monodromy(), field.f(orb.z0)) == 0);
    }
    SUBCASE("non-eigenvector anchors are rejected") {
        MatrixXd m(2, 2);
        m << 2, 0, 0, 3;
        CHECK_THROWS_AS((void)orbit::q0_index(m, VectorXd::Unit(2, 0)), AnchorNotEigenvector);
    }
}

TEST_CASE("build_frame on the planar limit cycle") {
    const auto field = fields::planar_cycle();
    const auto orb = planar_orbit();
    const auto frame = orbit::build_frame(field, orb, 1e-12);

    CHECK(frame.d == 0);
    CHECK(frame.q0 == 0);
    CHECK(frame.n0 == 1);
    REQUIRE(frame.H1.rows() == 1);
    CHECK(std::abs(frame.H1(0, 0) + 2.0) <= 1e-4);
    CHECK(frame.H2.rows() == 0);
    CHECK(frame.L.cwiseAbs().maxCoeff() <= 1e-12);

    SUBCASE("frame diagnostics meet their contracts") {
        CHECK(frame.diagnostics.first_column_deviation <= 1e-6);
        CHECK(frame.diagnostics.u_antiperiodicity <= 1e-6);
        CHECK(frame.diagnostics.eta_xi_relations <= 1e-8);
        CHECK(frame.diagnostics.identity11_residual <= 1e-5);
        CHECK(frame.diagnostics.eta_periodicity <= 1e-6);
        CHECK(frame.diagnostics.xi_periodicity <= 1e-6);
    }
    SUBCASE("H commutes with the signature exactly") {
        const MatrixXd H = frame.H();
        const MatrixXd Ad = frame.signature_reduced();
        CHECK((H * Ad - Ad * H).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("transformed_rhs at h = 0 is (1, 0, 0)") {
        for (double s : {0.0, 1.3, 4.4}) {
            const auto r = orbit::transformed_rhs(frame, 0.0, s, VectorXd::Zero(1), VectorXd(0));
            CHECK(r.sdot == 1.0);
            CHECK(r.lambda0 == 0.0);
            CHECK(r.vdot.cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("the linearization matches H1") {
        const double delta = 1e-4;
        const auto p = orbit::transformed_rhs(frame, 0.0, 0.7, VectorXd::Constant(1, delta), VectorXd(0));
        const auto m = orbit::transformed_rhs(frame, 0.0, 0.7, VectorXd::Constant(1, -delta), VectorXd(0));
        const double slope = (p.vdot(0) - m.vdot(0)) / (2.0 * delta);
        CHECK(std::abs(slope - frame.H1(0, 0)) <= 1e-6);
        // the remainder is quadratic in delta with an order-one curvature
        CHECK(std::abs(p.vdot(0) - frame.H1(0, 0) * delta) <= 1e-7);
    }
    SUBCASE("properties verify") {
        const auto props = orbit::verify_properties(frame);
        CHECK(props.all_pass);
    }
    SUBCASE("corrupting H2-less H1 breaks property (i)") {
        auto broken = frame;
        broken.H1(0, 0) = -broken.H1(0, 0);
        const auto props = orbit::verify_properties(broken);
        bool found = false;
        for (const auto& c : props.checks)
            if (c.name.find("(i)") == 0) {
                found = true;
                CHECK_FALSE(c.pass);
                CHECK(c.deviation >= 1e-2);
            }
        CHECK(found);
    }
    SUBCASE("roundtrip from the orbit itself and from a transversal offset") {
        const auto on_orbit = orbit::roundtrip_check(frame, 0.0, VectorXd::Zero(1), VectorXd(0), orb.T);
        CHECK(on_orbit.max_deviation <= 1e-8);
        const auto off =
            orbit::roundtrip_check(frame, 0.0, VectorXd::Constant(1, 1e-2), VectorXd(0), orb.T);
        CHECK(off.max_deviation <= 1e-5);
        CHECK(off.pass);
    }
    SUBCASE("the validity tube is enforced") {
        // solve det([phi' + U' h | U]) = 0 for the degenerate offset at s = 0
        const MatrixXd U = frame.U(0.0);
        const MatrixXd Ud = frame.U_deriv(0.0);
        const VectorXd pd = orb.tangent(0.0);
        MatrixXd a(2, 2), b(2, 2);
        a.col(0) = pd;
        a.col(1) = U.col(0);
        b.col(0) = Ud.col(0);
        b.col(1) = U.col(0);
        const double h_star = -a.determinant() / b.determinant();
        CHECK_THROWS_AS((void)orbit::transformed_rhs(frame, 0.0, 0.0,
                                                     VectorXd::Constant(1, h_star), VectorXd(0)),
                        FrameDegenerate);
    }
}

TEST_CASE("build_frame on the twisted cycle") {
    const auto field = fields::twisted_cycle();
    const auto seed = fields::seed_by_name("twisted_cycle");
    const auto orb = orbit::refine_orbit(field, seed.z_guess, seed.T_guess);
    const auto frame = orbit::build_frame(field, orb, 1e-12);

    CHECK(frame.d == 2);
    CHECK(frame.q0 == 0);
    CHECK(frame.H1.rows() == 0);
    REQUIRE(frame.H2.rows() == 2);
    SUBCASE("normal contraction rates") {
        Eigen::EigenSolver<MatrixXd> es(frame.H2);
        std::vector<double> re;
        for (Eigen::Index i = 0; i < 2; ++i) re.push_back(es.eigenvalues()(i).real());
        const double dev = la::multiset_distance(
            re, std::vector<double>{std::log(0.5) / orb.T, std::log(0.25) / orb.T});
        CHECK(dev <= 1e-5);
    }
    SUBCASE("U is T-antiperiodic") { CHECK(frame.diagnostics.u_antiperiodicity <= 1e-6); }
    SUBCASE("sign-flip properties") {
        const auto props = orbit::verify_properties(frame);
        CHECK(props.all_pass);
    }
    SUBCASE("roundtrip with transversal offsets in w") {
        const auto rt =
            orbit::roundtrip_check(frame, 0.0, VectorXd(0), VectorXd::Constant(2, 5e-3), orb.T, 1e-4);
        CHECK(rt.pass);
    }
}

TEST_CASE("build_frame on the rigid rotation circle") {
    const auto field = fields::rigid_rotation();
    VectorXd zg(2);
    zg << 1.0, 0.0;
    const auto orb = orbit::refine_orbit(field, zg, 2.0 * M_PI);
    const auto frame = orbit::build_frame(field, orb, 1e-12);
    CHECK(frame.d == 0);
    CHECK(frame.q0 == 0);
    CHECK(frame.H1.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(frame.L.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("perturbation handling") {
    auto field = fields::planar_cycle();
    const double eps = 1e-3;
    field.perturbation = [eps](double t, const VectorXd&) {
        VectorXd g(2);
        g << eps * std::cos(t), 0.0;
        return g;
    };
    VectorXd zg(2);
    zg << 1.1, 0.0;
    const auto orb = orbit::refine_orbit(field, zg, 6.2);
    const auto frame = orbit::build_frame(field, orb, 1e-12);

    SUBCASE("perturbed properties including the C bound") {
        const auto props = orbit::verify_properties(frame);
        CHECK(props.all_pass);
        CHECK(props.C_estimate > 0.0);
    }
    SUBCASE("the tilde components scale with |g|") {
        const auto r = orbit::transformed_rhs(frame, 0.4, 1.2, VectorXd::Constant(1, 1e-3), VectorXd(0));
        const double gnorm = eps * std::abs(std::cos(0.4));
        CHECK(std::abs(r.lambda0_tilde) <= 10.0 * gnorm);
        CHECK(r.lambda1_tilde.cwiseAbs().maxCoeff() <= 10.0 * gnorm);
    }
    SUBCASE("roundtrip under perturbation") {
        const auto rt =
            orbit::roundtrip_check(frame, 0.0, VectorXd::Constant(1, 1e-2), VectorXd(0), orb.T, 1e-4);
        CHECK(rt.pass);
    }
}

TEST_CASE("d and q0 are invariant under rescaling the field") {
    auto field = fields::planar_cycle();
    auto scaled = field;
    scaled.f = [field](const VectorXd& z) { return VectorXd(2.0 * field.f(z)); };
    scaled.jacobian = [field](const VectorXd& z) { return MatrixXd(2.0 * field.jacobian(z)); };

    VectorXd zg(2);
    zg << 1.1, 0.0;
    const auto orb = orbit::refine_orbit(field, zg, 6.2);
    const auto orb2 = orbit::refine_orbit(scaled, zg, 3.1);
    CHECK(std::abs(orb2.T - orb.T / 2.0) <= 1e-8);

    const auto f1 = orbit::build_frame(field, orb, 1e-12);
    const auto f2 = orbit::build_frame(scaled, orb2, 1e-12);
    CHECK(f1.d == f2.d);
    CHECK(f1.q0 == f2.q0);
}

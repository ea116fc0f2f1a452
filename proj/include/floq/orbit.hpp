#pragma once

// orbit.hpp — simplifying moving-frame coordinates around periodic orbits
// of autonomous fields.
//
// Around a T-periodic orbit phi with variational solution Psi, the anchored
// Floquet form (Jordan basis anchored at b1 = phi'(0)) yields Q with first
// column phi'(t). U(t) collects the last n-1 columns, so
//   U(t+T) = U(t) [I_(n-d-1) (+) (-I_d)],
// and the change of variables z = phi(s) + U(s) [v; w] transforms
// z' = f(z) + g(t,z) into
//   s' = 1 + L v + Lam0 + Lam0~,
//   v' = H1 v + Lam1 + Lam1~,
//   w' = H2 w + Lam2 + Lam2~,
// where H1 = R0^{1,1} (+) R1, H2 = R2, and L sits in the first row of R.
// The projections come straight from Q^-1: eta is the normalized first row
// (orthogonal to U, positively aligned with phi'), xi collects rows 2..n
// (xi_j^T U_k = delta_jk, xi_j^T phi' = 0).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/fields.hpp"
#include "floq/floquet.hpp"
#include "floq/integrate.hpp"
#include "floq/linalg.hpp"
#include "floq/periodic_orbit.hpp"
#include "floq/spectral.hpp"
#include "floq/systems.hpp"

namespace floq::orbit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Largest q >= 0 with (M - I)^q x = v1 solvable, v1 an eigenvector of M for
// eigenvalue 1.
inline int q0_index(const MatrixXd& M, const VectorXd& v1) {
    const double res = (M * v1 - v1).norm();
    if (res > 1e-7 * std::max(1.0, M.norm()) * v1.norm())
        throw AnchorNotEigenvector("q0_index: vector has eigen-residual " + std::to_string(res) +
                                   " for eigenvalue 1");
    return spectral::anchor_depth(M, v1);
}

// Newton refinement of a periodic orbit on the Poincare section through
// z_guess orthogonal to f(z_guess). Each iteration integrates the flow and
// the variational equation jointly, locates the first upward section
// crossing near the current period estimate, and applies one Newton step to
// the return map within the section.
inline PeriodicOrbit refine_orbit(const sys::AutonomousField& field, const VectorXd& z_guess,
                                  double T_guess, double tol = 1e-12) {
    const int n = field.n;
    if (!(T_guess > 0.0)) throw InputError("refine_orbit: T_guess must be positive");
    const VectorXd f0 = field.f(z_guess);
    if (f0.norm() <= 1e-8 * (1.0 + z_guess.norm()))
        throw DegenerateSection("refine_orbit: f vanishes at the section anchor (|f| = " +
                                std::to_string(f0.norm()) + ")");
    const VectorXd c = f0.normalized();
    const VectorXd p = z_guess;

    // orthonormal basis of the section plane
    MatrixXd first(n, 1);
    first.col(0) = c;
    Eigen::HouseholderQR<MatrixXd> qr(first);
    const MatrixXd Qfull = qr.householderQ() * MatrixXd::Identity(n, n);
    const MatrixXd V = Qfull.rightCols(n - 1);

    const double itol = std::clamp(tol, 1e-13, 1e-10);
    const ode::Rhs rhs = [&field, n](double, const VectorXd& state) -> VectorXd {
        const VectorXd z = state.head(n);
        const Eigen::Map<const MatrixXd> Y(state.data() + n, n, n);
        const MatrixXd dY = field.jac(z) * Y;
        VectorXd out(n + n * n);
        out.head(n) = field.f(z);
        out.tail(n * n) = Eigen::Map<const VectorXd>(dY.data(), n * n);
        return out;
    };

    VectorXd z = z_guess;
    double T_cur = T_guess;
    for (int iter = 0; iter < 50; ++iter) {
        VectorXd y0(n + n * n);
        y0.head(n) = z;
        y0.tail(n * n) = Eigen::Map<const VectorXd>(MatrixXd::Identity(n, n).eval().data(), n * n);
        const auto sol = ode::integrate_ode(rhs, y0, 0.0, 1.75 * T_cur, itol, {}, T_cur);

        const auto sigma = [&](double t) { return c.dot(sol.eval(t).head(n) - p); };
        double lo = -1.0, hi = -1.0;
        for (std::size_t i = 0; i + 1 < sol.t.size(); ++i) {
            if (sol.t[i] < 0.25 * T_cur) continue;
            if (sigma(sol.t[i]) <= 0.0 && sigma(sol.t[i + 1]) > 0.0) {
                lo = sol.t[i];
                hi = sol.t[i + 1];
                break;
            }
        }
        if (lo < 0.0)
            throw NoConvergence("refine_orbit: no section return found in [0.25, 1.75] x T near T = " +
                                std::to_string(T_cur));
        for (int b = 0; b < 80 && (hi - lo) > 1e-16 * T_cur; ++b) {
            const double mid = 0.5 * (lo + hi);
            (sigma(mid) <= 0.0 ? lo : hi) = mid;
        }
        const double t_star = 0.5 * (lo + hi);

        const VectorXd state = sol.eval(t_star);
        const VectorXd zT = state.head(n);
        const Eigen::Map<const MatrixXd> Mret(state.data() + n, n, n);
        const double residual = (zT - z).norm();
        if (residual <= 1e-10 * (1.0 + z.norm())) {
            return make_orbit(field, z, t_star, tol);
        }

        const VectorXd fT = field.f(zT);
        const double cf = c.dot(fT);
        if (std::abs(cf) < 1e-10)
            throw NoConvergence("refine_orbit: return crossing tangent to the section");
        const Eigen::RowVectorXd dtau = -(c.transpose() * Mret) / cf;
        const MatrixXd DP = Mret + fT * dtau;
        const MatrixXd Jm = V.transpose() * (DP - MatrixXd::Identity(n, n)) * V;
        const VectorXd F = V.transpose() * (zT - z);
        const VectorXd delta = Jm.partialPivLu().solve(-F);
        if (!delta.allFinite())
            throw NoConvergence("refine_orbit: singular Newton system on the section");
        z += V * delta;
        T_cur = t_star;
    }
    throw NoConvergence("refine_orbit: no convergence after 50 Newton iterations");
}

struct FrameDiagnostics {
    double first_column_deviation = 0.0;  // first column of Q vs phi', relative
    double u_antiperiodicity = 0.0;       // U(s+T) vs U(s) A_d, relative
    double eta_xi_relations = 0.0;        // worst of the defining relations
    double identity11_residual = 0.0;     // U' + phi' L* + U H - Df U, dense-route U'
    double eta_periodicity = 0.0;         // eta(s+T) vs eta(s)
    double xi_periodicity = 0.0;          // xi(s+T) vs xi(s) A_d
};

class OrbitFrame {
  public:
    int n = 0;
    int d = 0;
    int q0 = 0;
    int n0 = 1;       // q0 + 1
    MatrixXd H1;      // (n-d-1) x (n-d-1)
    MatrixXd H2;      // d x d
    VectorXd L;       // length n-d-1 (row of the s' equation)
    VectorXd Lstar;   // length n-1, [L | 0 ... 0]
    floquet::FloquetForm form;  // anchored form of the variational equation
    PeriodicOrbit orbit;
    sys::AutonomousField field;
    FrameDiagnostics diagnostics;

    MatrixXd H() const {
        const int m = n - 1;
        MatrixXd h = MatrixXd::Zero(m, m);
        h.topLeftCorner(H1.rows(), H1.cols()) = H1;
        h.bottomRightCorner(H2.rows(), H2.cols()) = H2;
        return h;
    }

    // signature acting on the frame columns: I_(n-d-1) (+) (-I_d)
    MatrixXd signature_reduced() const { return sys::signature_matrix(n - 1, d); }

    MatrixXd U(double s) const { return form.Q(s).rightCols(n - 1); }

    // analytic frame derivative from Q' = Df(phi) Q - Q R
    MatrixXd U_deriv(double s) const {
        const MatrixXd Q = form.Q(s);
        const MatrixXd Qdot = field.jac(orbit.sample(s)) * Q - Q * form.R;
        return Qdot.rightCols(n - 1);
    }

    // dense-output frame derivative, independent of the identity above
    MatrixXd U_deriv_dense(double s) const { return form.Q_deriv(s).rightCols(n - 1); }

    VectorXd eta(double s) const {
        const MatrixXd Qinv = form.Q(s).partialPivLu().inverse();
        VectorXd v = Qinv.row(0).transpose();
        v.normalize();
        if (v.dot(orbit.tangent(s)) < 0.0) v = -v;
        return v;
    }

    MatrixXd xi(double s) const {
        const MatrixXd Qinv = form.Q(s).partialPivLu().inverse();
        return Qinv.bottomRows(n - 1).transpose();
    }
};

struct TransformedRhs {
    double sdot = 0.0;
    VectorXd vdot, wdot;
    double Lv = 0.0;             // L . v
    double lambda0 = 0.0;        // Lam0(s, v, w)
    double lambda0_tilde = 0.0;  // Lam0~(t, s, v, w)
    VectorXd lambda1, lambda2;
    VectorXd lambda1_tilde, lambda2_tilde;
};

// The transformed right-hand side at (t, s, v, w), with the split into
// linear parts and the Lam / Lam~ components. The perturbation g is taken
// from the frame's field when present; t only matters then.
inline TransformedRhs transformed_rhs(const OrbitFrame& fr, double t, double s, const VectorXd& v,
                                      const VectorXd& w) {
    const int n = fr.n;
    const int nv = n - fr.d - 1;
    if (v.size() != nv || w.size() != fr.d)
        throw InputError("transformed_rhs: (v, w) must have sizes (n-d-1, d)");
    VectorXd h(n - 1);
    h << v, w;

    const MatrixXd Q = fr.form.Q(s);
    const VectorXd phi = fr.orbit.sample(s);
    const VectorXd phidot = fr.field.f(phi);
    const MatrixXd Qdot = fr.field.jac(phi) * Q - Q * fr.form.R;
    const MatrixXd U = Q.rightCols(n - 1);
    const MatrixXd Udot = Qdot.rightCols(n - 1);

    const VectorXd Udot_h = Udot * h;
    const VectorXd denomvec = phidot + Udot_h;
    MatrixXd coef(n, n);
    coef.col(0) = denomvec;
    coef.rightCols(n - 1) = U;
    if (la::cond2(coef) > 1e8)
        throw FrameDegenerate("transformed_rhs: frame coefficient matrix condition above 1e8 (|h| = " +
                              std::to_string(h.norm()) + " outside the validity tube)");

    const MatrixXd Qinv = Q.partialPivLu().inverse();
    VectorXd eta = Qinv.row(0).transpose();
    eta.normalize();
    if (eta.dot(phidot) < 0.0) eta = -eta;
    const MatrixXd xiT = Qinv.bottomRows(n - 1);  // (n-1) x n, rows are xi_j^T

    const VectorXd z = phi + U * h;
    const VectorXd fz = fr.field.f(z);
    const bool has_g = static_cast<bool>(fr.field.perturbation);
    const VectorXd gz = has_g ? fr.field.perturbation(t, z) : VectorXd::Zero(n);

    const double eden = eta.dot(denomvec);
    const double F0 = eta.dot(fz) / eden;
    const double l0t = has_g ? eta.dot(gz) / eden : 0.0;
    const double Lsh = fr.Lstar.dot(h);

    TransformedRhs out;
    out.sdot = F0 + l0t;
    out.Lv = Lsh;
    out.lambda0 = F0 - 1.0 - Lsh;
    out.lambda0_tilde = l0t;

    const VectorXd G = xiT * (fz - Udot_h * F0);
    const VectorXd Gt = has_g ? VectorXd(xiT * (gz - Udot_h * l0t)) : VectorXd::Zero(n - 1);
    const VectorXd Hh = fr.H() * h;
    const VectorXd lam12 = G - Hh;
    const VectorXd hdot = G + Gt;

    out.vdot = hdot.head(nv);
    out.wdot = hdot.tail(fr.d);
    out.lambda1 = lam12.head(nv);
    out.lambda2 = lam12.tail(fr.d);
    out.lambda1_tilde = Gt.head(nv);
    out.lambda2_tilde = Gt.tail(fr.d);
    return out;
}

// Builds the moving frame: anchored Floquet form of the variational
// equation, indices d and q0, constants H1, H2, L, and grid diagnostics.
inline OrbitFrame build_frame(const sys::AutonomousField& field, const PeriodicOrbit& orb,
                              double tol) {
    const int n = field.n;
    auto psi = std::make_shared<ode::MatrixSolution>(ode::variational_solution(field, orb, tol));
    const MatrixXd M = psi->monodromy();
    const VectorXd anchor = field.f(orb.z0);  // phi'(0), exactly

    const auto inv = spectral::jordan_inventory(M);
    const int d = spectral::a_index(inv);
    const int q0 = q0_index(M, anchor);
    if (q0 > n - d - 1)
        throw IndexMismatch("build_frame: q0 = " + std::to_string(q0) + " exceeds n-d-1 = " +
                            std::to_string(n - d - 1));

    OrbitFrame fr;
    fr.form = floquet::detail::assemble_form(psi, inv, anchor, tol);
    if (fr.form.d != d)
        throw IndexMismatch("build_frame: A-index mismatch between inventory and form");
    fr.n = n;
    fr.d = d;
    fr.n0 = fr.form.decomposition.n_phi;
    fr.q0 = fr.n0 - 1;
    if (fr.q0 != q0)
        throw IndexMismatch("build_frame: anchored chain height disagrees with q0_index");
    fr.orbit = orb;
    fr.field = field;

    const MatrixXd& R = fr.form.R;
    const int nv = n - d - 1;
    fr.Lstar = R.row(0).tail(n - 1).transpose();
    fr.L = fr.Lstar.head(nv);
    const MatrixXd Hfull = R.bottomRightCorner(n - 1, n - 1);
    fr.H1 = Hfull.topLeftCorner(nv, nv);
    fr.H2 = Hfull.bottomRightCorner(d, d);

    // grid diagnostics (contracts are asserted by the test suites)
    auto& dg = fr.diagnostics;
    const double T = orb.T;
    const MatrixXd Ad_red = fr.signature_reduced();
    for (int i = 0; i < 64; ++i) {
        const double s = T * i / 64.0;
        const MatrixXd Q = fr.form.Q(s);
        const VectorXd pd = orb.tangent(s);
        dg.first_column_deviation = std::max(
            dg.first_column_deviation, (Q.col(0) - pd).norm() / std::max(1e-12, pd.norm()));
        const MatrixXd Us = Q.rightCols(n - 1);
        dg.u_antiperiodicity =
            std::max(dg.u_antiperiodicity,
                     (fr.U(s + T) - Us * Ad_red).norm() / std::max(1e-12, Us.norm()));
        const MatrixXd id11 = fr.U_deriv_dense(s) + pd * fr.Lstar.transpose() + Us * fr.H() -
                              field.jac(orb.sample(s)) * Us;
        dg.identity11_residual = std::max(dg.identity11_residual, id11.norm());
    }
    for (int i = 0; i < 16; ++i) {
        const double s = T * i / 16.0;
        const VectorXd e = fr.eta(s);
        const MatrixXd x = fr.xi(s);
        const MatrixXd Us = fr.U(s);
        const VectorXd pd = orb.tangent(s);
        double worst = (e.transpose() * Us).norm();
        worst = std::max(worst, std::abs(e.norm() - 1.0));
        worst = std::max(worst, (x.transpose() * Us - MatrixXd::Identity(n - 1, n - 1)).norm());
        worst = std::max(worst, (x.transpose() * pd).norm() / std::max(1.0, pd.norm()));
        if (e.dot(pd) <= 0.0) worst = std::max(worst, 1.0);
        dg.eta_xi_relations = std::max(dg.eta_xi_relations, worst);
        dg.eta_periodicity = std::max(dg.eta_periodicity, (fr.eta(s + T) - e).norm());
        dg.xi_periodicity = std::max(dg.xi_periodicity, (fr.xi(s + T) - x * Ad_red).norm() /
                                                            std::max(1.0, x.norm()));
    }
    return fr;
}

struct PropertyCheck {
    std::string name;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct PropertyReport {
    std::vector<PropertyCheck> checks;
    double C_estimate = 0.0;
    bool all_pass = true;

    void add(std::string name, double dev, double tol) {
        checks.push_back({std::move(name), dev, tol, dev <= tol});
        all_pass = all_pass && checks.back().pass;
    }
};

// Verifies the structural properties of the transformed system on sampled
// points: (i) eigenvalue real parts of H1 (+) H2 against (1/T) log
// |multipliers|; (ii) vanishing of the Lam's and their h-gradients at
// h = 0; (iii)/(iv) the sign relations under s -> s+T, w -> -w;
// (v) the |Lam~| <= C |g| bound with a sampled estimate of C; (vi) the
// zero structure of L beyond q0.
inline PropertyReport verify_properties(const OrbitFrame& fr, int samples = 12) {
    PropertyReport rep;
    const int n = fr.n, d = fr.d, nv = n - d - 1;
    const double T = fr.orbit.T;
    std::mt19937 rng(20240817u);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const bool has_g = static_cast<bool>(fr.field.perturbation);

    // (i) eigenvalues of H vs multipliers
    {
        std::vector<double> re_h;
        if (n - 1 > 0) {
            Eigen::EigenSolver<MatrixXd> es(fr.H());
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
                re_h.push_back(es.eigenvalues()(i).real());
        }
        auto mult = fr.form.multipliers();
        std::size_t trivial = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < mult.size(); ++i)
            if (std::abs(mult[i] - 1.0) < best) {
                best = std::abs(mult[i] - 1.0);
                trivial = i;
            }
        std::vector<double> re_m;
        for (std::size_t i = 0; i < mult.size(); ++i)
            if (i != trivial) re_m.push_back(std::log(std::abs(mult[i])) / T);
        rep.add("(i) Re eig(H1+H2) vs (1/T) log|multipliers|", la::multiset_distance(re_h, re_m),
                1e-5);
    }

    // (ii) Lam(s,0,0) = 0 and grad_h Lam(s,0,0) = 0
    {
        double worst_val = 0.0, worst_grad = 0.0;
        const double delta = 1e-4;
        for (int k = 0; k < samples; ++k) {
            const double s = T * uni(rng);
            const double t = T * uni(rng);
            auto lam_vec = [&](const VectorXd& h) {
                auto r = transformed_rhs(fr, t, s, h.head(nv), h.tail(d));
                VectorXd all(1 + (n - 1));
                all(0) = r.lambda0;
                all.segment(1, nv) = r.lambda1;
                all.tail(d) = r.lambda2;
                return all;
            };
            worst_val = std::max(worst_val, lam_vec(VectorXd::Zero(n - 1)).cwiseAbs().maxCoeff());
            for (int j = 0; j < n - 1; ++j) {
                VectorXd hp = VectorXd::Zero(n - 1), hm = VectorXd::Zero(n - 1);
                hp(j) += delta;
                hm(j) -= delta;
                const VectorXd grad = (lam_vec(hp) - lam_vec(hm)) / (2.0 * delta);
                worst_grad = std::max(worst_grad, grad.cwiseAbs().maxCoeff());
            }
        }
        rep.add("(ii) Lam(s,0,0) = 0", worst_val, 1e-6);
        rep.add("(ii) dLam/d(v,w)(s,0,0) = 0", worst_grad, 1e-6);
    }

    // (iii)/(iv) sign relations under s -> s+T, w -> -w
    {
        double dev01 = 0.0, dev2 = 0.0, devt01 = 0.0, devt2 = 0.0;
        for (int k = 0; k < samples; ++k) {
            const double s = T * uni(rng);
            const double t = T * uni(rng);
            VectorXd v(nv), w(d);
            for (int j = 0; j < nv; ++j) v(j) = 2e-2 * (uni(rng) - 0.5);
            for (int j = 0; j < d; ++j) w(j) = 2e-2 * (uni(rng) - 0.5);
            const auto a = transformed_rhs(fr, t, s + T, v, w);
            const auto b = transformed_rhs(fr, t, s, v, -w);
            dev01 = std::max(dev01, std::abs(a.lambda0 - b.lambda0));
            if (nv > 0) dev01 = std::max(dev01, (a.lambda1 - b.lambda1).cwiseAbs().maxCoeff());
            if (d > 0) dev2 = std::max(dev2, (a.lambda2 + b.lambda2).cwiseAbs().maxCoeff());
            if (has_g) {
                devt01 = std::max(devt01, std::abs(a.lambda0_tilde - b.lambda0_tilde));
                if (nv > 0)
                    devt01 = std::max(devt01, (a.lambda1_tilde - b.lambda1_tilde).cwiseAbs().maxCoeff());
                if (d > 0)
                    devt2 = std::max(devt2, (a.lambda2_tilde + b.lambda2_tilde).cwiseAbs().maxCoeff());
            }
        }
        rep.add("(iii) Lam_{0,1}(s+T,v,w) = Lam_{0,1}(s,v,-w)", dev01, 1e-6);
        rep.add("(iv) Lam_2(s+T,v,w) = -Lam_2(s,v,-w)", dev2, 1e-6);
        if (has_g) {
            rep.add("(iii) Lam~_{0,1} analogue", devt01, 1e-6);
            rep.add("(iv) Lam~_2 analogue", devt2, 1e-6);
        }
    }

    // (v) |Lam~| <= C |g| with a sampled estimate of C
    if (has_g) {
        double eden_floor = std::numeric_limits<double>::infinity();
        double xi_max = 0.0, udot_max = 0.0;
        for (int i = 0; i < 64; ++i) {
            const double s = 2.0 * T * i / 64.0;
            eden_floor = std::min(eden_floor, fr.eta(s).dot(fr.orbit.tangent(s)));
            xi_max = std::max(xi_max, fr.xi(s).norm());
            udot_max = std::max(udot_max, fr.U_deriv(s).norm());
        }
        const double hmax = 2e-2;
        const double floor_adj = eden_floor - udot_max * hmax;
        if (floor_adj <= 0.0) throw FrameDegenerate("verify_properties: eta projection floor collapsed");
        rep.C_estimate = std::max(1.0 / floor_adj, xi_max * (1.0 + udot_max * hmax / floor_adj));

        double worst_ratio = 0.0;
        for (int k = 0; k < samples; ++k) {
            const double s = 2.0 * T * uni(rng);
            const double t = T * uni(rng);
            VectorXd v(nv), w(d);
            for (int j = 0; j < nv; ++j) v(j) = hmax * (uni(rng) - 0.5);
            for (int j = 0; j < d; ++j) w(j) = hmax * (uni(rng) - 0.5);
            const auto r = transformed_rhs(fr, t, s, v, w);
            VectorXd h(n - 1);
            h << v, w;
            const VectorXd z = fr.orbit.sample(s) + fr.U(s) * h;
            const double gn = fr.field.perturbation(t, z).norm();
            if (gn < 1e-14) continue;
            double lt = std::abs(r.lambda0_tilde);
            if (nv > 0) lt = std::max(lt, r.lambda1_tilde.norm());
            if (d > 0) lt = std::max(lt, r.lambda2_tilde.norm());
            worst_ratio = std::max(worst_ratio, lt / gn);
        }
        rep.add("(v) |Lam~| / |g| within the sampled C", worst_ratio, rep.C_estimate);
    } else {
        double worst = 0.0;
        for (int k = 0; k < samples; ++k) {
            const double s = T * uni(rng);
            VectorXd v = VectorXd::Constant(nv, 1e-2), w = VectorXd::Constant(d, 1e-2);
            const auto r = transformed_rhs(fr, 0.0, s, v, w);
            worst = std::max(worst, std::abs(r.lambda0_tilde));
            if (nv > 0) worst = std::max(worst, r.lambda1_tilde.norm());
            if (d > 0) worst = std::max(worst, r.lambda2_tilde.norm());
        }
        rep.add("(v) Lam~ identically zero without g", worst, 0.0);
    }

    // (vi) structure of L
    {
        double worst = 0.0;
        for (int j = fr.q0; j < nv; ++j) worst = std::max(worst, std::abs(fr.L(j)));
        for (int j = nv; j < n - 1; ++j) worst = std::max(worst, std::abs(fr.Lstar(j)));
        rep.add("(vi) L zero beyond q0", worst, 1e-10);
    }
    return rep;
}

struct RoundtripReport {
    double max_deviation = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Integrates the transformed system from (s0, v0, w0), maps back through
// z = phi(s) + U(s) [v; w], and compares against a direct integration of
// z' = f(z) + g(t, z) from the mapped initial point.
inline RoundtripReport roundtrip_check(const OrbitFrame& fr, double s0, const VectorXd& v0,
                                       const VectorXd& w0, double horizon, double threshold = 1e-5,
                                       double tol = 1e-10) {
    const int n = fr.n, d = fr.d, nv = n - d - 1;
    VectorXd h0(n - 1);
    h0 << v0, w0;
    const VectorXd z0 = fr.orbit.sample(s0) + fr.U(s0) * h0;

    const ode::Rhs rhs_t = [&fr, nv, d, n](double t, const VectorXd& y) -> VectorXd {
        const auto r = transformed_rhs(fr, t, y(0), y.segment(1, nv), y.tail(d));
        VectorXd dy(n);
        dy(0) = r.sdot;
        dy.segment(1, nv) = r.vdot;
        dy.tail(d) = r.wdot;
        return dy;
    };
    const bool has_g = static_cast<bool>(fr.field.perturbation);
    const ode::Rhs rhs_z = [&fr, has_g](double t, const VectorXd& z) -> VectorXd {
        VectorXd dz = fr.field.f(z);
        if (has_g) dz += fr.field.perturbation(t, z);
        return dz;
    };

    VectorXd y0(n);
    y0(0) = s0;
    y0.segment(1, nv) = v0;
    y0.tail(d) = w0;
    const auto sol_t = ode::integrate_ode(rhs_t, y0, 0.0, horizon, tol, {}, fr.orbit.T);
    const auto sol_z = ode::integrate_ode(rhs_z, z0, 0.0, horizon, tol, {}, fr.orbit.T);

    RoundtripReport rep;
    rep.threshold = threshold;
    for (int i = 0; i <= 200; ++i) {
        const double t = horizon * i / 200.0;
        const VectorXd y = sol_t.eval(t);
        VectorXd h(n - 1);
        h << y.segment(1, nv), y.tail(d);
        const VectorXd z_mapped = fr.orbit.sample(y(0)) + fr.U(y(0)) * h;
        rep.max_deviation = std::max(rep.max_deviation, (sol_z.eval(t) - z_mapped).norm());
    }
    rep.pass = rep.max_deviation <= rep.threshold;
    return rep;
}

}  // namespace floq::orbit

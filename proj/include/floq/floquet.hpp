#pragma once

// floquet.hpp — real Floquet normal forms Phi(t) = Q(t) e^{tR} with
// Q(t+T) = Q(t) [I_(n-d) (+) (-I_d)], d the A-index of the system, plus the
// complex/general kT-periodic forms used as cross-checks and the existence
// criteria for a real T-periodic form.
//
// Construction: sort the monodromy into J1 (+) J2 with a real Jordan basis
// S, take R1 = log(J1)/T (real, by even multiplicity of negative blocks in
// J1), R2 from the shifted logarithm of J2, and define
//   Q(t) = Psi(t) S exp(-tR),   R = R1 (+) R2,
// on the integrator's dense output over [0, 2T]. The complex companion
// R~ = R1 (+) (R2 + i pi/T I_d) satisfies exp(T R~) = J1 (+) J2 and is kept
// for verification.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/integrate.hpp"
#include "floq/linalg.hpp"
#include "floq/matfun.hpp"
#include "floq/spectral.hpp"
#include "floq/systems.hpp"

namespace floq::floquet {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct FloquetForm {
    int n = 0;
    double T = 0.0;
    int d = 0;       // A-index: width of the antiperiodic segment
    MatrixXd R;      // real constant matrix in the sorted basis
    MatrixXd S;      // sorting basis; Q(0) = S exactly
    MatrixXcd R_tilde;
    spectral::JordanInventory inventory;
    spectral::RealJordanDecomposition decomposition;
    std::shared_ptr<const ode::MatrixSolution> psi;  // principal solution over [0, 2T]
    std::vector<std::string> diagnostics;
    double tol = 0.0;

    // Q(t) = Psi(t) S exp(-tR); 2T-periodic, so general t reduces mod 2T.
    MatrixXd Q(double t) const {
        const double tr = la::mod_period(t, 2.0 * T);
        return psi->eval(tr) * S * matfun::matrix_exp(MatrixXd(-tr * R));
    }

    // Q'(t) from the dense-output derivative of Psi (not from the identity
    // Q' = AQ - QR, which is what the residual checks test).
    MatrixXd Q_deriv(double t) const {
        const double tr = la::mod_period(t, 2.0 * T);
        const MatrixXd E = matfun::matrix_exp(MatrixXd(-tr * R));
        return psi->eval_deriv(tr) * S * E - psi->eval(tr) * S * E * R;
    }

    MatrixXd signature() const { return sys::signature_matrix(n, d); }

    // S^-1 Psi(T) S: the monodromy of the sorted solution Phi = Psi S.
    MatrixXd monodromy_sorted() const {
        Eigen::PartialPivLU<MatrixXd> lu(S);
        return lu.solve(psi->monodromy() * S);
    }

    std::vector<std::complex<double>> multipliers() const {
        Eigen::EigenSolver<MatrixXd> es(psi->monodromy());
        std::vector<std::complex<double>> out(es.eigenvalues().data(),
                                              es.eigenvalues().data() + es.eigenvalues().size());
        std::sort(out.begin(), out.end(), [](auto a, auto b) {
            if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
            if (a.real() != b.real()) return a.real() > b.real();
            return a.imag() > b.imag();
        });
        return out;
    }
};

namespace detail {

// Shared assembly: sort the monodromy of `psi`, log the segments, build the
// form. `anchor` seeds the eigenvalue-1 chain for orbit frames.
inline FloquetForm assemble_form(std::shared_ptr<const ode::MatrixSolution> psi,
                                 const spectral::JordanInventory& inv,
                                 std::optional<VectorXd> anchor, double tol) {
    FloquetForm form;
    form.n = psi->n;
    form.T = psi->T;
    form.tol = tol;
    form.inventory = inv;
    form.psi = psi;

    const MatrixXd M = psi->monodromy();
    form.decomposition = spectral::real_jordan_basis(M, inv, std::move(anchor));
    const auto& dec = form.decomposition;
    form.S = dec.S;
    form.d = dec.n2;

    const int head = dec.n_phi + dec.n1;  // periodic segment width
    std::vector<matfun::JordanBlockDesc> head_blocks;
    for (const auto& b : dec.blocks)
        if (b.segment != spectral::Segment::J2)
            head_blocks.push_back({b.cls, b.chain_len, b.start, b.width});
    const MatrixXd R1 = matfun::log_real_jordan_blocks(head_blocks, head) / form.T;
    const MatrixXd R2 = matfun::shifted_negative_log(dec.segment_J2(), form.T);

    form.R = MatrixXd::Zero(form.n, form.n);
    form.R.topLeftCorner(head, head) = R1;
    form.R.bottomRightCorner(form.d, form.d) = R2;

    form.R_tilde = form.R.cast<std::complex<double>>();
    for (int i = head; i < form.n; ++i) form.R_tilde(i, i) += std::complex<double>(0.0, M_PI / form.T);

    if (form.d % 2 == 1)
        form.diagnostics.push_back(
            "A-index " + std::to_string(form.d) +
            " is odd; impossible for a true monodromy (det Phi(T) > 0), treat as numerical failure");
    return form;
}

}  // namespace detail

inline FloquetForm real_floquet_form(const sys::PeriodicLinearSystem& system, double tol) {
    auto psi = std::make_shared<ode::MatrixSolution>(ode::fundamental_solution(system, tol));
    const auto inv = spectral::jordan_inventory(psi->monodromy());
    return detail::assemble_form(psi, inv, std::nullopt, tol);
}

// Antiperiodicity of the form: max over the grid of
// ||Q(t+T) - Q(t) A_d|| / ||Q(t)||, pass iff within 100x integration tol.
struct AntiperiodicityReport {
    double max_deviation = 0.0;
    double threshold = 0.0;
    int grid_points = 0;
    bool pass = false;
};

inline AntiperiodicityReport verify_antiperiodicity(const FloquetForm& form, int grid_points) {
    AntiperiodicityReport rep;
    rep.grid_points = grid_points;
    rep.threshold = 100.0 * form.tol;
    const MatrixXd Ad = form.signature();
    for (int i = 0; i < grid_points; ++i) {
        const double t = form.T * i / grid_points;
        const MatrixXd Qt = form.Q(t);
        const MatrixXd QtT = form.Q(t + form.T);
        rep.max_deviation = std::max(rep.max_deviation, (QtT - Qt * Ad).norm() / Qt.norm());
    }
    rep.pass = rep.max_deviation <= rep.threshold;
    return rep;
}

// Residual of the defining identity Q' + QR = AQ on a grid, measured with
// the dense-output derivative; normalized by 1 + ||A|| ||Q||.
inline double fundamental_residual(const FloquetForm& form,
                                   const std::function<MatrixXd(double)>& A_of_t, int grid_points) {
    double worst = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double t = 2.0 * form.T * (i + 0.3) / grid_points;  // stay off the stored nodes
        const MatrixXd Q = form.Q(t);
        const MatrixXd Qd = form.Q_deriv(t);
        const MatrixXd A = A_of_t(t);
        const double denom = 1.0 + A.norm() * Q.norm();
        worst = std::max(worst, (Qd + Q * form.R - A * Q).norm() / denom);
    }
    return worst;
}

// exp(T R~) against the sorted monodromy and exp(2T R) against its square,
// both relative.
struct ConsistencyReport {
    double periodic_deviation = 0.0;   // ||exp(T R~) - M_sorted|| / ||M_sorted||
    double squared_deviation = 0.0;    // ||exp(2T R) - M_sorted^2|| / ||M_sorted^2||
};

inline ConsistencyReport form_consistency(const FloquetForm& form) {
    ConsistencyReport rep;
    const MatrixXd Ms = form.monodromy_sorted();
    const MatrixXcd expTR = matfun::matrix_exp(MatrixXcd(form.T * form.R_tilde));
    rep.periodic_deviation = (expTR - Ms.cast<std::complex<double>>()).norm() / Ms.norm();
    const MatrixXd M2 = Ms * Ms;
    const MatrixXd exp2TR = matfun::matrix_exp(MatrixXd(2.0 * form.T * form.R));
    rep.squared_deviation = (exp2TR - M2).norm() / M2.norm();
    return rep;
}

// General kT-periodic complex form: B with e^{kTB} = M^k and
// P(t) = Psi(t) e^{-tB}. Only k in {1, 2} fits the integrated window.
struct ComplexFloquetForm {
    int n = 0;
    double T = 0.0;
    int k = 1;
    MatrixXcd B;
    std::shared_ptr<const ode::MatrixSolution> psi;

    MatrixXcd P(double t) const {
        const double tr = la::mod_period(t, k * T);
        return psi->eval(tr).cast<std::complex<double>>() * matfun::matrix_exp(MatrixXcd(-tr * B));
    }
};

namespace detail {

// Complex Jordan logarithm with principal branches, used for the general
// form's B = log(M^k) / (kT).
inline MatrixXcd complex_jordan_log(const MatrixXcd& M, double tol_cluster) {
    const int n = static_cast<int>(M.rows());
    Eigen::ComplexEigenSolver<MatrixXcd> es(M);
    if (es.info() != Eigen::Success) throw NumericalError("complex_jordan_log: eigensolver failed");
    auto clusters = spectral::detail::cluster_eigenvalues(es.eigenvalues(), tol_cluster);

    const double scale = std::max(1.0, M.norm());
    MatrixXcd S(n, n);
    MatrixXcd J = MatrixXcd::Zero(n, n);
    MatrixXcd logJ = MatrixXcd::Zero(n, n);
    int col = 0;
    for (const auto& c : clusters) {
        if (std::abs(c.mean) < 1e-300) throw SingularMatrix("complex_jordan_log: zero eigenvalue");
        MatrixXcd shifted = M - c.mean * MatrixXcd::Identity(n, n);
        auto sizes = spectral::detail::block_sizes_from_ranks(shifted, c.mult, scale);
        auto chains = spectral::detail::build_cluster_chains(
            shifted, sizes, std::vector<spectral::detail::Chain<MatrixXcd>>{}, scale);
        for (const auto& chain : chains) {
            const int m = chain.height;
            for (int j = 0; j < m; ++j) {
                S.col(col + j) = chain.cols[j];
                J(col + j, col + j) = c.mean;
                if (j + 1 < m) J(col + j, col + j + 1) = 1.0;
            }
            logJ.block(col, col, m, m) = matfun::jordan_block_log(c.mean, m, 0).log;
            col += m;
        }
    }
    if (col != n) throw ChainBreakdown("complex_jordan_log: incomplete basis");
    Eigen::PartialPivLU<MatrixXcd> lu(S);
    const MatrixXcd X = S * logJ * lu.inverse();
    const double res = (matfun::matrix_exp(X) - M).norm() / std::max(1.0, M.norm());
    if (res > 1e-6)
        throw NumericalError("complex_jordan_log: exp(log M) residual " + std::to_string(res));
    return X;
}

}  // namespace detail

inline ComplexFloquetForm complex_floquet_form(const sys::PeriodicLinearSystem& system, int k,
                                               double tol = 1e-10) {
    if (k != 1 && k != 2)
        throw UnsupportedK("complex_floquet_form: k = " + std::to_string(k) +
                           " exceeds the integrated window (k in {1, 2})");
    auto psi = std::make_shared<ode::MatrixSolution>(ode::fundamental_solution(system, tol));
    const MatrixXd M = psi->monodromy();
    MatrixXcd Mk = M.cast<std::complex<double>>();
    if (k == 2) Mk = Mk * Mk;

    ComplexFloquetForm form;
    form.n = system.n;
    form.T = system.T;
    form.k = k;
    form.psi = psi;
    form.B = detail::complex_jordan_log(Mk, 1e-6 * std::max(1.0, Mk.norm())) / (k * system.T);
    return form;
}

// The three equivalent conditions: zero A-index, a real T-periodic Q for
// some fundamental solution, and a real T-periodic form for every one.
struct ExistenceDecision {
    int a_index = 0;
    bool exists = false;
    std::optional<FloquetForm> witness;
};

inline ExistenceDecision check_real_T_periodic_existence(const sys::PeriodicLinearSystem& system,
                                                         double tol = 1e-10) {
    auto psi = std::make_shared<ode::MatrixSolution>(ode::fundamental_solution(system, tol));
    const auto inv = spectral::jordan_inventory(psi->monodromy());
    ExistenceDecision dec;
    dec.a_index = spectral::a_index(inv);
    dec.exists = (dec.a_index == 0);
    if (dec.exists) dec.witness = detail::assemble_form(psi, inv, std::nullopt, tol);
    return dec;
}

// Sufficient (not necessary) condition from the multipliers alone: true iff
// every multiplier classified as real has nonnegative real part.
inline bool corollary_check(const std::vector<std::complex<double>>& multipliers) {
    for (const auto& m : multipliers) {
        if (!std::isfinite(m.real()) || !std::isfinite(m.imag()) || std::abs(m) == 0.0)
            throw InputError("corollary_check: multipliers must be finite and nonzero");
        const bool real_class = std::abs(m.imag()) <= 1e-8 * std::max(1.0, std::abs(m));
        if (real_class && m.real() < 0.0) return false;
    }
    return true;
}

}  // namespace floq::floquet

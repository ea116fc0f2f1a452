#pragma once

// linalg.hpp — small dense linear-algebra helpers shared by the modules:
// SVD ranks and nullspaces, condition numbers, complex-to-real utilities.
// Everything here targets desk-scale matrices (n <= 12 or so).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "floq/errors.hpp"

namespace floq::la {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kRankRelTol = 1e-8;  // singular values below this times sigma_max count as zero

// Relative SVD threshold sigma > rel * sigma_max, with an optional absolute
// floor. The floor matters when the matrix is pure roundoff noise (e.g.
// powers of M - I for a monodromy that is numerically the identity): the
// relative cut alone would report full rank.
template <typename Mat>
int svd_rank(const Mat& m, double rel = kRankRelTol, double abs_floor = 0.0) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cut = std::max(rel * sv(0), abs_floor);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r;
    return r;
}

// Orthonormal basis of the nullspace of m under the same thresholds.
// Columns of the result span ker(m); may have zero columns.
template <typename Mat>
Mat nullspace(const Mat& m, double rel = kRankRelTol, double abs_floor = 0.0) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cut = (sv.size() > 0) ? std::max(rel * sv(0), abs_floor) : abs_floor;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++rank;
    const Eigen::Index n = m.cols();
    return svd.matrixV().rightCols(n - rank);
}

// Minimum-norm least-squares solve via SVD (pseudoinverse application).
template <typename Mat, typename Vec>
Vec svd_solve(const Mat& m, const Vec& b, double rel = kRankRelTol) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rel);
    return svd.solve(b);
}

// 2-norm condition number.
template <typename Mat>
double cond2(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

// Realification rho(C): each complex entry a+bi becomes the 2x2 cell
// [[a, b], [-b, a]]. rho is a ring homomorphism, so exp(rho(C)) = rho(exp(C)).
inline MatrixXd realify(const MatrixXcd& c) {
    MatrixXd r(2 * c.rows(), 2 * c.cols());
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            const double a = c(i, j).real();
            const double b = c(i, j).imag();
            r(2 * i, 2 * j) = a;
            r(2 * i, 2 * j + 1) = b;
            r(2 * i + 1, 2 * j) = -b;
            r(2 * i + 1, 2 * j + 1) = a;
        }
    return r;
}

// Drop imaginary parts no larger than tol (relative to the real scale);
// anything bigger is an error, since it would hide a branch bug upstream.
inline MatrixXd to_real_checked(const MatrixXcd& c, double tol = 1e-10) {
    const double scale = std::max(1.0, c.real().cwiseAbs().maxCoeff());
    const double imax = c.imag().cwiseAbs().maxCoeff();
    if (imax > tol * scale)
        throw NumericalError("to_real_checked: imaginary residue " + std::to_string(imax) +
                             " exceeds tolerance");
    return c.real();
}

// Reduce t into [0, period). Uses fmod, so the result is exact for exact
// multiples and within one ulp otherwise.
inline double mod_period(double t, double period) {
    double r = std::fmod(t, period);
    if (r < 0.0) r += period;
    return r;
}

inline bool is_finite(const MatrixXd& m) { return m.allFinite(); }

// Multiset comparison of real values with absolute tolerance.
inline double multiset_distance(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Multiset comparison of complex values: greedy nearest matching, adequate
// for the well-separated spectra this library targets.
inline double multiset_distance(std::vector<std::complex<double>> a,
                                std::vector<std::complex<double>> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    std::vector<bool> used(b.size(), false);
    for (const auto& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bj = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(x - b[j]);
            if (d < best) {
                best = d;
                bj = j;
            }
        }
        used[bj] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace floq::la

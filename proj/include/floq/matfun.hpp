#pragma once

// matfun.hpp — matrix exponential and the logarithm family used by the
// Floquet pipeline:
//   * matrix_exp          scaling-and-squaring with a degree-13 Pade
//                         approximant, real or complex;
//   * jordan_block_log    finite series for the log of a single Jordan
//                         block, with an explicit branch choice;
//   * real_log            real logarithm of a real matrix, which exists iff
//                         the matrix is nonsingular and every Jordan block
//                         with a real negative eigenvalue occurs an even
//                         number of times;
//   * shifted_negative_log  real R2 with -exp(T R2) = J2 for a Jordan-form
//                         J2 whose spectrum is real negative.
//
// Logs go through the Jordan route: the pipeline already needs the Jordan
// data, and the block series gives each factor directly. Paired negative
// real blocks take conjugate branches +i*pi / -i*pi and realify to a single
// 2(m)x2(m) real log, so the assembled matrix is real by construction.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/linalg.hpp"
#include "floq/spectral.hpp"

namespace floq::matfun {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace detail {

template <typename Mat>
double one_norm(const Mat& m) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) best = std::max(best, m.col(j).cwiseAbs().sum());
    return best;
}

}  // namespace detail

// exp(X) by scaling-and-squaring with the degree-13 diagonal Pade
// approximant. Relative error at double precision for moderate norms.
template <typename Mat>
Mat matrix_exp(const Mat& X) {
    if (!X.allFinite()) throw InputError("matrix_exp: nonfinite entries");
    if (X.rows() != X.cols()) throw InputError("matrix_exp: square matrix required");
    const int n = static_cast<int>(X.rows());

    static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double nrm = detail::one_norm(X);
    if (nrm == 0.0) return Mat::Identity(n, n);  // keeps exp(0) = I exact
    int s = 0;
    if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    const Mat A = X / std::pow(2.0, s);

    const Mat I = Mat::Identity(n, n);
    const Mat A2 = A * A;
    const Mat A4 = A2 * A2;
    const Mat A6 = A2 * A4;
    const Mat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                       b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    const Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                  b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

    Eigen::PartialPivLU<Mat> lu(V - U);
    Mat F = lu.solve(V + U);
    for (int i = 0; i < s; ++i) F = F * F;
    if (!F.allFinite())
        throw Overflow("matrix_exp: result exceeds floating range (||X||_1 = " + std::to_string(nrm) + ")");
    return F;
}

// Logarithm of one (m+1)-dimensional Jordan block with eigenvalue lambda:
//   log J = I log(lambda) + N/lambda - N^2/(2 lambda^2) + ...
//         + N^m (-1)^(m-1) / (m lambda^m),
// where N is the superdiagonal nilpotent and
//   log(lambda) = ln|lambda| + i (Arg(lambda) + 2 pi branch).
struct BlockLog {
    std::complex<double> eigenvalue{};
    int size = 0;
    int branch = 0;
    MatrixXcd log;  // (m+1) x (m+1)
};

inline BlockLog jordan_block_log(std::complex<double> lambda, int size, int branch = 0) {
    if (size <= 0) throw InputError("jordan_block_log: size must be positive");
    if (std::abs(lambda) == 0.0) throw ZeroEigenvalue("jordan_block_log: zero eigenvalue has no logarithm");

    const std::complex<double> log_lambda(std::log(std::abs(lambda)),
                                          std::arg(lambda) + 2.0 * M_PI * branch);
    MatrixXcd X = log_lambda * MatrixXcd::Identity(size, size);
    MatrixXcd N = MatrixXcd::Zero(size, size);
    for (int i = 0; i + 1 < size; ++i) N(i, i + 1) = 1.0;

    MatrixXcd Npow = MatrixXcd::Identity(size, size);
    std::complex<double> lpow = 1.0;
    double sign = 1.0;
    for (int k = 1; k < size; ++k) {
        Npow = Npow * N;
        lpow *= lambda;
        X += Npow * (sign / (static_cast<double>(k) * lpow));
        sign = -sign;
    }
    return {lambda, size, branch, X};
}

// Descriptor of one block inside a (segment of a) real Jordan matrix,
// with `start` relative to that segment.
struct JordanBlockDesc {
    spectral::EigenvalueClass cls;
    int chain_len = 0;
    int start = 0;
    int width = 0;
};

namespace detail {

// Real log of the stacked pair J(lambda,m) (+) J(lambda,m), lambda < 0.
// The two copies act like a conjugate pair with branches +i pi / -i pi:
// realify the +i pi block log and permute interleaved coordinates to stacked.
inline MatrixXd stacked_negative_pair_log(double lambda, int m) {
    const BlockLog bl = jordan_block_log({lambda, 0.0}, m, 0);  // principal: ln|l| + i*pi
    const MatrixXd rho = la::realify(bl.log);                   // interleaved (Re1, Im1, Re2, Im2, ...)
    std::vector<int> map(2 * m);
    for (int j = 0; j < m; ++j) {
        map[2 * j] = j;          // real parts -> first copy
        map[2 * j + 1] = m + j;  // imag parts -> second copy
    }
    MatrixXd out(2 * m, 2 * m);
    for (int a = 0; a < 2 * m; ++a)
        for (int b = 0; b < 2 * m; ++b) out(map[a], map[b]) = rho(a, b);
    return out;
}

}  // namespace detail

// Real logarithm of a real-Jordan-form segment described block by block.
// Real negative blocks must appear as adjacent identical pairs; a leftover
// single negative block means no real logarithm exists.
inline MatrixXd log_real_jordan_blocks(const std::vector<JordanBlockDesc>& blocks, int width) {
    MatrixXd X = MatrixXd::Zero(width, width);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& blk = blocks[i];
        if (blk.cls.pair) {
            const BlockLog bl = jordan_block_log(blk.cls.value(), blk.chain_len, 0);
            X.block(blk.start, blk.start, blk.width, blk.width) = la::realify(bl.log);
        } else if (blk.cls.re > 0.0) {
            const BlockLog bl = jordan_block_log({blk.cls.re, 0.0}, blk.chain_len, 0);
            X.block(blk.start, blk.start, blk.width, blk.width) = bl.log.real();
        } else if (blk.cls.re < 0.0) {
            if (i + 1 >= blocks.size() || blocks[i + 1].cls.pair ||
                blocks[i + 1].chain_len != blk.chain_len ||
                std::abs(blocks[i + 1].cls.re - blk.cls.re) >
                    1e-12 * std::max(1.0, std::abs(blk.cls.re)))
                throw NoRealLogarithm("unpaired Jordan block with real negative eigenvalue " +
                                      std::to_string(blk.cls.re));
            X.block(blk.start, blk.start, 2 * blk.chain_len, 2 * blk.chain_len) =
                detail::stacked_negative_pair_log(blk.cls.re, blk.chain_len);
            ++i;  // consumed the partner
        } else {
            throw SingularMatrix("zero eigenvalue block has no logarithm");
        }
    }
    return X;
}

// Real logarithm of M (Lemma-of-Culver criterion): exists iff M is
// nonsingular and every real-negative Jordan block occurs an even number of
// times. Throws NoRealLogarithm when the criterion fails.
inline MatrixXd real_log(const MatrixXd& M, const spectral::JordanInventory& inv) {
    for (const auto& e : inv.entries) {
        if (std::abs(e.cls.value()) < 1e-300) throw SingularMatrix("real_log: singular matrix");
        if (e.cls.real_negative() && (e.count % 2) == 1)
            throw NoRealLogarithm("real_log: Jordan block at eigenvalue " + std::to_string(e.cls.re) +
                                  " of size " + std::to_string(e.size) +
                                  " occurs an odd number of times (" + std::to_string(e.count) + ")");
    }
    auto dec = spectral::real_jordan_basis(M, inv);
    std::vector<JordanBlockDesc> blocks;
    blocks.reserve(dec.blocks.size());
    for (const auto& b : dec.blocks) blocks.push_back({b.cls, b.chain_len, b.start, b.width});
    const MatrixXd XJ = log_real_jordan_blocks(blocks, static_cast<int>(M.rows()));
    Eigen::PartialPivLU<MatrixXd> lu(dec.S);
    return dec.S * XJ * lu.inverse();
}

inline MatrixXd real_log(const MatrixXd& M) { return real_log(M, spectral::jordan_inventory(M)); }

// R2 with exp(T R2 + i pi I) = J2, i.e. -exp(T R2) = J2, for a Jordan-form
// J2 with all eigenvalues real negative. Per block lambda I + N:
//   log(-(lambda I + N)) = I ln(-lambda) - sum_k N^k / (k (-lambda)^k),
// which is real because -lambda > 0.
inline MatrixXd shifted_negative_log(const MatrixXd& J2, double T) {
    const int d = static_cast<int>(J2.rows());
    if (d == 0) return MatrixXd(0, 0);
    if (J2.rows() != J2.cols()) throw InputError("shifted_negative_log: square matrix required");
    if (!(T > 0.0)) throw InputError("shifted_negative_log: period must be positive");

    MatrixXd R2 = MatrixXd::Zero(d, d);
    int start = 0;
    while (start < d) {
        int m = 1;
        while (start + m < d && std::abs(J2(start + m - 1, start + m) - 1.0) < 0.5) ++m;
        const double lambda = J2(start, start);
        if (!(lambda < 0.0))
            throw NotNegativeSpectrum("shifted_negative_log: eigenvalue " + std::to_string(lambda) +
                                      " is not real negative");
        const double mu = -lambda;
        MatrixXd X = std::log(mu) * MatrixXd::Identity(m, m);
        MatrixXd N = MatrixXd::Zero(m, m);
        for (int i = 0; i + 1 < m; ++i) N(i, i + 1) = 1.0;
        MatrixXd Npow = MatrixXd::Identity(m, m);
        double mupow = 1.0;
        for (int k = 1; k < m; ++k) {
            Npow = Npow * N;
            mupow *= mu;
            X -= Npow / (static_cast<double>(k) * mupow);
        }
        R2.block(start, start, m, m) = X / T;
        start += m;
    }
    return R2;
}

}  // namespace floq::matfun

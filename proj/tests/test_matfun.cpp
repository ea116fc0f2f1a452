#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>

#include "floq/matfun.hpp"
#include "floq/spectral.hpp"

using namespace floq;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

// Independent oracle: plain Taylor series, valid for ||X|| <= 1.
template <typename Mat>
Mat exp_taylor(const Mat& x) {
    Mat term = Mat::Identity(x.rows(), x.cols());
    Mat sum = term;
    for (int k = 1; k <= 40; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

MatrixXd random_matrix(int n, unsigned seed, double scale) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-scale, scale);
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = uni(rng);
    return m;
}

}  // namespace

TEST_CASE("matrix_exp basics") {
    SUBCASE("zero matrix") {
        CHECK((matfun::matrix_exp(MatrixXd::Zero(3, 3).eval()) - MatrixXd::Identity(3, 3)).norm() ==
              0.0);
    }
    SUBCASE("rotation by pi") {
        MatrixXd w(2, 2);
        w << 0, -M_PI, M_PI, 0;
        CHECK((matfun::matrix_exp(w) + MatrixXd::Identity(2, 2)).norm() <= 1e-12);
    }
    SUBCASE("nilpotent exponential") {
        MatrixXd n(2, 2);
        n << 0, 1, 0, 0;
        MatrixXd expect(2, 2);
        expect << 1, 1, 0, 1;
        CHECK((matfun::matrix_exp(n) - expect).norm() <= 1e-15);
    }
    SUBCASE("matches the Taylor oracle on small random matrices") {
        for (unsigned seed : {3u, 7u, 11u}) {
            const MatrixXd x = random_matrix(5, seed, 0.2);
            CHECK((matfun::matrix_exp(x) - exp_taylor(x)).norm() <= 1e-13);
        }
    }
    SUBCASE("complex argument") {
        MatrixXcd x(2, 2);
        x << std::complex<double>(0, M_PI), 0, 0, std::complex<double>(0, -M_PI);
        const MatrixXcd e = matfun::matrix_exp(x);
        CHECK((e + MatrixXcd::Identity(2, 2)).norm() <= 1e-12);
    }
    SUBCASE("scaling handles moderate norms") {
        const MatrixXd x = random_matrix(4, 5u, 8.0);
        const MatrixXd big = matfun::matrix_exp(x);
        const MatrixXd half = matfun::matrix_exp(MatrixXd(0.5 * x));
        CHECK((half * half - big).norm() <= 1e-10 * big.norm());
    }
    SUBCASE("overflow is reported") {
        CHECK_THROWS_AS((void)matfun::matrix_exp(MatrixXd(1e4 * MatrixXd::Identity(2, 2))), Overflow);
    }
    SUBCASE("nonfinite input rejected") {
        MatrixXd bad = MatrixXd::Zero(2, 2);
        bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS((void)matfun::matrix_exp(bad), InputError);
    }
}

TEST_CASE("jordan_block_log: finite series with chosen branch") {
    SUBCASE("unipotent 2x2 equals the nilpotent exactly") {
        const auto bl = matfun::jordan_block_log({1.0, 0.0}, 2, 0);
        CHECK(bl.log(0, 0) == std::complex<double>(0, 0));
        CHECK(bl.log(0, 1) == std::complex<double>(1, 0));
        CHECK(bl.log(1, 0) == std::complex<double>(0, 0));
        CHECK(bl.log(1, 1) == std::complex<double>(0, 0));
    }
    SUBCASE("log 1 = 0 and principal log of -1 = i pi") {
        CHECK(matfun::jordan_block_log({1.0, 0.0}, 1, 0).log(0, 0) == std::complex<double>(0, 0));
        const auto neg = matfun::jordan_block_log({-1.0, 0.0}, 1, 0);
        CHECK(std::abs(neg.log(0, 0) - std::complex<double>(0, M_PI)) <= 1e-15);
    }
    SUBCASE("branch shifts by 2 pi i") {
        const auto b0 = matfun::jordan_block_log({2.0, 0.0}, 1, 0);
        const auto b1 = matfun::jordan_block_log({2.0, 0.0}, 1, 1);
        CHECK(std::abs(b1.log(0, 0) - b0.log(0, 0) - std::complex<double>(0, 2 * M_PI)) <= 1e-14);
    }
    SUBCASE("exp(log) reproduces the block") {
        const std::vector<std::pair<std::complex<double>, int>> cases = {
            {{1, 0}, 1}, {{1, 0}, 2}, {{-1, 0}, 1}, {{-1, 0}, 2}, {{2, 0}, 3},
            {{-3, 0}, 2}, {{0.3, 0.7}, 3}, {{-0.2, -1.1}, 2}};
        for (const auto& [lam, m] : cases) {
            const auto bl = matfun::jordan_block_log(lam, m, 0);
            MatrixXcd block = lam * MatrixXcd::Identity(m, m);
            for (int i = 0; i + 1 < m; ++i) block(i, i + 1) = 1.0;
            CHECK((matfun::matrix_exp(bl.log) - block).norm() <= 1e-9 * std::max(1.0, std::abs(lam)));
        }
    }
    SUBCASE("zero eigenvalue has no log") {
        CHECK_THROWS_AS((void)matfun::jordan_block_log({0.0, 0.0}, 2, 0), ZeroEigenvalue);
    }
}

TEST_CASE("real_log: existence criterion and construction") {
    SUBCASE("identity") {
        const MatrixXd x = matfun::real_log(MatrixXd::Identity(3, 3));
        CHECK(x.norm() <= 1e-12);
    }
    SUBCASE("paired negative eigenvalues have a real log") {
        MatrixXd m = -MatrixXd::Identity(2, 2);
        const MatrixXd x = matfun::real_log(m);
        CHECK((matfun::matrix_exp(x) - m).norm() <= 1e-9);
    }
    SUBCASE("odd negative block count has none") {
        MatrixXd m(2, 2);
        m << -1, 0, 0, 2;
        CHECK_THROWS_AS((void)matfun::real_log(m), NoRealLogarithm);
    }
    SUBCASE("mixed spectrum through a similarity") {
        // rotation-scaling pair, a positive eigenvalue, and a negative pair
        MatrixXd j = MatrixXd::Zero(5, 5);
        j(0, 0) = 0.4;
        j(0, 1) = 0.9;
        j(1, 0) = -0.9;
        j(1, 1) = 0.4;
        j(2, 2) = 3.0;
        j(3, 3) = -1.5;
        j(4, 4) = -1.5;
        const MatrixXd p = MatrixXd::Identity(5, 5) + 0.2 * random_matrix(5, 17u, 1.0);
        const MatrixXd m = p * j * p.inverse();
        const MatrixXd x = matfun::real_log(m);
        CHECK((matfun::matrix_exp(x) - m).norm() <= 1e-8 * m.norm());
    }
    SUBCASE("paired defective negative blocks") {
        MatrixXd j = MatrixXd::Zero(4, 4);
        j(0, 0) = -2.0;
        j(0, 1) = 1.0;
        j(1, 1) = -2.0;
        j(2, 2) = -2.0;
        j(2, 3) = 1.0;
        j(3, 3) = -2.0;
        const MatrixXd x = matfun::real_log(j);
        CHECK((matfun::matrix_exp(x) - j).norm() <= 1e-8 * j.norm());
    }
    SUBCASE("singular matrix rejected") {
        auto inv = spectral::pinned_inventory(MatrixXd::Zero(1, 1),
                                              {{{0.0, 0.0, false}, 1, 1}});
        CHECK_THROWS_AS((void)matfun::real_log(MatrixXd::Zero(1, 1), inv), SingularMatrix);
    }
}

TEST_CASE("shifted_negative_log: -exp(T R2) = J2") {
    SUBCASE("single -1 block") {
        MatrixXd j(1, 1);
        j << -1;
        const MatrixXd r2 = matfun::shifted_negative_log(j, 1.0);
        CHECK(r2.norm() <= 1e-15);
    }
    SUBCASE("diag(-1,-2) gives diag(0, ln 2)") {
        MatrixXd j(2, 2);
        j << -1, 0, 0, -2;
        const MatrixXd r2 = matfun::shifted_negative_log(j, 1.0);
        CHECK(std::abs(r2(0, 0)) <= 1e-15);
        CHECK(std::abs(r2(1, 1) - std::log(2.0)) <= 1e-15);
        CHECK(std::abs(r2(0, 1)) + std::abs(r2(1, 0)) == 0.0);
    }
    SUBCASE("defective block via the nilpotent series") {
        MatrixXd j(2, 2);
        j << -1, 1, 0, -1;
        const MatrixXd r2 = matfun::shifted_negative_log(j, 1.0);
        MatrixXd expect(2, 2);
        expect << 0, -1, 0, 0;
        CHECK((r2 - expect).norm() <= 1e-15);
        CHECK((matfun::matrix_exp(r2) + j).norm() <= 1e-12);
    }
    SUBCASE("the shifted identity holds for general period and blocks") {
        MatrixXd j = MatrixXd::Zero(3, 3);
        j(0, 0) = -0.5;
        j(0, 1) = 1.0;
        j(1, 1) = -0.5;
        j(2, 2) = -4.0;
        const double T = 2.5;
        const MatrixXd r2 = matfun::shifted_negative_log(j, T);
        CHECK((matfun::matrix_exp(MatrixXd(T * r2)) + j).norm() <= 1e-7 * j.norm());
    }
    SUBCASE("non-negative eigenvalue rejected") {
        MatrixXd j(2, 2);
        j << 1, 0, 0, -1;
        CHECK_THROWS_AS((void)matfun::shifted_negative_log(j, 1.0), NotNegativeSpectrum);
    }
}

#pragma once

// spectral.hpp — eigenvalue clustering, Jordan block inventory, the
// antiperiodicity index, and real Jordan bases of desk-scale matrices.
//
// Numerical Jordan structure is ill-posed in general. This module targets
// small well-conditioned matrices (n <= 12, cond(S) <= 1e6) and exposes a
// structure override (pinned inventory) for callers that know the layout.
//
// Conventions:
//   * chains are stored bottom-up: chain[0] is the eigenvector, chain[m-1]
//     the top generalized eigenvector, so chains map directly to basis
//     columns of a Jordan block with 1s on the superdiagonal;
//   * complex conjugate eigenvalue pairs are realified into 2x2
//     rotation-scaling cells [[a, b], [-b, a]] with I2 superdiagonal cells.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/linalg.hpp"

namespace floq::spectral {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// An eigenvalue class is either a single real value or a complex-conjugate
// pair, represented by the member with positive imaginary part.
struct EigenvalueClass {
    double re = 0.0;
    double im = 0.0;  // > 0 for a conjugate-pair class, 0 for a real class
    bool pair = false;

    std::complex<double> value() const { return {re, im}; }
    bool real_negative() const { return !pair && re < 0.0; }
};

struct InventoryEntry {
    EigenvalueClass cls;
    int size = 0;   // Jordan block size m (complex blocks realify to width 2m)
    int count = 0;  // how many blocks of this size
};

struct JordanInventory {
    std::vector<InventoryEntry> entries;
    double tol_cluster = 0.0;
    MatrixXd source;

    int dimension() const {
        int n = 0;
        for (const auto& e : entries) n += e.size * e.count * (e.cls.pair ? 2 : 1);
        return n;
    }
};

inline double default_cluster_tol(const MatrixXd& m) { return 1e-6 * std::max(1.0, m.norm()); }

namespace detail {

// A cluster is real when its mean sits on the real axis to within the
// deterministic classification threshold.
inline bool is_real_mean(std::complex<double> mean) {
    return std::abs(mean.imag()) <= 1e-8 * std::max(1.0, std::abs(mean));
}

struct Cluster {
    std::complex<double> mean{};
    int mult = 0;       // algebraic multiplicity of this cluster alone
    bool real = false;  // classification of the mean
};

inline std::vector<Cluster> cluster_eigenvalues(const VectorXcd& eig, double tol) {
    const int n = static_cast<int>(eig.size());
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double scale = std::max(1.0, std::max(std::abs(eig(i)), std::abs(eig(j))));
            if (std::abs(eig(i) - eig(j)) <= tol * scale) parent[find(i)] = find(j);
        }
    std::vector<Cluster> out;
    std::vector<int> root_of(n, -1);
    for (int i = 0; i < n; ++i) {
        const int r = find(i);
        if (root_of[r] < 0) {
            root_of[r] = static_cast<int>(out.size());
            out.push_back({});
        }
        Cluster& c = out[root_of[r]];
        c.mean += eig(i);
        c.mult += 1;
    }
    for (auto& c : out) {
        c.mean /= static_cast<double>(c.mult);
        c.real = is_real_mean(c.mean);
        if (c.real) c.mean = {c.mean.real(), 0.0};
    }
    return out;
}

// Block-size counts (index k-1 -> number of blocks of size k) from the
// nullity sequence of powers of shifted, i.e. the Weyr characteristics.
// `scale` is max(1, ||M||); singular values of the k-th power below
// rel * scale^k count as zero, so a power that is pure integration noise
// still reads as the zero matrix.
template <typename Mat>
std::vector<int> block_sizes_from_ranks(const Mat& shifted, int mult, double scale) {
    const int n = static_cast<int>(shifted.rows());
    std::vector<int> weyr;  // w_k = #blocks of size >= k
    Mat power = Mat::Identity(n, n);
    double floor_k = 1.0;
    int prev_nullity = 0;
    for (int k = 1; k <= mult; ++k) {
        power = power * shifted;
        floor_k *= scale;
        const int nullity = n - la::svd_rank(power, la::kRankRelTol, la::kRankRelTol * floor_k);
        const int wk = nullity - prev_nullity;
        if (wk <= 0) break;
        weyr.push_back(wk);
        prev_nullity = nullity;
        if (nullity >= mult) break;
    }
    std::vector<int> sizes(weyr.size(), 0);
    int total = 0;
    for (std::size_t k = 0; k < weyr.size(); ++k) {
        const int next = (k + 1 < weyr.size()) ? weyr[k + 1] : 0;
        sizes[k] = weyr[k] - next;
        total += sizes[k] * static_cast<int>(k + 1);
    }
    if (total != mult)
        throw AmbiguousCluster("rank tests yield total multiplicity " + std::to_string(total) +
                               " but clustering expected " + std::to_string(mult) +
                               "; pin the structure or adjust tol_cluster");
    return sizes;
}

}  // namespace detail

// Inventory of Jordan blocks of M. Eigenvalues within
// tol_cluster*max(1,|lambda|) of each other merge into one cluster; block
// sizes come from SVD rank tests on powers of (M - lambda I).
inline JordanInventory jordan_inventory(const MatrixXd& M, double tol_cluster) {
    const int n = static_cast<int>(M.rows());
    if (n == 0 || M.rows() != M.cols()) throw InputError("jordan_inventory: square matrix required");

    {
        Eigen::JacobiSVD<MatrixXd> svd(M);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) < 1e-12 * sv(0))
            throw SingularMonodromy("jordan_inventory: matrix numerically singular (sigma_min/sigma_max = " +
                                    std::to_string(sv(sv.size() - 1) / sv(0)) + ")");
    }

    Eigen::EigenSolver<MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw NumericalError("jordan_inventory: eigenvalue iteration failed");
    auto clusters = detail::cluster_eigenvalues(es.eigenvalues(), tol_cluster);

    // Two distinct clusters sitting within 10x of the clustering tolerance
    // cannot be told apart reliably.
    for (std::size_t i = 0; i < clusters.size(); ++i)
        for (std::size_t j = i + 1; j < clusters.size(); ++j) {
            const double scale =
                std::max(1.0, std::max(std::abs(clusters[i].mean), std::abs(clusters[j].mean)));
            if (std::abs(clusters[i].mean - clusters[j].mean) <= 10.0 * tol_cluster * scale)
                throw AmbiguousCluster("clusters at " + std::to_string(clusters[i].mean.real()) +
                                       " and " + std::to_string(clusters[j].mean.real()) +
                                       " are within 10x tol_cluster; pin the structure to override");
        }

    JordanInventory inv;
    inv.tol_cluster = tol_cluster;
    inv.source = M;

    const double scale = std::max(1.0, M.norm());
    std::vector<bool> consumed(clusters.size(), false);
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        if (consumed[i]) continue;
        const auto& c = clusters[i];
        if (c.real) {
            MatrixXd shifted = M - c.mean.real() * MatrixXd::Identity(n, n);
            auto sizes = detail::block_sizes_from_ranks(shifted, c.mult, scale);
            for (std::size_t k = 0; k < sizes.size(); ++k)
                if (sizes[k] > 0)
                    inv.entries.push_back({{c.mean.real(), 0.0, false}, static_cast<int>(k + 1), sizes[k]});
        } else {
            // Locate the conjugate cluster; realness of M guarantees it exists.
            const std::complex<double> target = std::conj(c.mean);
            int match = -1;
            for (std::size_t j = 0; j < clusters.size(); ++j) {
                if (j == i || consumed[j] || clusters[j].real) continue;
                const double scale = std::max(1.0, std::abs(target));
                if (std::abs(clusters[j].mean - target) <= 10.0 * tol_cluster * scale) {
                    match = static_cast<int>(j);
                    break;
                }
            }
            if (match < 0 || clusters[match].mult != c.mult)
                throw AmbiguousCluster("complex cluster has no matching conjugate cluster");
            consumed[match] = true;
            const std::complex<double> rep = (c.mean.imag() > 0.0) ? c.mean : std::conj(c.mean);
            MatrixXcd shifted = M.cast<std::complex<double>>() - rep * MatrixXcd::Identity(n, n);
            auto sizes = detail::block_sizes_from_ranks(shifted, c.mult, scale);
            for (std::size_t k = 0; k < sizes.size(); ++k)
                if (sizes[k] > 0)
                    inv.entries.push_back({{rep.real(), rep.imag(), true}, static_cast<int>(k + 1), sizes[k]});
        }
        consumed[i] = true;
    }

    std::sort(inv.entries.begin(), inv.entries.end(), [](const InventoryEntry& a, const InventoryEntry& b) {
        const double ma = std::abs(a.cls.value()), mb = std::abs(b.cls.value());
        if (ma != mb) return ma > mb;
        if (a.size != b.size) return a.size > b.size;
        if (a.cls.re != b.cls.re) return a.cls.re > b.cls.re;
        return a.cls.im > b.cls.im;
    });

    if (inv.dimension() != n)
        throw AmbiguousCluster("inventory dimensions sum to " + std::to_string(inv.dimension()) +
                               " for an n=" + std::to_string(n) + " matrix");
    return inv;
}

inline JordanInventory jordan_inventory(const MatrixXd& M) {
    return jordan_inventory(M, default_cluster_tol(M));
}

// Structure override: the caller pins the block layout; only the dimension
// bookkeeping is validated. For matrices whose spectrum defeats clustering.
inline JordanInventory pinned_inventory(const MatrixXd& M, std::vector<InventoryEntry> entries,
                                        double tol_cluster = 0.0) {
    JordanInventory inv;
    inv.entries = std::move(entries);
    inv.tol_cluster = tol_cluster;
    inv.source = M;
    if (inv.dimension() != M.rows())
        throw InputError("pinned_inventory: entries do not sum to the matrix dimension");
    return inv;
}

// Antiperiodicity index: total size of Jordan blocks with a real negative
// eigenvalue that occur an odd number of times, each size counted once.
inline int a_index(const JordanInventory& inv) {
    int d = 0;
    for (const auto& e : inv.entries)
        if (e.cls.real_negative() && (e.count % 2) == 1) d += e.size;
    return d;
}

// Largest q >= 1 such that (M - I)^q x = v is solvable, or 0. Solvability is
// a rank test of the power against the augmented matrix, with the noise
// floor scaled like the powers themselves.
inline int anchor_depth(const MatrixXd& M, const VectorXd& v) {
    const int n = static_cast<int>(M.rows());
    const double scale = std::max(1.0, M.norm());
    const MatrixXd A = M - MatrixXd::Identity(n, n);
    MatrixXd power = MatrixXd::Identity(n, n);
    double floor_q = 1.0;
    int depth = 0;
    for (int q = 1; q <= n; ++q) {
        power = power * A;
        floor_q *= scale;
        const double cut = la::kRankRelTol * floor_q;
        MatrixXd aug(n, n + 1);
        aug.leftCols(n) = power;
        aug.col(n) = v;
        if (la::svd_rank(aug, la::kRankRelTol, cut) == la::svd_rank(power, la::kRankRelTol, cut))
            depth = q;
        else
            break;
    }
    return depth;
}

enum class Segment { Jphi, J1, J2 };

struct BlockRef {
    Segment segment = Segment::J1;
    EigenvalueClass cls;
    int chain_len = 0;  // Jordan block size m
    int start = 0;      // first column in S / J
    int width = 0;      // m for real classes, 2m for pairs
};

struct RealJordanDecomposition {
    MatrixXd S;  // real basis, M = S J S^{-1}
    MatrixXd J;  // real Jordan form, synthesized exactly from the inventory
    std::vector<BlockRef> blocks;
    int n_phi = 0;  // width of the anchored eigenvalue-1 segment (0 if unanchored)
    int n1 = 0;     // width of J1
    int n2 = 0;     // width of J2 (the A-index d)
    double cond_S = 0.0;
    double residual = 0.0;  // ||S J S^-1 - M|| / max(1, ||M||)

    MatrixXd segment_J1() const { return J.block(n_phi, n_phi, n1, n1); }
    MatrixXd segment_J2() const { return J.block(n_phi + n1, n_phi + n1, n2, n2); }
};

namespace detail {

template <typename Mat>
struct Chain {
    int height = 0;
    std::vector<Eigen::Vector<typename Mat::Scalar, Eigen::Dynamic>> cols;  // bottom-up
};

// Builds Jordan chains for one cluster. `shifted` is M - lambda I, `needed`
// maps block size -> count still to construct, `chains` may hold pre-seeded
// chains (the anchored one) that claim their share of the nullspace.
// `scale` is max(1, ||M||), setting the noise floor of the power nullspaces.
template <typename Mat>
std::vector<Chain<Mat>> build_cluster_chains(const Mat& shifted, std::vector<int> needed,
                                             std::vector<Chain<Mat>> chains, double scale) {
    using Scalar = typename Mat::Scalar;
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
    const int n = static_cast<int>(shifted.rows());

    int m_max = static_cast<int>(needed.size());
    for (const auto& c : chains) m_max = std::max(m_max, c.height);
    while (static_cast<int>(needed.size()) < m_max) needed.push_back(0);

    std::vector<Mat> powers(m_max + 1);
    powers[0] = Mat::Identity(n, n);
    for (int k = 1; k <= m_max; ++k) powers[k] = powers[k - 1] * shifted;
    std::vector<Mat> null_bases(m_max + 1);
    null_bases[0] = Mat(n, 0);
    double floor_k = 1.0;
    for (int k = 1; k <= m_max; ++k) {
        floor_k *= scale;
        null_bases[k] = la::nullspace(powers[k], la::kRankRelTol, la::kRankRelTol * floor_k);
    }

    for (int k = m_max; k >= 1; --k) {
        const int want = needed[k - 1];
        if (want == 0) continue;

        // Directions already spoken for at this height: the nullspace one
        // level down plus the height-k members of existing chains.
        int extra = 0;
        for (const auto& c : chains)
            if (c.height >= k) ++extra;
        Mat used(n, null_bases[k - 1].cols() + extra);
        used.leftCols(null_bases[k - 1].cols()) = null_bases[k - 1];
        int col = static_cast<int>(null_bases[k - 1].cols());
        for (const auto& c : chains)
            if (c.height >= k) used.col(col++) = c.cols[k - 1];

        Mat residual = null_bases[k];
        if (used.cols() > 0) {
            Eigen::JacobiSVD<Mat> usvd(used, Eigen::ComputeThinU);
            const auto& sv = usvd.singularValues();
            int r = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (sv(i) > 1e-12 * sv(0)) ++r;
            Mat basis = usvd.matrixU().leftCols(r);
            residual = null_bases[k] - basis * (basis.adjoint() * null_bases[k]);
        }
        Eigen::JacobiSVD<Mat> gsvd(residual, Eigen::ComputeThinV);
        const auto& gsv = gsvd.singularValues();
        if (gsv.size() < want || gsv(want - 1) < 1e-8)
            throw ChainBreakdown("chain construction: could not find " + std::to_string(want) +
                                 " independent generalized eigenvectors at height " + std::to_string(k));
        for (int j = 0; j < want; ++j) {
            Vec top = null_bases[k] * gsvd.matrixV().col(j);
            Chain<Mat> c;
            c.height = k;
            c.cols.resize(k);
            c.cols[k - 1] = top;
            for (int level = k - 1; level >= 1; --level) c.cols[level - 1] = shifted * c.cols[level];
            const double bottom = c.cols[0].norm();
            if (!(bottom > 0.0))
                throw ChainBreakdown("chain construction: degenerate chain (zero eigenvector)");
            for (auto& v : c.cols) v /= bottom;
            chains.push_back(std::move(c));
        }
    }
    return chains;
}

struct PendingBlock {
    EigenvalueClass cls;
    int chain_len = 0;
    Segment segment = Segment::J1;
    int cluster_id = 0;
    int pool_index = 0;
    // a real-class chain, or a complex chain to realify
    std::vector<VectorXd> rcols;
    std::vector<VectorXcd> ccols;
};

}  // namespace detail

// Real Jordan basis of M consistent with the inventory. Ordering: the
// anchored eigenvalue-1 chain (when an anchor is given) comes first with
// b1 = anchor; then J1 (all blocks whose real-negative eigenvalues occur an
// even number of times, plus everything else); then J2 (one copy of each
// odd-count real-negative block). Within segments blocks sort by descending
// |lambda|, then descending size.
inline RealJordanDecomposition real_jordan_basis(const MatrixXd& M, const JordanInventory& inv,
                                                 std::optional<VectorXd> anchor = std::nullopt) {
    const int n = static_cast<int>(M.rows());
    if (inv.dimension() != n) throw InputError("real_jordan_basis: inventory inconsistent with M");

    // Group inventory entries into clusters keyed by eigenvalue class.
    struct ClusterPlan {
        EigenvalueClass cls;
        std::vector<int> count_by_size;  // index size-1 -> count
    };
    std::vector<ClusterPlan> plans;
    for (const auto& e : inv.entries) {
        ClusterPlan* plan = nullptr;
        for (auto& p : plans) {
            if (p.cls.pair == e.cls.pair && std::abs(p.cls.value() - e.cls.value()) <=
                                                1e-12 * std::max(1.0, std::abs(p.cls.value()))) {
                plan = &p;
                break;
            }
        }
        if (!plan) {
            plans.push_back({e.cls, {}});
            plan = &plans.back();
        }
        if (static_cast<int>(plan->count_by_size.size()) < e.size) plan->count_by_size.resize(e.size, 0);
        plan->count_by_size[e.size - 1] += e.count;
    }

    // Anchored chain for the eigenvalue-1 cluster.
    int anchored_plan = -1;
    int anchored_len = 0;
    detail::Chain<MatrixXd> anchored_chain;
    if (anchor) {
        const VectorXd& v = *anchor;
        const double res = (M * v - v).norm();
        if (res > 1e-7 * std::max(1.0, M.norm()) * v.norm())
            throw AnchorNotEigenvector("anchor has eigen-residual " + std::to_string(res) +
                                       " for eigenvalue 1");
        for (std::size_t i = 0; i < plans.size(); ++i) {
            if (!plans[i].cls.pair && std::abs(plans[i].cls.re - 1.0) <=
                                          std::max(10.0 * inv.tol_cluster, 1e-6)) {
                anchored_plan = static_cast<int>(i);
                break;
            }
        }
        if (anchored_plan < 0)
            throw AnchorNotEigenvector("anchor supplied but the inventory has no eigenvalue-1 cluster");

        const int q0 = anchor_depth(M, v);
        anchored_len = q0 + 1;
        auto& counts = plans[anchored_plan].count_by_size;
        if (anchored_len > static_cast<int>(counts.size()) || counts[anchored_len - 1] <= 0)
            throw ChainBreakdown("anchored chain of height " + std::to_string(anchored_len) +
                                 " does not match the eigenvalue-1 block inventory");
        counts[anchored_len - 1] -= 1;

        const MatrixXd A = M - MatrixXd::Identity(n, n);
        anchored_chain.height = anchored_len;
        anchored_chain.cols.resize(anchored_len);
        if (q0 == 0) {
            anchored_chain.cols[0] = v;
        } else {
            MatrixXd power = MatrixXd::Identity(n, n);
            for (int i = 0; i < q0; ++i) power = power * A;
            anchored_chain.cols[anchored_len - 1] = la::svd_solve(power, v);
            for (int j = anchored_len - 1; j >= 1; --j)
                anchored_chain.cols[j - 1] = A * anchored_chain.cols[j];
            anchored_chain.cols[0] = v;  // exact anchor, by construction
        }
    }

    // Build chains cluster by cluster and collect block instances.
    const double scale = std::max(1.0, M.norm());
    std::vector<detail::PendingBlock> pool;
    for (std::size_t ci = 0; ci < plans.size(); ++ci) {
        const auto& plan = plans[ci];
        if (!plan.cls.pair) {
            MatrixXd shifted = M - plan.cls.re * MatrixXd::Identity(n, n);
            std::vector<detail::Chain<MatrixXd>> seed;
            if (static_cast<int>(ci) == anchored_plan) seed.push_back(anchored_chain);
            auto chains =
                detail::build_cluster_chains(shifted, plan.count_by_size, std::move(seed), scale);
            std::size_t start = (static_cast<int>(ci) == anchored_plan) ? 1 : 0;
            for (std::size_t k = start; k < chains.size(); ++k) {
                detail::PendingBlock b;
                b.cls = plan.cls;
                b.chain_len = chains[k].height;
                b.cluster_id = static_cast<int>(ci);
                b.pool_index = static_cast<int>(pool.size());
                b.rcols = chains[k].cols;
                pool.push_back(std::move(b));
            }
        } else {
            MatrixXcd shifted =
                M.cast<std::complex<double>>() - plan.cls.value() * MatrixXcd::Identity(n, n);
            auto chains = detail::build_cluster_chains(
                shifted, plan.count_by_size, std::vector<detail::Chain<MatrixXcd>>{}, scale);
            for (auto& c : chains) {
                detail::PendingBlock b;
                b.cls = plan.cls;
                b.chain_len = c.height;
                b.cluster_id = static_cast<int>(ci);
                b.pool_index = static_cast<int>(pool.size());
                b.ccols = c.cols;
                pool.push_back(std::move(b));
            }
        }
    }

    // Segment assignment: one copy of each odd-count real-negative block
    // goes to J2 (the last instance of that shape in the pool).
    for (const auto& e : inv.entries) {
        if (!(e.cls.real_negative() && (e.count % 2) == 1)) continue;
        for (auto it = pool.rbegin(); it != pool.rend(); ++it) {
            if (!it->cls.pair && it->chain_len == e.size &&
                std::abs(it->cls.re - e.cls.re) <= 1e-12 * std::max(1.0, std::abs(e.cls.re)) &&
                it->segment == Segment::J1) {
                it->segment = Segment::J2;
                break;
            }
        }
    }

    auto block_order = [](const detail::PendingBlock& a, const detail::PendingBlock& b) {
        const double ma = std::abs(a.cls.value()), mb = std::abs(b.cls.value());
        if (ma != mb) return ma > mb;
        if (a.chain_len != b.chain_len) return a.chain_len > b.chain_len;
        if (a.cls.re != b.cls.re) return a.cls.re > b.cls.re;
        if (a.cls.im != b.cls.im) return a.cls.im > b.cls.im;
        return a.pool_index < b.pool_index;
    };
    std::vector<detail::PendingBlock> seg1, seg2;
    for (auto& b : pool) (b.segment == Segment::J2 ? seg2 : seg1).push_back(std::move(b));
    std::stable_sort(seg1.begin(), seg1.end(), block_order);
    std::stable_sort(seg2.begin(), seg2.end(), block_order);

    RealJordanDecomposition dec;
    dec.S = MatrixXd::Zero(n, n);
    dec.J = MatrixXd::Zero(n, n);

    int col = 0;
    auto emit_real = [&](const EigenvalueClass& cls, const std::vector<VectorXd>& cols, Segment seg) {
        const int m = static_cast<int>(cols.size());
        BlockRef ref{seg, cls, m, col, m};
        for (int j = 0; j < m; ++j) {
            dec.S.col(col + j) = cols[j];
            dec.J(col + j, col + j) = cls.re;
            if (j + 1 < m) dec.J(col + j, col + j + 1) = 1.0;
        }
        col += m;
        dec.blocks.push_back(ref);
    };
    auto emit_pair = [&](const EigenvalueClass& cls, const std::vector<VectorXcd>& cols, Segment seg) {
        const int m = static_cast<int>(cols.size());
        BlockRef ref{seg, cls, m, col, 2 * m};
        for (int j = 0; j < m; ++j) {
            dec.S.col(col + 2 * j) = cols[j].real();
            dec.S.col(col + 2 * j + 1) = cols[j].imag();
            dec.J(col + 2 * j, col + 2 * j) = cls.re;
            dec.J(col + 2 * j, col + 2 * j + 1) = cls.im;
            dec.J(col + 2 * j + 1, col + 2 * j) = -cls.im;
            dec.J(col + 2 * j + 1, col + 2 * j + 1) = cls.re;
            if (j + 1 < m) {
                dec.J(col + 2 * j, col + 2 * j + 2) = 1.0;
                dec.J(col + 2 * j + 1, col + 2 * j + 3) = 1.0;
            }
        }
        col += 2 * m;
        dec.blocks.push_back(ref);
    };

    if (anchor) {
        emit_real({1.0, 0.0, false}, anchored_chain.cols, Segment::Jphi);
        dec.n_phi = anchored_len;
    }
    for (const auto& b : seg1)
        b.cls.pair ? emit_pair(b.cls, b.ccols, Segment::J1) : emit_real(b.cls, b.rcols, Segment::J1);
    dec.n1 = col - dec.n_phi;
    for (const auto& b : seg2) emit_real(b.cls, b.rcols, Segment::J2);
    dec.n2 = col - dec.n_phi - dec.n1;

    dec.cond_S = la::cond2(dec.S);
    Eigen::PartialPivLU<MatrixXd> lu(dec.S);
    const MatrixXd recon = dec.S * dec.J * lu.inverse();
    dec.residual = (recon - M).norm() / std::max(1.0, M.norm());
    if (dec.residual > 1e-7 && dec.cond_S <= 1e6)
        throw ChainBreakdown("Jordan basis reconstruction residual " + std::to_string(dec.residual) +
                             " with cond(S) = " + std::to_string(dec.cond_S));
    return dec;
}

}  // namespace floq::spectral

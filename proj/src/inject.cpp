#include "dgad/inject.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace dgad {

namespace {

using Matrix = Eigen::MatrixXd;
using Sparse = Eigen::SparseMatrix<double>;

std::uint64_t pair_key(NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

std::unordered_set<std::uint64_t> static_pairs(const EventStore& store) {
    std::unordered_set<std::uint64_t> pairs;
    for (const auto& e : store.edges()) {
        if (e.src != e.dst) pairs.insert(pair_key(e.src, e.dst));
    }
    return pairs;
}

// Orthonormalizes columns [from, k) of q against all earlier columns.
void gram_schmidt(Matrix& q, Eigen::Index from, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    for (Eigen::Index j = from; j < q.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
        }
        double norm = q.col(j).norm();
        if (norm < 1e-12) {
            // Collapsed direction: restart from noise.
            for (Eigen::Index r = 0; r < q.rows(); ++r) q(r, j) = normal(rng);
            for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
            norm = q.col(j).norm();
        }
        q.col(j) /= norm;
    }
}

double sq_dist(const double* a, const double* b, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace

SpectralEmbedding laplacian_eigenvectors(const EventStore& store, std::size_t k,
                                         std::uint64_t seed, const SpectralOptions& options) {
    const std::size_t n = store.num_nodes();
    if (k == 0 || k > n) {
        throw std::invalid_argument("spectral: k=" + std::to_string(k) + " exceeds node count " +
                                    std::to_string(n));
    }
    std::vector<double> degree(n, 0.0);
    const auto pairs = static_pairs(store);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::uint64_t key : pairs) {
        const auto a = static_cast<NodeId>(key >> 32);
        const auto b = static_cast<NodeId>(key & 0xffffffffULL);
        degree[a] += 1.0;
        degree[b] += 1.0;
    }
    for (std::uint64_t key : pairs) {
        const auto a = static_cast<NodeId>(key >> 32);
        const auto b = static_cast<NodeId>(key & 0xffffffffULL);
        const double w = 1.0 / std::sqrt(degree[a] * degree[b]);
        trip.emplace_back(static_cast<int>(a), static_cast<int>(b), w);
        trip.emplace_back(static_cast<int>(b), static_cast<int>(a), w);
    }
    // S = D^-1/2 A D^-1/2; iterate on M = I + S whose top eigenvectors are the
    // bottom eigenvectors of L = I - S (eigenvalues of M lie in [0, 2]).
    Sparse s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    s.setFromTriplets(trip.begin(), trip.end());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix q(static_cast<Eigen::Index>(n), kk);
    for (Eigen::Index j = 0; j < kk; ++j) {
        for (Eigen::Index r = 0; r < q.rows(); ++r) q(r, j) = normal(rng);
    }
    gram_schmidt(q, 0, rng);

    Eigen::Index locked = 0;
    SpectralEmbedding out;
    out.n = n;
    out.k = k;
    Matrix mq(q.rows(), kk);
    for (std::size_t it = 1; it <= options.eigen_max_iter; ++it) {
        mq = q + s * q;
        const Matrix rayleigh = q.transpose() * mq;
        const double residual = (mq - q * rayleigh).norm();
        out.iterations = it;
        out.residual = residual;
        if (residual < options.eigen_tol) break;
        // Lock leading columns that are individually converged.
        while (locked < kk) {
            const double theta = q.col(locked).dot(mq.col(locked));
            if ((mq.col(locked) - theta * q.col(locked)).norm() >= options.eigen_tol) break;
            ++locked;
        }
        if (locked == kk) break;
        q.rightCols(kk - locked) = mq.rightCols(kk - locked);
        gram_schmidt(q, locked, rng);
    }
    // Rayleigh-Ritz rotation so columns are ordered eigenvectors.
    mq = q + s * q;
    Matrix rayleigh = q.transpose() * mq;
    rayleigh = 0.5 * (rayleigh + rayleigh.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> small(rayleigh);
    // Ascending eigenvalues of M correspond to descending for L; reverse.
    Matrix rotated = q * small.eigenvectors().rowwise().reverse();
    out.vectors.resize(n * k);
    out.eigenvalues.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        out.eigenvalues[j] = 2.0 - small.eigenvalues()(kk - 1 - static_cast<Eigen::Index>(j));
        for (std::size_t r = 0; r < n; ++r) {
            out.vectors[r * k + j] = rotated(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
        }
    }
    // Isolated nodes carry no spectral information.
    for (std::size_t r = 0; r < n; ++r) {
        if (degree[r] == 0.0) std::fill_n(out.vectors.begin() + r * k, k, 0.0);
    }
    return out;
}

ClusterAssignment spectral_cluster(const EventStore& store, std::size_t k, std::uint64_t seed,
                                   const SpectralOptions& options) {
    const std::size_t n = store.num_nodes();
    if (k == 0) throw std::invalid_argument("spectral_cluster: k must be positive");
    if (k > n) {
        throw std::invalid_argument("spectral_cluster: k=" + std::to_string(k) +
                                    " exceeds node count " + std::to_string(n));
    }
    ClusterAssignment out;
    out.k = k;
    out.cluster.assign(n, 0);
    if (k == 1) return out;

    SpectralEmbedding emb = laplacian_eigenvectors(store, k, seed, options);
    std::vector<double>& x = emb.vectors;
    for (std::size_t r = 0; r < n; ++r) {
        double norm = 0.0;
        for (std::size_t j = 0; j < k; ++j) norm += x[r * k + j] * x[r * k + j];
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (std::size_t j = 0; j < k; ++j) x[r * k + j] /= norm;
        }
    }

    // k-means++ seeding.
    std::mt19937_64 rng(mix64(seed, 0x6b6d65616e73ULL));
    std::vector<double> centroids(k * k);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t first = pick(rng);
    std::copy_n(x.begin() + first * k, k, centroids.begin());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            d2[r] = std::min(d2[r], sq_dist(&x[r * k], &centroids[(c - 1) * k], k));
            total += d2[r];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (chosen = 0; chosen + 1 < n; ++chosen) {
                target -= d2[chosen];
                if (target <= 0.0) break;
            }
        } else {
            chosen = pick(rng);
        }
        std::copy_n(x.begin() + chosen * k, k, centroids.begin() + c * k);
    }

    // Lloyd iterations.
    std::vector<std::size_t>& assign = out.cluster;
    for (std::size_t it = 0; it < options.kmeans_max_iter; ++it) {
        for (std::size_t r = 0; r < n; ++r) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(&x[r * k], &centroids[c * k], k);
                if (d < best) {
                    best = d;
                    assign[r] = c;
                }
            }
        }
        std::vector<double> next(k * k, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t r = 0; r < n; ++r) {
            ++count[assign[r]];
            for (std::size_t j = 0; j < k; ++j) next[assign[r] * k + j] += x[r * k + j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] == 0) {
                // Empty cluster: move it onto the point farthest from its centroid.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double d = sq_dist(&x[r * k], &centroids[assign[r] * k], k);
                    if (d > far_d) {
                        far_d = d;
                        far = r;
                    }
                }
                std::copy_n(x.begin() + far * k, k, next.begin() + c * k);
            } else {
                for (std::size_t j = 0; j < k; ++j) next[c * k + j] /= static_cast<double>(count[c]);
            }
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            shift = std::max(shift, std::sqrt(sq_dist(&next[c * k], &centroids[c * k], k)));
        }
        centroids = std::move(next);
        if (shift < options.kmeans_tol) break;
    }
    for (std::size_t r = 0; r < n; ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double d = sq_dist(&x[r * k], &centroids[c * k], k);
            if (d < best) {
                best = d;
                assign[r] = c;
            }
        }
    }
    return out;
}

double interpolate_timestamp(double prev_t, double next_t, std::mt19937_64& rng) {
    if (!(prev_t <= next_t)) {
        throw std::invalid_argument("interpolate_timestamp: prev_t " + std::to_string(prev_t) +
                                    " > next_t " + std::to_string(next_t));
    }
    if (prev_t == next_t) return prev_t;
    std::uniform_real_distribution<double> u(prev_t, next_t);
    return u(rng);
}

InjectionResult inject_anomalies(const EventStore& store, double rate, std::size_t k,
                                 std::uint64_t seed, const SpectralOptions& options) {
    if (rate < 0.0) throw std::invalid_argument("inject: negative rate");
    const auto& original = store.edges();
    for (const auto& e : original) {
        if (e.label == Label::Anomaly) {
            throw std::invalid_argument("inject: store already contains labeled anomalies");
        }
    }
    const std::size_t n_inject =
        static_cast<std::size_t>(std::llround(rate * static_cast<double>(original.size())));

    std::vector<TemporalEdge> edges = original;
    for (auto& e : edges) e.label = Label::Normal;

    InjectionResult result;
    if (n_inject == 0) {
        result.store = EventStore(std::move(edges), store.num_nodes());
        result.clusters.k = 1;
        result.clusters.cluster.assign(store.num_nodes(), 0);
        return result;
    }
    result.clusters = spectral_cluster(store, k, seed, options);
    const auto& cl = result.clusters.cluster;
    const std::size_t n = store.num_nodes();

    const auto existing = static_pairs(store);
    std::vector<std::size_t> sizes(result.clusters.k, 0);
    for (std::size_t c : cl) ++sizes[c];
    double same = 0.0;
    for (std::size_t s : sizes) {
        if (s > 1) same += static_cast<double>(s) * static_cast<double>(s - 1) / 2.0;
    }
    const double all_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double cross_pairs = all_pairs - same;
    double cross_existing = 0.0;
    for (std::uint64_t key : existing) {
        if (cl[key >> 32] != cl[key & 0xffffffffULL]) cross_existing += 1.0;
    }
    const double eligible = cross_pairs - cross_existing;
    if (eligible < static_cast<double>(n_inject)) {
        throw std::runtime_error("inject: need " + std::to_string(n_inject) +
                                 " cross-cluster non-edges but only " +
                                 std::to_string(static_cast<long long>(eligible)) +
                                 " exist (deficit " +
                                 std::to_string(static_cast<long long>(n_inject - eligible)) + ")");
    }

    std::mt19937_64 rng(mix64(seed, 0x696e6a656374ULL));
    std::vector<std::pair<NodeId, NodeId>> chosen;
    std::unordered_set<std::uint64_t> taken;
    if (eligible < 20.0 * static_cast<double>(n_inject)) {
        // Sparse eligibility: enumerate and draw without replacement.
        std::vector<std::pair<NodeId, NodeId>> pool;
        for (NodeId a = 0; a < n; ++a) {
            for (NodeId b = a + 1; b < n; ++b) {
                if (cl[a] != cl[b] && !existing.count(pair_key(a, b))) pool.emplace_back(a, b);
            }
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        for (std::size_t i = 0; i < n_inject; ++i) {
            auto [a, b] = pool[i];
            if (std::uniform_int_distribution<int>(0, 1)(rng)) std::swap(a, b);
            chosen.emplace_back(a, b);
        }
    } else {
        std::uniform_int_distribution<NodeId> node(0, n - 1);
        while (chosen.size() < n_inject) {
            const NodeId a = node(rng), b = node(rng);
            if (a == b || cl[a] == cl[b]) continue;
            const auto key = pair_key(a, b);
            if (existing.count(key) || !taken.insert(key).second) continue;
            chosen.emplace_back(a, b);
        }
    }

    std::uint64_t next_id = 0;
    for (const auto& e : original) next_id = std::max(next_id, e.id + 1);
    const std::size_t m = original.size();
    std::uniform_int_distribution<std::size_t> slot(0, m);
    for (const auto& [a, b] : chosen) {
        const std::size_t p = slot(rng);
        const double prev_t = original[p == 0 ? 0 : p - 1].t;
        const double next_t = original[p == m ? m - 1 : p].t;
        TemporalEdge e;
        e.id = next_id++;
        e.src = a;
        e.dst = b;
        e.t = interpolate_timestamp(prev_t, next_t, rng);
        e.features.assign(store.feature_dim(), 0.0);
        e.label = Label::Anomaly;
        result.injected_ids.push_back(e.id);
        edges.push_back(std::move(e));
    }
    result.store = EventStore(std::move(edges), n);
    return result;
}

void write_cluster_tsv(const ClusterAssignment& clusters, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t v = 0; v < clusters.cluster.size(); ++v) {
        os << v << '\t' << clusters.cluster[v] << '\n';
    }
}

}  // namespace dgad

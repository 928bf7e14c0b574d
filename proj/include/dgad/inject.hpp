#pragma once

#include "dgad/tgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace dgad {

struct ClusterAssignment {
    std::vector<std::size_t> cluster;  // node -> cluster id in [0, k)
    std::size_t k = 0;
};

struct SpectralOptions {
    double eigen_tol = 1e-8;
    std::size_t eigen_max_iter = 5000;
    std::size_t kmeans_max_iter = 100;
    double kmeans_tol = 1e-6;
};

/// Spectral clustering of the static, unweighted, undirected projection of
/// `store` (self-interactions dropped).
///
/// Embeds nodes with the k eigenvectors of smallest eigenvalue of the
/// symmetric-normalized Laplacian, row-normalizes, then runs seeded k-means++.
/// Nodes without any interaction embed at the origin and fall to the nearest
/// centroid.
ClusterAssignment spectral_cluster(const EventStore& store, std::size_t k, std::uint64_t seed,
                                   const SpectralOptions& options = {});

/// The k smallest eigenpairs of I - D^-1/2 A D^-1/2 by orthogonal iteration
/// on its spectral complement, Gram-Schmidt re-orthonormalization and locking
/// of converged leading vectors. Columns of the result are eigenvectors
/// (row-major n x k); `eigenvalues` are ascending.
struct SpectralEmbedding {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> vectors;
    std::vector<double> eigenvalues;
    std::size_t iterations = 0;
    double residual = 0.0;
};

SpectralEmbedding laplacian_eigenvectors(const EventStore& store, std::size_t k,
                                         std::uint64_t seed, const SpectralOptions& options = {});

struct InjectionResult {
    EventStore store;
    ClusterAssignment clusters;
    std::vector<std::uint64_t> injected_ids;
};

/// Adds round(rate * |E|) anomalous edges between nodes of different clusters
/// whose pair never interacts in `store`. Each lands at a uniformly random slot
/// of the time-sorted sequence with a timestamp drawn between its neighbours'.
/// Originals become Normal, injected edges Anomaly with zero features.
InjectionResult inject_anomalies(const EventStore& store, double rate, std::size_t k,
                                 std::uint64_t seed, const SpectralOptions& options = {});

/// Uniform draw in [prev_t, next_t]; prev_t when the interval is empty.
double interpolate_timestamp(double prev_t, double next_t, std::mt19937_64& rng);

/// Writes "node_id\tcluster_id" lines.
void write_cluster_tsv(const ClusterAssignment& clusters, const std::filesystem::path& path);

}  // namespace dgad

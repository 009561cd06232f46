#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tensorclust/model.hpp"

namespace tensorclust {

struct KmeansConfig {
    int restarts = 10;
    int max_lloyd_iters = 100;
    std::uint64_t seed = 0;
};

struct KmeansResult {
    std::vector<int> labels;
    Matrix centroids;  // p x K
    double inertia = 0.0;
    /// Within-cluster sum of squares after each Lloyd iteration of the winning restart.
    std::vector<double> objective_trace;
};

/// Lloyd's algorithm on vectorized observations with k-means++ seeding,
/// best of `restarts` by within-cluster sum of squares. Labels are zero-based.
KmeansResult kmeans(std::span<const Tensor> data, int k, const KmeansConfig& config);

std::vector<int> kmeans_labels(std::span<const Tensor> data, int k, const KmeansConfig& config);

/// Initial TNMM estimate from hard labels (zero-based, covering 0..K-1).
TnmmParams init_params(std::span<const Tensor> data, std::span<const int> labels, int k);

/// n x K indicator matrix of zero-based labels.
Matrix one_hot(std::span<const int> labels, int k);

}  // namespace tensorclust

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tensorclust/model.hpp"

namespace tensorclust::sim {

using Rng = std::mt19937_64;

/// Independent 64-bit seed for stream `stream` of base seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Matrix ar_matrix(std::size_t p, double rho);
Matrix cs_matrix(std::size_t p, double rho);

struct SparsePrecisionDraw {
    Matrix mask;   // the Bernoulli(0.05) indicator pattern
    Matrix omega;  // unit-diagonal precision
    Matrix sigma;  // its inverse
};
SparsePrecisionDraw sparse_precision_draw(std::size_t p, Rng& rng);
Matrix sparse_precision_sigma(std::size_t p, Rng& rng);

/// Uniformly distributed random orthogonal matrix.
Matrix random_orthogonal(std::size_t p, Rng& rng);

/// Two-block diagonal covariance: a u x u block with eigenvalues 5, 10, ..., 5u
/// and a (p-u) x (p-u) block with eigenvalues 2 log(v+1), random bases, unit
/// Frobenius norm.
Matrix envelope_block_sigma(std::size_t p, std::size_t u, Rng& rng);

/// Draws tensor normal observations; square roots are factored once.
class TnSampler {
public:
    TnSampler(Tensor mu, const std::vector<Matrix>& sigmas);
    Tensor operator()(Rng& rng) const;

private:
    Tensor mu_;
    std::vector<Matrix> roots_;
};

Tensor sample_tn(const Tensor& mu, const std::vector<Matrix>& sigmas, Rng& rng);

enum class CovKind { identity, ar, cs, sparse_precision, envelope };

struct CovRecipe {
    CovKind kind = CovKind::identity;
    double rho = 0.0;
    std::size_t block = 0;  // leading block size for `envelope`
};

/// One constant-value box of a discriminant tensor. `cluster` is zero-based
/// (cluster 0 is the reference and has no discriminant); ranges are
/// zero-based half-open [begin, end) per mode.
struct BoxEntry {
    int cluster = 1;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    double value = 0.0;
};

enum class MeanKind { discriminant, corner_uniform };

struct MeanRecipe {
    MeanKind kind = MeanKind::discriminant;
    std::vector<BoxEntry> entries;  // discriminant boxes
    Dims corner;                    // corner sub-tensor sizes for corner_uniform
};

struct SimSpec {
    std::string name;
    int k = 2;
    Dims dims;
    std::size_t n_per_cluster = 0;
    std::vector<CovRecipe> covariances;
    MeanRecipe mean;
    std::uint64_t seed = 0;
    /// Separation multiplier a: cluster means become mu_1 + sqrt(a) (mu_k - mu_1).
    double delta_scale = 1.0;
};

void validate(const SimSpec& spec);

/// Benchmark models M1..M7.
SimSpec preset(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> preset_names();

TnmmParams build_model(const SimSpec& spec);

struct LabeledDataset {
    std::vector<Tensor> data;
    std::vector<int> labels;  // zero-based
    TnmmParams truth;
};

LabeledDataset generate(const SimSpec& spec);

/// Minimum mismatch rate over all relabelings of the predictions (K <= 8).
double clustering_error(std::span<const int> pred, std::span<const int> truth, int k);

}  // namespace tensorclust::sim

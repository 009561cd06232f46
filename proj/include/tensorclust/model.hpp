#pragma once

#include <span>
#include <vector>

#include "tensorclust/linalg.hpp"
#include "tensorclust/tensor.hpp"

namespace tensorclust {

/**
 * Parameters of a tensor normal mixture: weights, per-cluster means, and
 * one covariance per mode shared by all clusters.
 *
 * Identifiability convention: sigma_{m,11} = 1 for every mode after the
 * first; the overall scale is carried by the first mode.
 */
struct TnmmParams {
    std::vector<double> pis;
    std::vector<Tensor> means;
    std::vector<Matrix> sigmas;

    std::size_t clusters() const noexcept { return pis.size(); }
    std::size_t modes() const noexcept { return sigmas.size(); }
    const Dims& dims() const { return means.front().dims(); }
};

/// Throws ConfigError/DimensionError/NumericalError describing the first violated invariant.
void validate(const TnmmParams& params, bool require_identifiable = true);

/**
 * Rescales sigma_m (m > 0) to unit (0,0) entry and folds the removed
 * factors into sigma_0. The Kronecker product is unchanged.
 */
void apply_identifiability(std::vector<Matrix>& sigmas);

/// Discriminant tensors B_2..B_K (B_1 is implicitly zero).
struct DiscriminantSet {
    std::vector<Tensor> coefs;

    std::size_t support_size() const;
};

/// Covariance factorizations reused across many density evaluations.
class CovarianceFactors {
public:
    explicit CovarianceFactors(const std::vector<Matrix>& sigmas);

    const std::vector<Matrix>& inverses() const noexcept { return inverses_; }
    const std::vector<Matrix>& inv_sqrts() const noexcept { return inv_sqrts_; }
    /// sum_m q_m log|Sigma_m| for tensors with dims `dims`.
    double weighted_log_det(const Dims& dims) const;

private:
    std::vector<double> log_dets_;
    std::vector<Matrix> inverses_;
    std::vector<Matrix> inv_sqrts_;
};

double log_density(const Tensor& x, const Tensor& mu, const std::vector<Matrix>& sigmas);

DiscriminantSet discriminants(const TnmmParams& params);

/// Scores log(pi_k) + <X - (mu_1 + mu_k)/2, B_k>, with the k = 1 entry log(pi_1).
Vector cluster_scores(const Tensor& x, const TnmmParams& params, const DiscriminantSet& discs);

/// Posterior cluster probabilities, computed in log space.
Vector posteriors(const Tensor& x, const TnmmParams& params, const DiscriminantSet& discs);

/// Zero-based argmax of the cluster scores, ties to the smallest index.
int optimal_assign(const Tensor& x, const TnmmParams& params, const DiscriminantSet& discs);

/// <mu_2 - mu_1, [[mu_2 - mu_1; Sigma^-1]]>; two-cluster models only.
double separation(const TnmmParams& params);

/// Normalizes scores to probabilities with max subtraction.
Vector softmax(const Vector& scores);

/// sum_i log sum_k pi_k f_k(X_i).
double observed_log_likelihood(std::span<const Tensor> data, const TnmmParams& params);

struct ProfiledLikelihood {
    double loglik = 0.0;
    double scale = 1.0;
};

/**
 * Observed log-likelihood maximized over an overall factor c applied to
 * sigma_0, with weights, means and covariance shapes held fixed. Solved by
 * the EM fixed point c = sum_ik xi_ik d_ik / (n p) on the squared
 * Mahalanobis distances d_ik.
 */
ProfiledLikelihood profiled_log_likelihood(std::span<const Tensor> data, const TnmmParams& params,
                                           int max_iters = 500, double tol = 1e-12);

/// Per-observation per-cluster log(pi_k f_k(X_i)), n x K.
Matrix joint_log_densities(std::span<const Tensor> data, const TnmmParams& params);

/// Zero-based argmax per row.
std::vector<int> row_argmax(const Matrix& m);

}  // namespace tensorclust

#pragma once

#include <span>
#include <vector>

#include "tensorclust/deem.hpp"

namespace tensorclust {

struct EmConfig {
    int max_iters = 50;
    double mean_shift_tol = 0.1;
    int flipflop_max = 20;
    double flipflop_tol = 1e-6;
};

void validate(const EmConfig& config);

struct FlipflopResult {
    std::vector<Matrix> sigmas;
    int sweeps = 0;
    bool converged = false;
};

/**
 * Cyclic maximization of the expected complete-data likelihood over the
 * mode covariances with weights and means held fixed. Each mode update is
 *
 *   Sigma_m = (n q_m)^{-1} sum_i sum_k r_ik W_ik W_ik^T,
 *
 * W_ik the mode-m unfolding of (X_i - mu_k) whitened by Sigma_l^{-1/2} on
 * every other mode. Output follows the identifiability convention.
 */
FlipflopResult flipflop_sigma(std::span<const Tensor> data, const Matrix& resp, std::span<const Tensor> means,
                              const std::vector<Matrix>& sigmas_init, const EmConfig& config);

/// Standard EM for the tensor normal mixture. Records the observed-data
/// log-likelihood of the initial estimate and after every iteration.
FitResult em_fit(std::span<const Tensor> data, int k, const EmConfig& config, const TnmmParams& init);

}  // namespace tensorclust

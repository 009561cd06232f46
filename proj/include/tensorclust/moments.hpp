#pragma once

#include <span>
#include <vector>

#include "tensorclust/model.hpp"

namespace tensorclust {

/// Grand mean and per-mode centered Gram matrices of a dataset. With these,
/// a weighted within-cluster scatter costs K small products instead of n K
/// tensor unfoldings.
class DataMoments {
public:
    explicit DataMoments(std::span<const Tensor> data);

    std::size_t size() const noexcept { return n_; }
    const Tensor& center() const noexcept { return center_; }
    const Matrix& gram(std::size_t mode) const { return grams_.at(mode); }

private:
    std::size_t n_ = 0;
    Tensor center_;
    std::vector<Matrix> grams_;
};

/// Responsibility matrix must be n x K with nonnegative rows summing to one.
void check_responsibilities(const Matrix& resp, std::size_t n);

/**
 * Closed-form parameter update from responsibilities: weights and means by
 * weighted averages, mode covariances by the separable moment estimator
 * scaled to the identifiability convention (first mode carries the
 * within-cluster variance of the (1,...,1) element).
 *
 * Throws DegenerateClusterError (iteration -1) when a cluster's total
 * responsibility falls below one observation.
 */
TnmmParams moment_update(std::span<const Tensor> data, const Matrix& resp, const DataMoments& moments);

}  // namespace tensorclust

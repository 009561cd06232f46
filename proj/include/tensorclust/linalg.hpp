#pragma once

#include <vector>

#include "tensorclust/tensor.hpp"

namespace tensorclust {

/// Symmetric eigendecomposition of an SPD matrix with the derived quantities
/// the model needs (inverse, square roots, log-determinant).
class SpdFactor {
public:
    /// Throws NumericalError unless `sigma` is symmetric with eigenvalues > `floor`.
    explicit SpdFactor(const Matrix& sigma, double floor = 0.0);

    const Matrix& matrix() const noexcept { return sigma_; }
    const Vector& eigenvalues() const noexcept { return evals_; }
    const Matrix& eigenvectors() const noexcept { return evecs_; }

    double log_det() const;
    Matrix inverse() const;
    Matrix sqrt() const;
    /// Sigma^{-1/2}; eigenvalues below `floor` are raised to it first.
    Matrix inv_sqrt(double floor = 1e-10) const;

private:
    Matrix sigma_;
    Vector evals_;
    Matrix evecs_;
};

/// Largest absolute entry of A - A^T.
double asymmetry(const Matrix& a);

/// Smallest eigenvalue of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);

/// If min eigenvalue < threshold, adds threshold * I. Returns true when jitter was added.
bool repair_spd(Matrix& a, double threshold = 1e-8);

/// Per-mode inverses of a list of SPD matrices.
std::vector<Matrix> inverses(const std::vector<Matrix>& sigmas);

}  // namespace tensorclust

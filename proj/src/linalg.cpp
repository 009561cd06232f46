#include "tensorclust/linalg.hpp"

#include <cmath>
#include <string>

#include "tensorclust/error.hpp"

namespace tensorclust {

SpdFactor::SpdFactor(const Matrix& sigma, double floor) : sigma_(sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
        throw DimensionError("covariance must be a nonempty square matrix");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if (asymmetry(sigma) > 1e-10 * scale) throw NumericalError("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sigma + sigma.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    if (!(evals_.minCoeff() > floor))
        throw NumericalError("covariance is not positive definite (min eigenvalue " +
                             std::to_string(evals_.minCoeff()) + ")");
}

double SpdFactor::log_det() const { return evals_.array().log().sum(); }

Matrix SpdFactor::inverse() const {
    return evecs_ * evals_.cwiseInverse().asDiagonal() * evecs_.transpose();
}

Matrix SpdFactor::sqrt() const {
    return evecs_ * evals_.cwiseSqrt().asDiagonal() * evecs_.transpose();
}

Matrix SpdFactor::inv_sqrt(double floor) const {
    Vector d = evals_.cwiseMax(floor).cwiseSqrt().cwiseInverse();
    return evecs_ * d.asDiagonal() * evecs_.transpose();
}

double asymmetry(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("asymmetry: matrix not square");
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool repair_spd(Matrix& a, double threshold) {
    if (min_eigenvalue(a) >= threshold) return false;
    a.diagonal().array() += threshold;
    return true;
}

std::vector<Matrix> inverses(const std::vector<Matrix>& sigmas) {
    std::vector<Matrix> out;
    out.reserve(sigmas.size());
    for (const auto& s : sigmas) out.push_back(SpdFactor(s).inverse());
    return out;
}

}  // namespace tensorclust

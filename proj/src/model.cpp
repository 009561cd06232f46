#include "tensorclust/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tensorclust/error.hpp"

namespace tensorclust {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

void check_conformable(const Tensor& x, const std::vector<Matrix>& sigmas) {
    if (sigmas.size() != x.order()) throw DimensionError("number of covariances does not match tensor order");
    for (std::size_t m = 0; m < sigmas.size(); ++m)
        if (static_cast<std::size_t>(sigmas[m].rows()) != x.dim(m) ||
            static_cast<std::size_t>(sigmas[m].cols()) != x.dim(m))
            throw DimensionError("covariance " + std::to_string(m) + " does not match mode size");
}

}  // namespace

void validate(const TnmmParams& params, bool require_identifiable) {
    const auto k = params.clusters();
    if (k < 1) throw ConfigError("model needs at least one cluster");
    if (params.means.size() != k) throw ConfigError("number of means differs from number of weights");
    double total = 0.0;
    for (double pi : params.pis) {
        if (!(pi > 0.0 && pi <= 1.0)) throw ConfigError("mixture weight outside (0, 1]");
        total += pi;
    }
    if (std::abs(total - 1.0) > 1e-8) throw ConfigError("mixture weights do not sum to one");
    for (const auto& mu : params.means)
        if (!mu.same_shape(params.means.front())) throw DimensionError("cluster means have different shapes");
    check_conformable(params.means.front(), params.sigmas);
    for (std::size_t m = 0; m < params.sigmas.size(); ++m) {
        const auto& s = params.sigmas[m];
        if (asymmetry(s) > 1e-10) throw NumericalError("covariance " + std::to_string(m) + " is not symmetric");
        if (!(min_eigenvalue(s) > 0.0))
            throw NumericalError("covariance " + std::to_string(m) + " is not positive definite");
        if (require_identifiable && m > 0 && std::abs(s(0, 0) - 1.0) > 1e-8)
            throw ConfigError("covariance " + std::to_string(m) + " violates sigma_11 = 1");
    }
}

void apply_identifiability(std::vector<Matrix>& sigmas) {
    double carried = 1.0;
    for (std::size_t m = 1; m < sigmas.size(); ++m) {
        const double s11 = sigmas[m](0, 0);
        if (!(s11 > 0.0)) throw NumericalError("cannot rescale covariance with non-positive (1,1) entry");
        sigmas[m] /= s11;
        carried *= s11;
    }
    if (!sigmas.empty()) sigmas.front() *= carried;
}

std::size_t DiscriminantSet::support_size() const {
    std::size_t count = 0;
    for (const auto& b : coefs) count += static_cast<std::size_t>((b.values().array() != 0.0).count());
    return count;
}

CovarianceFactors::CovarianceFactors(const std::vector<Matrix>& sigmas) {
    for (const auto& s : sigmas) {
        SpdFactor f(s);
        log_dets_.push_back(f.log_det());
        inverses_.push_back(f.inverse());
        inv_sqrts_.push_back(f.inv_sqrt());
    }
}

double CovarianceFactors::weighted_log_det(const Dims& dims) const {
    const double p = static_cast<double>(dims_product(dims));
    double total = 0.0;
    for (std::size_t m = 0; m < log_dets_.size(); ++m) total += p / static_cast<double>(dims[m]) * log_dets_[m];
    return total;
}

double log_density(const Tensor& x, const Tensor& mu, const std::vector<Matrix>& sigmas) {
    if (!x.same_shape(mu)) throw DimensionError("log_density: observation and mean differ in shape");
    check_conformable(x, sigmas);
    const CovarianceFactors factors(sigmas);
    const Tensor centered = x - mu;
    const double quad = inner(tucker(centered, factors.inverses()), centered);
    const double p = static_cast<double>(x.size());
    return -0.5 * p * kLog2Pi - 0.5 * factors.weighted_log_det(x.dims()) - 0.5 * quad;
}

DiscriminantSet discriminants(const TnmmParams& params) {
    const auto precisions = inverses(params.sigmas);
    DiscriminantSet out;
    for (std::size_t k = 1; k < params.clusters(); ++k)
        out.coefs.push_back(tucker(params.means[k] - params.means[0], precisions));
    return out;
}

Vector cluster_scores(const Tensor& x, const TnmmParams& params, const DiscriminantSet& discs) {
    const auto k_total = params.clusters();
    if (discs.coefs.size() + 1 != k_total) throw DimensionError("discriminant set does not match cluster count");
    Vector scores(static_cast<Eigen::Index>(k_total));
    scores[0] = std::log(params.pis[0]);
    for (std::size_t k = 1; k < k_total; ++k) {
        const auto& b = discs.coefs[k - 1];
        const double shift = 0.5 * (inner(params.means[k], b) + inner(params.means[0], b));
        scores[static_cast<Eigen::Index>(k)] = std::log(params.pis[k]) + inner(x, b) - shift;
    }
    return scores;
}

Vector softmax(const Vector& scores) {
    const double top = scores.maxCoeff();
    Vector w = (scores.array() - top).exp();
    return w / w.sum();
}

Vector posteriors(const Tensor& x, const TnmmParams& params, const DiscriminantSet& discs) {
    return softmax(cluster_scores(x, params, discs));
}

int optimal_assign(const Tensor& x, const TnmmParams& params, const DiscriminantSet& discs) {
    const Vector scores = cluster_scores(x, params, discs);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return static_cast<int>(best);
}

double separation(const TnmmParams& params) {
    if (params.clusters() != 2) throw ConfigError("separation is defined for two clusters only");
    const Tensor diff = params.means[1] - params.means[0];
    return inner(diff, tucker(diff, inverses(params.sigmas)));
}

Matrix joint_log_densities(std::span<const Tensor> data, const TnmmParams& params) {
    const CovarianceFactors factors(params.sigmas);
    const auto& dims = params.dims();
    const double constant = -0.5 * static_cast<double>(dims_product(dims)) * kLog2Pi -
                            0.5 * factors.weighted_log_det(dims);
    std::vector<Tensor> whitened_means;
    for (const auto& mu : params.means) whitened_means.push_back(tucker(mu, factors.inv_sqrts()));

    Matrix out(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(params.clusters()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].same_shape(params.means.front())) throw DimensionError("observation shape mismatch");
        const Tensor y = tucker(data[i], factors.inv_sqrts());
        for (std::size_t k = 0; k < params.clusters(); ++k) {
            const double quad = (y.values() - whitened_means[k].values()).squaredNorm();
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                std::log(params.pis[k]) + constant - 0.5 * quad;
        }
    }
    return out;
}

double observed_log_likelihood(std::span<const Tensor> data, const TnmmParams& params) {
    const Matrix joint = joint_log_densities(data, params);
    double total = 0.0;
    for (Eigen::Index i = 0; i < joint.rows(); ++i) {
        const double top = joint.row(i).maxCoeff();
        total += top + std::log((joint.row(i).array() - top).exp().sum());
    }
    return total;
}

ProfiledLikelihood profiled_log_likelihood(std::span<const Tensor> data, const TnmmParams& params, int max_iters,
                                           double tol) {
    const Matrix joint = joint_log_densities(data, params);
    const CovarianceFactors factors(params.sigmas);
    const auto& dims = params.dims();
    const double p = static_cast<double>(dims_product(dims));
    const double n = static_cast<double>(data.size());
    const double constant = -0.5 * p * kLog2Pi - 0.5 * factors.weighted_log_det(dims);

    // joint = log pi_k + constant - d/2, so the distances follow without a second pass.
    Matrix dist(joint.rows(), joint.cols());
    for (Eigen::Index k = 0; k < joint.cols(); ++k)
        dist.col(k) = -2.0 * (joint.col(k).array() - std::log(params.pis[static_cast<std::size_t>(k)]) - constant);

    auto evaluate = [&](double c, Matrix* resp) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < joint.rows(); ++i) {
            Vector row = joint.row(i).transpose().array() - 0.5 * p * std::log(c) +
                         0.5 * (1.0 - 1.0 / c) * dist.row(i).transpose().array();
            const double top = row.maxCoeff();
            const Vector w = (row.array() - top).exp();
            const double sum = w.sum();
            total += top + std::log(sum);
            if (resp) resp->row(i) = (w / sum).transpose();
        }
        return total;
    };

    ProfiledLikelihood out;
    Matrix resp(joint.rows(), joint.cols());
    out.loglik = evaluate(1.0, &resp);
    double c = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        const double next = (resp.array() * dist.array()).sum() / (n * p);
        if (!(next > 0.0) || !std::isfinite(next)) break;
        const double ll = evaluate(next, &resp);
        const bool done = std::abs(next - c) <= tol * c;
        if (ll >= out.loglik) {
            out.loglik = ll;
            out.scale = next;
        }
        c = next;
        if (done) break;
    }
    return out;
}

std::vector<int> row_argmax(const Matrix& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < m.cols(); ++k)
            if (m(i, k) > m(i, best)) best = k;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

}  // namespace tensorclust

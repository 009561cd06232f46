#include "tensorclust/moments.hpp"

#include <cmath>
#include <string>

#include "tensorclust/error.hpp"

namespace tensorclust {

DataMoments::DataMoments(std::span<const Tensor> data) : n_(data.size()) {
    if (data.empty()) throw ConfigError("dataset is empty");
    const auto& dims = data.front().dims();
    center_ = Tensor(dims);
    for (const auto& x : data) {
        if (!x.same_shape(data.front())) throw DimensionError("observations have inconsistent dimensions");
        center_ += x;
    }
    center_ *= 1.0 / static_cast<double>(n_);
    for (std::size_t m = 0; m < dims.size(); ++m) {
        const auto pm = static_cast<Eigen::Index>(dims[m]);
        grams_.push_back(Matrix::Zero(pm, pm));
    }
    for (const auto& x : data) {
        const Tensor centered = x - center_;
        for (std::size_t m = 0; m < dims.size(); ++m) add_mode_scatter(centered, m, 1.0, grams_[m]);
    }
}

void check_responsibilities(const Matrix& resp, std::size_t n) {
    if (static_cast<std::size_t>(resp.rows()) != n)
        throw DimensionError("responsibility matrix has " + std::to_string(resp.rows()) + " rows for " +
                             std::to_string(n) + " observations");
    if (resp.cols() < 1) throw DimensionError("responsibility matrix has no columns");
    if ((resp.array() < 0.0).any()) throw ConfigError("negative responsibility");
    for (Eigen::Index i = 0; i < resp.rows(); ++i)
        if (std::abs(resp.row(i).sum() - 1.0) > 1e-8) throw ConfigError("responsibility row does not sum to one");
}

TnmmParams moment_update(std::span<const Tensor> data, const Matrix& resp, const DataMoments& moments) {
    const std::size_t n = data.size();
    if (n < 2) throw ConfigError("need at least two observations");
    if (moments.size() != n) throw DimensionError("moment cache was built for a different dataset");
    check_responsibilities(resp, n);
    const auto k_total = static_cast<std::size_t>(resp.cols());
    const auto& dims = data.front().dims();
    const double nd = static_cast<double>(n);

    TnmmParams out;
    const Vector mass = resp.colwise().sum().transpose();
    for (std::size_t k = 0; k < k_total; ++k) {
        const double nk = mass[static_cast<Eigen::Index>(k)];
        if (nk < 1.0) throw DegenerateClusterError(static_cast<int>(k), -1, nk);
        out.pis.push_back(nk / nd);
        Tensor mu(dims);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            if (w != 0.0) mu.values() += w * data[i].values();
        }
        mu *= 1.0 / nk;
        out.means.push_back(std::move(mu));
    }

    // Element (1,...,1) within-cluster variance, carried by the first mode.
    double corner_var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < k_total; ++k) {
            const double d = data[i][0] - out.means[k][0];
            corner_var += resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * d * d;
        }
    corner_var /= nd;

    const double p = static_cast<double>(dims_product(dims));
    for (std::size_t m = 0; m < dims.size(); ++m) {
        Matrix scatter = moments.gram(m);
        for (std::size_t k = 0; k < k_total; ++k)
            add_mode_scatter(out.means[k] - moments.center(), m, -mass[static_cast<Eigen::Index>(k)], scatter);
        const double qm = p / static_cast<double>(dims[m]);
        Matrix sigma = scatter / (nd * qm);
        sigma = 0.5 * (sigma + sigma.transpose());
        repair_spd(sigma);
        const double s11 = sigma(0, 0);
        if (!(s11 > 0.0)) throw NumericalError("intermediate covariance has non-positive (1,1) entry");
        if (m == 0) {
            if (!(corner_var > 0.0)) throw NumericalError("element (1,...,1) has zero within-cluster variance");
            sigma *= corner_var / s11;
        } else {
            sigma /= s11;
        }
        out.sigmas.push_back(std::move(sigma));
    }
    return out;
}

}  // namespace tensorclust

#include "tensorclust/em.hpp"

#include <cmath>
#include <string>

#include "tensorclust/error.hpp"

namespace tensorclust {

void validate(const EmConfig& config) {
    if (config.max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (!(config.mean_shift_tol >= 0.0)) throw ConfigError("mean_shift_tol must be nonnegative");
    if (config.flipflop_max < 1) throw ConfigError("flipflop_max must be at least 1");
    if (!(config.flipflop_tol > 0.0)) throw ConfigError("flipflop_tol must be positive");
}

namespace {

std::vector<Matrix> identified(std::vector<Matrix> sigmas) {
    apply_identifiability(sigmas);
    return sigmas;
}

}  // namespace

FlipflopResult flipflop_sigma(std::span<const Tensor> data, const Matrix& resp, std::span<const Tensor> means,
                              const std::vector<Matrix>& sigmas_init, const EmConfig& config) {
    validate(config);
    const std::size_t n = data.size();
    check_responsibilities(resp, n);
    if (means.size() != static_cast<std::size_t>(resp.cols())) throw DimensionError("means do not match responsibilities");
    const auto& dims = means.front().dims();
    if (sigmas_init.size() != dims.size()) throw DimensionError("wrong number of initial covariances");
    const std::size_t order = dims.size();
    const double p = static_cast<double>(dims_product(dims));

    FlipflopResult out;
    out.sigmas = sigmas_init;
    std::vector<Matrix> roots(order);
    for (int sweep = 1; sweep <= config.flipflop_max; ++sweep) {
        const auto before = identified(out.sigmas);
        for (std::size_t m = 0; m < order; ++m) {
            for (std::size_t l = 0; l < order; ++l)
                if (l != m) roots[l] = SpdFactor(out.sigmas[l]).inv_sqrt(1e-10);
            std::vector<Tensor> white_means;
            for (const auto& mu : means) white_means.push_back(tucker_except(mu, roots, m));
            const auto pm = static_cast<Eigen::Index>(dims[m]);
            Matrix scatter = Matrix::Zero(pm, pm);
            for (std::size_t i = 0; i < n; ++i) {
                const Tensor y = tucker_except(data[i], roots, m);
                for (std::size_t k = 0; k < means.size(); ++k) {
                    const double w = resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                    if (w > 0.0) add_mode_scatter(y - white_means[k], m, w, scatter);
                }
            }
            Matrix sigma = scatter / (static_cast<double>(n) * p / static_cast<double>(dims[m]));
            sigma = 0.5 * (sigma + sigma.transpose());
            repair_spd(sigma);
            out.sigmas[m] = std::move(sigma);
        }
        out.sweeps = sweep;
        const auto after = identified(out.sigmas);
        double change = 0.0;
        for (std::size_t m = 0; m < order; ++m) change = std::max(change, (after[m] - before[m]).cwiseAbs().maxCoeff());
        if (order == 1 || change < config.flipflop_tol) {
            out.converged = true;
            break;
        }
    }
    apply_identifiability(out.sigmas);
    return out;
}

FitResult em_fit(std::span<const Tensor> data, int k, const EmConfig& config, const TnmmParams& init) {
    validate(config);
    if (k < 1) throw ConfigError("number of clusters must be positive");
    if (data.size() <= static_cast<std::size_t>(k)) throw ConfigError("need more observations than clusters");
    if (init.clusters() != static_cast<std::size_t>(k)) throw ConfigError("initial estimate has wrong cluster count");
    validate(init, false);
    for (const auto& x : data)
        if (!x.same_shape(init.means.front())) throw DimensionError("observation dimensions differ from the model");

    const std::size_t n = data.size();
    const auto& dims = init.dims();
    FitResult result;
    TnmmParams params = init;
    Matrix resp;
    result.loglik_trace.push_back(observed_log_likelihood(data, params));
    for (int t = 0; t < config.max_iters; ++t) {
        resp = estep_weights(data, params, discriminants(params));

        TnmmParams next;
        const Vector mass = resp.colwise().sum().transpose();
        for (int j = 0; j < k; ++j) {
            if (mass[j] < 1.0) throw DegenerateClusterError(j, t + 1, mass[j]);
            next.pis.push_back(mass[j] / static_cast<double>(n));
            Tensor mu(dims);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = resp(static_cast<Eigen::Index>(i), j);
                if (w != 0.0) mu.values() += w * data[i].values();
            }
            mu *= 1.0 / mass[j];
            next.means.push_back(std::move(mu));
        }
        auto ff = flipflop_sigma(data, resp, next.means, params.sigmas, config);
        next.sigmas = std::move(ff.sigmas);

        const double shift = mean_shift(next, params);
        params = std::move(next);
        result.iters = t + 1;
        result.mean_shift_trace.push_back(shift);
        result.loglik_trace.push_back(observed_log_likelihood(data, params));
        if (!ff.converged) ++result.inner_nonconverged;
        if (shift <= config.mean_shift_tol) {
            result.converged = true;
            break;
        }
    }
    result.discs = discriminants(params);
    result.params = std::move(params);
    result.responsibilities = std::move(resp);
    result.labels = row_argmax(result.responsibilities);
    result.support_size = result.discs.support_size();
    result.bic = bic(data, result);
    return result;
}

}  // namespace tensorclust

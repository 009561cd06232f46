#pragma once

#include <random>
#include <vector>

#include "oracles.hpp"
#include "tensorclust/model.hpp"
#include "tensorclust/simulate.hpp"

namespace testing_support {

using namespace tensorclust;

/// Random valid model with unequal weights.
inline TnmmParams random_params(const Dims& dims, int k, std::mt19937_64& rng, double mean_scale = 1.0) {
    TnmmParams p;
    std::uniform_real_distribution<double> u(0.5, 1.5);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        p.pis.push_back(u(rng));
        total += p.pis.back();
    }
    for (double& pi : p.pis) pi /= total;
    for (int j = 0; j < k; ++j) p.means.push_back(mean_scale * oracle::random_tensor(dims, rng));
    for (std::size_t d : dims) p.sigmas.push_back(oracle::random_spd(static_cast<Eigen::Index>(d), rng));
    apply_identifiability(p.sigmas);
    return p;
}

/// Observations drawn from `params` with labels chosen by the weights.
inline std::pair<std::vector<Tensor>, std::vector<int>> draw(const TnmmParams& params, std::size_t n,
                                                            std::uint64_t seed) {
    sim::Rng rng(seed);
    std::discrete_distribution<int> pick(params.pis.begin(), params.pis.end());
    std::vector<sim::TnSampler> samplers;
    for (const auto& mu : params.means) samplers.emplace_back(mu, params.sigmas);
    std::vector<Tensor> data;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = pick(rng);
        labels.push_back(c);
        data.push_back(samplers[static_cast<std::size_t>(c)](rng));
    }
    return {std::move(data), std::move(labels)};
}

/// Two-cluster model with means +-shift/2 on the first entry and identity covariances.
inline TnmmParams two_blobs(const Dims& dims, double shift) {
    TnmmParams p;
    p.pis = {0.5, 0.5};
    Tensor a = Tensor::zeros(dims);
    Tensor b = Tensor::zeros(dims);
    a[0] = -shift / 2;
    b[0] = shift / 2;
    p.means = {a, b};
    for (std::size_t d : dims) p.sigmas.push_back(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    return p;
}

}  // namespace testing_support

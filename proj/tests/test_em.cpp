#include "doctest.h"
#include "helpers.hpp"
#include "tensorclust/em.hpp"
#include "tensorclust/error.hpp"
#include "tensorclust/kmeans.hpp"

using namespace tensorclust;
using testing_support::draw;
using testing_support::random_params;

namespace {

/// Complete-data log-likelihood at fixed weights and means.
double complete_loglik(const std::vector<Tensor>& data, const Matrix& resp, const std::vector<Tensor>& means,
                       const std::vector<Matrix>& sigmas) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t k = 0; k < means.size(); ++k)
            s += resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * log_density(data[i], means[k], sigmas);
    return s;
}

}  // namespace

TEST_CASE("flip-flop with one mode is the weighted scatter") {
    std::mt19937_64 rng(30);
    std::vector<Tensor> data;
    for (int i = 0; i < 25; ++i) data.push_back(oracle::random_tensor({4}, rng));
    const std::vector<Tensor> means{Tensor::zeros({4})};
    const auto r = flipflop_sigma(data, Matrix::Ones(25, 1), means, {Matrix::Identity(4, 4)}, EmConfig{});
    CHECK(r.sweeps == 1);
    CHECK(r.converged);
    Matrix expect = Matrix::Zero(4, 4);
    for (const auto& x : data) expect += x.values() * x.values().transpose();
    expect /= 25.0;
    CHECK((r.sigmas[0] - expect).norm() < 1e-12);
}

TEST_CASE("flip-flop recovers an exact Kronecker scatter") {
    std::mt19937_64 rng(31);
    const Matrix a = oracle::random_spd(3, rng);
    Matrix b = oracle::random_spd(4, rng);
    b /= b(0, 0);
    // Observations whose unfolded scatter is exactly proportional to B kron A:
    // Z_i = e_j e_l^T scaled, mapped through the square roots.
    const Matrix ra = Eigen::SelfAdjointEigenSolver<Matrix>(a).operatorSqrt();
    const Matrix rb = Eigen::SelfAdjointEigenSolver<Matrix>(b).operatorSqrt();
    std::vector<Tensor> data;
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 4; ++l)
            for (double s : {-1.0, 1.0}) {
                Tensor z = Tensor::zeros({3, 4});
                const std::size_t idx[] = {static_cast<std::size_t>(j), static_cast<std::size_t>(l)};
                z.at(idx) = s;
                const std::vector<Matrix> roots{ra, rb};
                data.push_back(tucker(z, roots));
            }
    const std::size_t n = data.size();
    EmConfig cfg;
    cfg.flipflop_max = 200;
    cfg.flipflop_tol = 1e-12;
    const auto r = flipflop_sigma(data, Matrix::Ones(static_cast<Eigen::Index>(n), 1), std::vector<Tensor>{Tensor::zeros({3, 4})},
                                  {Matrix::Identity(3, 3), Matrix::Identity(4, 4)}, cfg);
    CHECK(r.converged);
    // The sample has covariance (B kron A) / (number of sign pairs): scale sits in the first mode.
    const Matrix expect = oracle::kron(b, a) / 24.0 * 2.0;
    CHECK((oracle::kron(r.sigmas[1], r.sigmas[0]) - expect).norm() < 1e-6 * expect.norm());
    CHECK((r.sigmas[1] - b).norm() < 1e-6);
}

TEST_CASE("flip-flop sweeps do not decrease the complete-data likelihood") {
    std::mt19937_64 rng(32);
    const auto truth = random_params({3, 4, 2}, 2, rng);
    const auto [data, labels] = draw(truth, 40, 5);
    const Matrix resp = one_hot(labels, 2);
    const TnmmParams start = init_params(data, labels, 2);
    std::vector<Matrix> init{Matrix::Identity(3, 3), Matrix::Identity(4, 4), Matrix::Identity(2, 2)};
    double prev = complete_loglik(data, resp, start.means, init);
    for (int sweeps = 1; sweeps <= 6; ++sweeps) {
        EmConfig cfg;
        cfg.flipflop_max = sweeps;
        cfg.flipflop_tol = 1e-300;
        const auto r = flipflop_sigma(data, resp, start.means, init, cfg);
        const double ll = complete_loglik(data, resp, start.means, r.sigmas);
        CHECK(ll >= prev - 1e-8);
        prev = ll;
        for (const auto& s : r.sigmas) {
            CHECK(asymmetry(s) <= 1e-12);
            CHECK(min_eigenvalue(s) > 0.0);
        }
        CHECK(r.sigmas[1](0, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("EM log-likelihood is monotone") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(100 + seed);
        const auto truth = random_params({3, 2, 2}, 2, rng, 0.8);
        const auto [data, labels] = draw(truth, 60, seed);
        KmeansConfig kc;
        kc.seed = seed;
        const TnmmParams init = init_params(data, kmeans_labels(data, 2, kc), 2);
        EmConfig cfg;
        cfg.mean_shift_tol = 0.0;
        cfg.max_iters = 15;
        const FitResult fit = em_fit(data, 2, cfg, init);
        REQUIRE(fit.loglik_trace.size() == static_cast<std::size_t>(fit.iters) + 1);
        for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t)
            CHECK(fit.loglik_trace[t] >= fit.loglik_trace[t - 1] - 1e-8);
    }
}

TEST_CASE("EM with one cluster is the tensor normal MLE") {
    TnmmParams truth;
    truth.pis = {1.0};
    truth.means = {Tensor::zeros({3, 3})};
    truth.sigmas = {sim::ar_matrix(3, 0.8), sim::cs_matrix(3, 0.3)};
    const auto [data, labels] = draw(truth, 2000, 12);
    const TnmmParams init = init_params(data, labels, 1);
    const FitResult fit = em_fit(data, 1, EmConfig{}, init);
    CHECK(fit.iters <= 2);
    // The MLE and the moment estimator agree within sampling error.
    CHECK((fit.params.sigmas[0] - init.sigmas[0]).cwiseAbs().maxCoeff() < 0.1);
    CHECK((fit.params.sigmas[1] - init.sigmas[1]).cwiseAbs().maxCoeff() < 0.1);
    CHECK((fit.params.sigmas[0] - truth.sigmas[0]).cwiseAbs().maxCoeff() < 0.1);
    CHECK((fit.params.sigmas[1] - truth.sigmas[1]).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("EM separates far-apart clusters") {
    const auto truth = testing_support::two_blobs({3, 2}, 12.0);
    const auto [data, labels] = draw(truth, 100, 2);
    KmeansConfig kc;
    const TnmmParams init = init_params(data, kmeans_labels(data, 2, kc), 2);
    const FitResult fit = em_fit(data, 2, EmConfig{}, init);
    CHECK(sim::clustering_error(fit.labels, labels, 2) == 0.0);
    CHECK(fit.converged);
    CHECK_NOTHROW(validate(fit.params));
}

TEST_CASE("identity covariances and equal weights give the nearest-centroid rule") {
    std::mt19937_64 rng(33);
    TnmmParams p;
    p.pis = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    for (int k = 0; k < 3; ++k) p.means.push_back(oracle::random_tensor({2, 3}, rng));
    p.sigmas = {Matrix::Identity(2, 2), Matrix::Identity(3, 3)};
    const auto d = discriminants(p);
    for (int r = 0; r < 50; ++r) {
        const Tensor x = oracle::random_tensor({2, 3}, rng);
        int nearest = 0;
        double best = 1e300;
        for (int k = 0; k < 3; ++k) {
            const double dist = (x.values() - p.means[static_cast<std::size_t>(k)].values()).squaredNorm();
            if (dist < best) {
                best = dist;
                nearest = k;
            }
        }
        CHECK(optimal_assign(x, p, d) == nearest);
    }
}

TEST_CASE("EM config and input checks") {
    EmConfig c;
    c.flipflop_max = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = EmConfig{};
    c.flipflop_tol = 0.0;
    CHECK_THROWS_AS(validate(c), ConfigError);

    std::mt19937_64 rng(34);
    const auto p = random_params({2, 2}, 2, rng);
    const auto [data, labels] = draw(p, 20, 1);
    CHECK_THROWS_AS(em_fit(data, 3, EmConfig{}, p), ConfigError);
    TnmmParams init = p;
    init.pis = {1.0 - 1e-300, 1e-300};
    init.means[1] = init.means[0] + Tensor::constant({2, 2}, 1e3);
    CHECK_THROWS_AS(em_fit(data, 2, EmConfig{}, init), DegenerateClusterError);
}

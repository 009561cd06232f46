#include "doctest.h"
#include "helpers.hpp"
#include "tensorclust/error.hpp"
#include "tensorclust/kmeans.hpp"

using namespace tensorclust;

TEST_CASE("k-means basics") {
    std::mt19937_64 rng(40);
    std::vector<Tensor> data;
    for (int i = 0; i < 30; ++i) data.push_back(oracle::random_tensor({2, 2}, rng));

    SUBCASE("one cluster") {
        const auto labels = kmeans_labels(data, 1, KmeansConfig{});
        for (int l : labels) CHECK(l == 0);
    }
    SUBCASE("two point masses") {
        std::vector<Tensor> pts;
        std::vector<int> truth;
        for (int i = 0; i < 10; ++i) {
            pts.push_back(Tensor::constant({2, 2}, i % 2 ? 5.0 : -5.0));
            truth.push_back(i % 2);
        }
        CHECK(sim::clustering_error(kmeans_labels(pts, 2, KmeansConfig{}), truth, 2) == 0.0);
    }
    SUBCASE("Lloyd objective does not increase") {
        const auto r = kmeans(data, 4, KmeansConfig{});
        for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
            CHECK(r.objective_trace[t] <= r.objective_trace[t - 1] + 1e-12);
        CHECK(r.centroids.cols() == 4);
        std::vector<int> counts(4, 0);
        for (int l : r.labels) ++counts[static_cast<std::size_t>(l)];
        for (int c : counts) CHECK(c > 0);
    }
    SUBCASE("deterministic under the seed") {
        KmeansConfig c;
        c.seed = 99;
        CHECK(kmeans_labels(data, 3, c) == kmeans_labels(data, 3, c));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(kmeans_labels(data, 0, KmeansConfig{}), ConfigError);
        CHECK_THROWS_AS(kmeans_labels(std::span<const Tensor>(data).first(2), 3, KmeansConfig{}), ConfigError);
        KmeansConfig c;
        c.restarts = 0;
        CHECK_THROWS_AS(kmeans_labels(data, 2, c), ConfigError);
    }
}

TEST_CASE("k-means on well separated blobs") {
    const auto truth = testing_support::two_blobs({3, 3}, 10.0);
    const auto [data, labels] = testing_support::draw(truth, 400, 3);
    CHECK(sim::clustering_error(kmeans_labels(data, 2, KmeansConfig{}), labels, 2) < 0.01);
}

TEST_CASE("initial estimate from labels") {
    std::mt19937_64 rng(41);
    const auto truth = testing_support::random_params({3, 3}, 2, rng);
    std::vector<Tensor> data;
    std::vector<int> labels;
    sim::Rng gen(4);
    for (int i = 0; i < 2000; ++i) {
        labels.push_back(i % 2);
        data.push_back(sim::sample_tn(truth.means[static_cast<std::size_t>(i % 2)], truth.sigmas, gen));
    }
    const TnmmParams init = init_params(data, labels, 2);
    CHECK_NOTHROW(validate(init));
    CHECK(init.pis[0] == 0.5);
    CHECK(init.pis[1] == 0.5);
    for (std::size_t m = 0; m < 2; ++m) CHECK((init.sigmas[m] - truth.sigmas[m]).cwiseAbs().maxCoeff() < 0.1);

    std::vector<int> bad = labels;
    bad[0] = 2;
    CHECK_THROWS_AS(init_params(data, bad, 2), ConfigError);
    CHECK_THROWS_AS(init_params(data, std::span<const int>(labels).first(10), 2), DimensionError);
    CHECK(one_hot(std::vector<int>{1, 0}, 2) == Matrix{{0.0, 1.0}, {1.0, 0.0}});
}

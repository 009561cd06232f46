#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "tensorclust/error.hpp"
#include "tensorclust/simulate.hpp"

using namespace tensorclust;
using namespace tensorclust::sim;

namespace {

Vector sorted_eigenvalues(const Matrix& m) {
    Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("AR and CS covariances") {
    CHECK(ar_matrix(4, 0.0) == Matrix::Identity(4, 4));
    CHECK(ar_matrix(2, 0.8) == Matrix{{1.0, 0.8}, {0.8, 1.0}});
    CHECK(ar_matrix(5, 0.5)(0, 3) == doctest::Approx(0.125));
    CHECK(sorted_eigenvalues(ar_matrix(30, 0.9))[0] > 0.0);
    CHECK_THROWS_AS(ar_matrix(3, 1.0), ConfigError);

    CHECK(cs_matrix(3, 0.0) == Matrix::Identity(3, 3));
    const Matrix c = cs_matrix(3, 0.3);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(1, 2) == 0.3);
    CHECK(sorted_eigenvalues(cs_matrix(10, 0.3))[0] == doctest::Approx(0.7));
    CHECK(sorted_eigenvalues(cs_matrix(10, 0.3))[9] == doctest::Approx(1.0 + 9 * 0.3));
    CHECK_THROWS_AS(cs_matrix(5, -0.3), ConfigError);
    CHECK_THROWS_AS(cs_matrix(5, 1.0), ConfigError);
    CHECK_NOTHROW(cs_matrix(5, -0.2));
}

TEST_CASE("sparse precision covariance") {
    Rng rng(1);
    const auto d = sparse_precision_draw(10, rng);
    CHECK(sorted_eigenvalues(d.sigma)[0] > 0.0);
    CHECK((d.omega.diagonal().array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK((d.sigma.inverse().diagonal().array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK(asymmetry(d.omega) < 1e-14);

    double hits = 0.0;
    double total = 0.0;
    for (int r = 0; r < 200; ++r) {
        const auto e = sparse_precision_draw(20, rng);
        hits += e.mask.sum();
        total += 400.0;
    }
    CHECK(hits / total == doctest::Approx(0.05).epsilon(0.15));
}

TEST_CASE("envelope block covariance") {
    Rng rng(2);
    const Matrix s = envelope_block_sigma(10, 4, rng);
    CHECK(s.norm() == doctest::Approx(1.0));
    CHECK(s.block(0, 4, 4, 6).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.block(4, 0, 6, 4).cwiseAbs().maxCoeff() == 0.0);
    std::vector<double> raw;
    for (int i = 1; i <= 4; ++i) raw.push_back(5.0 * i);
    for (int v = 1; v <= 6; ++v) raw.push_back(2.0 * std::log(v + 1.0));
    double fro = 0.0;
    for (double x : raw) fro += x * x;
    std::sort(raw.begin(), raw.end());
    const Vector ev = sorted_eigenvalues(s);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(ev[static_cast<Eigen::Index>(i)] == doctest::Approx(raw[i] / std::sqrt(fro)));
    CHECK_THROWS_AS(envelope_block_sigma(3, 4, rng), ConfigError);
    CHECK_NOTHROW(envelope_block_sigma(1, 1, rng));
}

TEST_CASE("random orthogonal matrices") {
    Rng rng(3);
    const Matrix q = random_orthogonal(6, rng);
    CHECK((q.transpose() * q - Matrix::Identity(6, 6)).norm() < 1e-12);
}

TEST_CASE("tensor normal sampling") {
    SUBCASE("standard entries pass a Kolmogorov-Smirnov check") {
        Rng rng(4);
        std::vector<double> z;
        const std::vector<Matrix> eye{Matrix::Identity(10, 10), Matrix::Identity(10, 10)};
        const Tensor zero = Tensor::zeros({10, 10});
        while (z.size() < 100000) {
            const Tensor x = sample_tn(zero, eye, rng);
            z.insert(z.end(), x.values().begin(), x.values().end());
        }
        std::sort(z.begin(), z.end());
        double d = 0.0;
        const double n = static_cast<double>(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double f = normal_cdf(z[i]);
            d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
        }
        // 1% critical value of the one-sample statistic.
        CHECK(d < 1.63 / std::sqrt(n));
    }
    SUBCASE("vectorized covariance is the Kronecker product") {
        Rng rng(5);
        const std::vector<Matrix> s{Matrix{{2.0, 0.6}, {0.6, 1.0}}, Matrix{{1.0, -0.4}, {-0.4, 1.5}}};
        Tensor mu({2, 2}, Vector{{1.0, -2.0, 0.5, 3.0}});
        const TnSampler draw(mu, s);
        Matrix acc = Matrix::Zero(4, 4);
        Vector mean = Vector::Zero(4);
        const int n = 5000;
        std::vector<Vector> xs;
        for (int i = 0; i < n; ++i) {
            xs.push_back(draw(rng).values());
            mean += xs.back();
        }
        mean /= n;
        for (const auto& x : xs) acc += (x - mean) * (x - mean).transpose();
        acc /= n - 1;
        const Matrix expect = oracle::kron(s[1], s[0]);
        // Entrywise standard error is at most sqrt((s_ii s_jj + s_ij^2)/n) < 0.06; allow ~4 of them.
        CHECK((acc - expect).cwiseAbs().maxCoeff() < 0.25);
        CHECK((mean - mu.values()).cwiseAbs().maxCoeff() < 0.1);
    }
    SUBCASE("non-SPD input is rejected") {
        Rng rng(6);
        CHECK_THROWS_AS(sample_tn(Tensor::zeros({2}), {Matrix{{1.0, 2.0}, {2.0, 1.0}}}, rng), NumericalError);
    }
}

TEST_CASE("presets build valid models") {
    for (const auto& name : preset_names()) {
        if (name == "M7") continue;
        const SimSpec spec = preset(name, 11);
        CHECK_NOTHROW(validate(spec));
        const TnmmParams p = build_model(spec);
        CHECK_NOTHROW(validate(p));
        CHECK(p.clusters() == static_cast<std::size_t>(spec.k));
        for (double pi : p.pis) CHECK(pi == doctest::Approx(1.0 / spec.k));
    }
    CHECK_THROWS_AS(preset("M8"), ConfigError);
}

TEST_CASE("M1 model structure") {
    const TnmmParams p = build_model(preset("M1", 3));
    const auto d = discriminants(p);
    const Tensor& b = d.coefs[0];
    for (const auto& idx : oracle::all_indices(b.dims())) {
        const bool inside = idx[0] < 6 && idx[1] == 0 && idx[2] == 0;
        CHECK(b.at(idx) == doctest::Approx(inside ? 0.5 : 0.0).epsilon(1e-9).scale(1.0));
    }
    CHECK(d.support_size() >= 6);
    // Delta = 0.25 * (sum of the leading 6x6 block of CS(0.3)).
    CHECK(separation(p) == doctest::Approx(3.75).epsilon(1e-10));
    // Optimal error of the two-cluster rule with equal weights is Phi(-sqrt(Delta)/2).
    CHECK(normal_cdf(-std::sqrt(separation(p)) / 2) == doctest::Approx(0.1665).epsilon(0.01));

    SimSpec scaled = preset("M1", 3);
    scaled.delta_scale = 2.5;
    CHECK(separation(build_model(scaled)) == doctest::Approx(2.5 * 3.75).epsilon(1e-10));
}

TEST_CASE("M4 mean differences live on the second-mode pattern") {
    const TnmmParams p = build_model(preset("M4", 1));
    for (std::size_t k = 1; k < 3; ++k) {
        const Tensor diff = p.means[k] - p.means[0];
        // With identity first and third modes only the second mode mixes the box.
        Tensor b = Tensor::zeros({10, 10, 4});
        for (std::size_t j = 0; j < 6; ++j) {
            const std::size_t idx[] = {j, 0, 0};
            b.at(idx) = k == 1 ? 0.8 : -0.8;
        }
        const Tensor expect = mode_mult(b, 1, p.sigmas[1]);
        CHECK((diff.values() - expect.values()).norm() < 1e-12);
        for (const auto& idx : oracle::all_indices(diff.dims()))
            if (idx[0] >= 6 || idx[2] != 0) CHECK(diff.at(idx) == 0.0);
    }
}

TEST_CASE("M6 corner means and envelope covariances") {
    const TnmmParams p = build_model(preset("M6", 5));
    CHECK(p.means[0].values().norm() == 0.0);
    for (std::size_t k = 1; k < 6; ++k)
        for (const auto& idx : oracle::all_indices(p.dims()))
            if (idx[0] >= 8 || idx[1] > 0 || idx[2] > 0) CHECK(p.means[k].at(idx) == 0.0);
    CHECK(p.sigmas[0].block(0, 8, 8, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.sigmas[1](0, 0) == doctest::Approx(1.0));
    CHECK(build_model(preset("M6", 6)).means[1].values() != p.means[1].values());
}

TEST_CASE("dataset generation") {
    SimSpec spec = preset("M3", 8);
    spec.n_per_cluster = 20;
    const auto ds = generate(spec);
    CHECK(ds.data.size() == 60);
    for (int k = 0; k < 3; ++k) CHECK(std::count(ds.labels.begin(), ds.labels.end(), k) == 20);
    const auto again = generate(spec);
    CHECK(again.data[17].values() == ds.data[17].values());
    spec.seed = 9;
    const auto other = generate(spec);
    CHECK(other.data[17].values() != ds.data[17].values());
    CHECK(other.truth.means[1].values() == ds.truth.means[1].values());

    SimSpec big = preset("M1", 2);
    big.n_per_cluster = 2000;
    const auto lots = generate(big);
    Tensor mean = Tensor::zeros({10, 10, 4});
    for (std::size_t i = 2000; i < 4000; ++i) mean += lots.data[i];
    mean *= 1.0 / 2000;
    CHECK((mean - lots.truth.means[1]).values().cwiseAbs().maxCoeff() < 0.12);
}

TEST_CASE("spec validation") {
    SimSpec s = preset("M1");
    s.covariances.pop_back();
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = preset("M1");
    s.mean.entries[0].ranges[0] = {0, 11};
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = preset("M1");
    s.mean.entries[0].cluster = 0;
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = preset("M1");
    s.covariances[1].rho = 1.2;
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = preset("M1");
    s.delta_scale = 0.0;
    CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("clustering error") {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2};
    CHECK(clustering_error(truth, truth, 3) == 0.0);
    const std::vector<int> permuted{2, 2, 0, 0, 1, 1};
    CHECK(clustering_error(permuted, truth, 3) == 0.0);

    std::vector<int> t150(150, 0);
    for (int i = 75; i < 150; ++i) t150[static_cast<std::size_t>(i)] = 1;
    std::vector<int> p150 = t150;
    for (int i = 0; i < 30; ++i) p150[static_cast<std::size_t>(i)] = 1;
    CHECK(clustering_error(p150, t150, 2) == doctest::Approx(0.2));

    std::mt19937_64 rng(7);
    for (int r = 0; r < 20; ++r) {
        const int k = 2 + r % 5;
        std::uniform_int_distribution<int> lab(0, k - 1);
        std::vector<int> a(40), b(40);
        for (int i = 0; i < 40; ++i) {
            a[static_cast<std::size_t>(i)] = lab(rng);
            b[static_cast<std::size_t>(i)] = lab(rng);
        }
        const double e = clustering_error(a, b, k);
        CHECK(e == doctest::Approx(oracle::brute_force_error(a, b, k)));
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> a2 = a, b2 = b;
        for (auto& x : a2) x = perm[static_cast<std::size_t>(x)];
        for (auto& x : b2) x = perm[static_cast<std::size_t>(x)];
        CHECK(clustering_error(a2, b, k) == e);
        CHECK(clustering_error(a, b2, k) == e);
    }
    // Balanced truth: the best relabeling always recovers at least 1/K.
    std::vector<int> bal, junk;
    for (int i = 0; i < 60; ++i) {
        bal.push_back(i % 4);
        junk.push_back((i * 7 + 3) % 4);
    }
    CHECK(clustering_error(junk, bal, 4) <= 1.0 - 1.0 / 4);

    CHECK_THROWS_AS(clustering_error(std::vector<int>{0}, std::vector<int>{0, 1}, 2), DimensionError);
    CHECK_THROWS_AS(clustering_error(std::vector<int>{0, 3}, std::vector<int>{0, 1}, 2), ConfigError);
    CHECK_THROWS_AS(clustering_error(truth, truth, 9), ConfigError);
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

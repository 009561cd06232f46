#include "tensorclust/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "tensorclust/error.hpp"
#include "tensorclust/moments.hpp"

namespace tensorclust {

namespace {

struct LloydRun {
    std::vector<int> labels;
    Matrix centroids;
    double inertia = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    bool all_nonempty = false;
};

Matrix plus_plus_seeds(const Matrix& x, int k, std::mt19937_64& rng) {
    const Eigen::Index n = x.cols();
    Matrix c(x.rows(), k);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    c.col(0) = x.col(pick(rng));
    Vector closest = (x.colwise() - c.col(0)).colwise().squaredNorm().transpose();
    for (int j = 1; j < k; ++j) {
        const double total = closest.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (chosen = 0; chosen < n - 1; ++chosen) {
                target -= closest[chosen];
                if (target < 0.0) break;
            }
        } else {
            chosen = pick(rng);
        }
        c.col(j) = x.col(chosen);
        closest = closest.cwiseMin((x.colwise() - c.col(j)).colwise().squaredNorm().transpose());
    }
    return c;
}

LloydRun lloyd(const Matrix& x, Matrix centroids, int max_iters) {
    const Eigen::Index n = x.cols();
    const Eigen::Index k = centroids.cols();
    LloydRun run;
    run.labels.assign(static_cast<std::size_t>(n), -1);
    Vector cost(n);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (x.col(i) - centroids.col(0)).squaredNorm();
            for (Eigen::Index j = 1; j < k; ++j) {
                const double d = (x.col(i) - centroids.col(j)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(j);
                }
            }
            cost[i] = best_d;
            if (run.labels[static_cast<std::size_t>(i)] != best) {
                run.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        run.trace.push_back(cost.sum());

        // Empty clusters take the point that is currently worst served.
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (int l : run.labels) ++counts[static_cast<std::size_t>(l)];
        for (Eigen::Index j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] > 0) continue;
            Eigen::Index far = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])] > 1 && cost[i] > cost[far])
                    far = i;
            if (counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])] <= 1) continue;
            --counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])];
            run.labels[static_cast<std::size_t>(far)] = static_cast<int>(j);
            ++counts[static_cast<std::size_t>(j)];
            cost[far] = 0.0;
            changed = true;
        }

        centroids.setZero();
        for (Eigen::Index i = 0; i < n; ++i) centroids.col(run.labels[static_cast<std::size_t>(i)]) += x.col(i);
        for (Eigen::Index j = 0; j < k; ++j)
            if (counts[static_cast<std::size_t>(j)] > 0) centroids.col(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
        run.all_nonempty = std::all_of(counts.begin(), counts.end(), [](Eigen::Index c) { return c > 0; });
        if (!changed) break;
    }
    run.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        run.inertia += (x.col(i) - centroids.col(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
    run.centroids = std::move(centroids);
    return run;
}

}  // namespace

KmeansResult kmeans(std::span<const Tensor> data, int k, const KmeansConfig& config) {
    if (k < 1) throw ConfigError("k-means needs at least one cluster");
    if (config.restarts < 1) throw ConfigError("k-means needs at least one restart");
    if (config.max_lloyd_iters < 1) throw ConfigError("k-means needs at least one Lloyd iteration");
    if (data.size() < static_cast<std::size_t>(k)) throw ConfigError("fewer observations than clusters");

    const auto p = static_cast<Eigen::Index>(data.front().size());
    Matrix x(p, static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].same_shape(data.front())) throw DimensionError("observations have inconsistent dimensions");
        x.col(static_cast<Eigen::Index>(i)) = data[i].values();
    }

    std::mt19937_64 rng(config.seed);
    LloydRun best;
    bool found = false;
    for (int r = 0; r < config.restarts; ++r) {
        LloydRun run = lloyd(x, plus_plus_seeds(x, k, rng), config.max_lloyd_iters);
        if (!run.all_nonempty) continue;
        if (!found || run.inertia < best.inertia) {
            best = std::move(run);
            found = true;
        }
    }
    if (!found) throw NumericalError("k-means left a cluster empty in every restart");
    return {std::move(best.labels), std::move(best.centroids), best.inertia, std::move(best.trace)};
}

std::vector<int> kmeans_labels(std::span<const Tensor> data, int k, const KmeansConfig& config) {
    return kmeans(data, k, config).labels;
}

Matrix one_hot(std::span<const int> labels, int k) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw ConfigError("label " + std::to_string(labels[i]) + " outside 0..K-1");
        out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return out;
}

TnmmParams init_params(std::span<const Tensor> data, std::span<const int> labels, int k) {
    if (labels.size() != data.size()) throw DimensionError("label count differs from observation count");
    const DataMoments moments(data);
    return moment_update(data, one_hot(labels, k), moments);
}

}  // namespace tensorclust

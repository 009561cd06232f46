#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensorclust/deem.hpp"
#include "tensorclust/em.hpp"
#include "tensorclust/kmeans.hpp"
#include "tensorclust/simulate.hpp"

namespace tensorclust {

enum class Method { optimal, kmeans, em, deem };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct BenchmarkOptions {
    std::vector<std::string> models{"M1"};
    std::vector<Method> methods{Method::optimal, Method::kmeans, Method::em, Method::deem};
    int replicates = 20;
    std::uint64_t seed = 0;
    /// 0 means one worker per hardware thread.
    int workers = 0;
    /// Empty means the default grid anchored at each replicate's initial estimate.
    std::vector<double> lambda_grid;
    int lambda_count = 20;
    double lambda_ratio = 100.0;
    double delta_scale = 1.0;
    DeemConfig deem;
    EmConfig em;
    KmeansConfig kmeans;
};

struct ReplicateOutcome {
    std::string model;
    Method method = Method::optimal;
    int replicate = 0;
    std::optional<double> error;
    int iters = 0;
    double lambda = 0.0;
    std::size_t support_size = 0;
    double seconds = 0.0;
    std::string failure;
};

struct CellSummary {
    std::string model;
    Method method = Method::optimal;
    /// Replicates that produced an error rate.
    int replicates = 0;
    int failures = 0;
    double mean_error = 0.0;
    /// sd / sqrt(replicates); absent with fewer than two replicates.
    std::optional<double> std_error;
    double mean_iters = 0.0;
    double wall_seconds = 0.0;
};

struct BenchmarkReport {
    std::vector<CellSummary> cells;
    std::vector<ReplicateOutcome> outcomes;

    const CellSummary* cell(const std::string& model, Method method) const;
};

/// Seed of one (model, replicate) pair; independent of scheduling.
std::uint64_t replicate_seed(std::uint64_t seed, const std::string& model, int replicate);

/// generate -> fit -> clustering_error for every (model, replicate, method).
BenchmarkReport run_benchmark(const BenchmarkOptions& options);

struct DeltaRow {
    double a = 0.0;
    CellSummary deem;
    CellSummary optimal;
    double mean_gap = 0.0;
    std::optional<double> gap_std_error;
};

/// Runs the options' first model at each separation multiplier. Replicate
/// seeds do not depend on `a`, so every row sees the same noise draws.
std::vector<DeltaRow> delta_sweep(const std::vector<double>& a_values, BenchmarkOptions options);

/// Mean and sd/sqrt(n) of a sample; the error is absent for n < 2.
std::pair<double, std::optional<double>> mean_and_se(const std::vector<double>& values);

}  // namespace tensorclust

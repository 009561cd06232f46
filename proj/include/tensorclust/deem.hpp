#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tensorclust/model.hpp"
#include "tensorclust/moments.hpp"

namespace tensorclust {

struct FixedLambda {
    double value = 0.0;
};

/// lambda^{(t+1)} = kappa lambda^{(t)} + (1 - kappa^{t+1}) / (1 - kappa) * c_lambda * sqrt(log p / n)
struct LambdaSchedule {
    double lambda0 = 0.0;
    double kappa = 0.25;
    double c_lambda = 1.0;
};

using LambdaMode = std::variant<FixedLambda, LambdaSchedule>;

struct DeemConfig {
    LambdaMode lambda = FixedLambda{};
    int max_iters = 50;
    double mean_shift_tol = 0.1;
    double inner_tol = 1e-6;
    int inner_max_passes = 200;
    std::uint64_t rng_seed = 0;
    /// Record the observed-data log-likelihood after every iteration.
    bool track_loglik = false;
};

void validate(const DeemConfig& config);

/// Penalty level used at iteration t (zero-based) for data of `p` elements and `n` observations.
double lambda_at(const LambdaMode& mode, int t, std::size_t p, std::size_t n);

struct FitResult {
    TnmmParams params;
    DiscriminantSet discs;
    Matrix responsibilities;
    std::vector<int> labels;
    int iters = 0;
    bool converged = false;
    double bic = 0.0;
    std::size_t support_size = 0;
    double lambda = 0.0;
    std::vector<double> mean_shift_trace;
    std::vector<double> loglik_trace;
    /// Inner solver passes that hit the pass limit before converging.
    int inner_nonconverged = 0;
};

// ---------------------------------------------------------------------------
// Enhanced E-step: sparse discriminant estimation.

/**
 * Blockwise coordinate descent for
 *
 *   sum_k ( <B_k, [[B_k; S_1..S_M]]> - 2 <B_k, D_k> ) + lambda sum_J ||b_{.,J}||_2
 *
 * where D_k are target tensors (mu_k - mu_1) and S_m the mode covariances.
 * Groups are the K-1 coefficients sharing one tensor position. The fitted
 * field [[B_k; S]] is kept up to date with rank-one updates and never forms
 * the Kronecker product.
 */
class GroupLassoSolver {
public:
    GroupLassoSolver(std::vector<Matrix> sigmas, std::vector<Tensor> targets);

    struct Result {
        DiscriminantSet discs;
        int passes = 0;
        bool converged = false;
    };

    Result solve(double lambda, const DiscriminantSet* warm, double tol = 1e-6, int max_passes = 200) const;

    /// Smallest lambda with the all-zero solution: 2 max_J ||D_{.,J}||.
    double lambda_max() const;

    double objective(const DiscriminantSet& discs, double lambda) const;
    /// Largest violation of the group-lasso optimality conditions.
    double kkt_residual(const DiscriminantSet& discs, double lambda) const;

    std::size_t groups() const noexcept { return p_; }

private:
    std::vector<Tensor> fitted(const DiscriminantSet& discs) const;

    std::vector<Matrix> sigmas_;
    std::vector<Tensor> targets_;
    Dims dims_;
    std::size_t p_ = 0;
    Vector diag_;  // Kronecker diagonal prod_m S_m(j_m, j_m)
};

/// Targets mu_k - mu_1 for k >= 2.
std::vector<Tensor> discriminant_targets(const TnmmParams& params);

GroupLassoSolver::Result estep_solve_b(const TnmmParams& params, double lambda, const DiscriminantSet* warm,
                                       double tol = 1e-6, int max_passes = 200);

/// n x K posterior weights with the plug-in discriminants.
Matrix estep_weights(std::span<const Tensor> data, const TnmmParams& params, const DiscriminantSet& discs);

// ---------------------------------------------------------------------------
// Enhanced M-step.

TnmmParams mstep(std::span<const Tensor> data, const Matrix& resp);
TnmmParams mstep(std::span<const Tensor> data, const Matrix& resp, const DataMoments& moments);

// ---------------------------------------------------------------------------
// Driver, criterion and tuning.

/// sum_k ||mu_k - mu'_k||_F^2
double mean_shift(const TnmmParams& a, const TnmmParams& b);

FitResult deem_fit(std::span<const Tensor> data, int k, const DeemConfig& config, const TnmmParams& init);
FitResult deem_fit(std::span<const Tensor> data, int k, const DeemConfig& config, const TnmmParams& init,
                   const DataMoments& moments);
/// `first_solve` seeds the first E-step solve and receives its solution, so
/// fits along a lambda path from one initial estimate can share work. The
/// first E-step problem is strictly convex, so the result does not depend
/// on the seed beyond the solver tolerance.
FitResult deem_fit(std::span<const Tensor> data, int k, const DeemConfig& config, const TnmmParams& init,
                   const DataMoments& moments, DiscriminantSet* first_solve);

/// -2 log-likelihood + log(n) |support|.
double bic(std::span<const Tensor> data, const FitResult& fit);
double bic(std::span<const Tensor> data, const TnmmParams& params, std::size_t support_size);

/// `count` log-spaced values from `lambda_max` down to lambda_max / `ratio`.
std::vector<double> lambda_grid(double lambda_max, int count = 20, double ratio = 100.0);

/// Default grid anchored at the full-shrinkage level of the initial estimate.
std::vector<double> default_lambda_grid(const TnmmParams& init, int count = 20, double ratio = 100.0);

struct GridPoint {
    double lambda = 0.0;
    std::optional<double> bic;
    int iters = 0;
    std::size_t support_size = 0;
    std::string error;
};

struct TuneResult {
    double best_lambda = 0.0;
    FitResult fit;
    std::vector<GridPoint> path;
};

/// Fixed-lambda fits over the grid; the smallest BIC wins, ties (within 1e-9 relative) to the smaller lambda.
TuneResult tune(std::span<const Tensor> data, int k, std::span<const double> grid, const DeemConfig& config,
                const TnmmParams& init);

struct SelectKResult {
    int k = 0;
    double lambda = 0.0;
    FitResult fit;
    std::vector<std::pair<int, TuneResult>> per_k;
};

struct KmeansConfig;

/// Joint BIC minimization over (K, lambda) with k-means initialization per K.
/// An empty lambda grid means the default grid for each K.
SelectKResult select_k(std::span<const Tensor> data, std::span<const int> k_grid, std::span<const double> grid,
                       const DeemConfig& config, const KmeansConfig& kmeans);

}  // namespace tensorclust

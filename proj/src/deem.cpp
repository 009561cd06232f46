#include "tensorclust/deem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tensorclust/error.hpp"
#include "tensorclust/kmeans.hpp"

namespace tensorclust {

void validate(const DeemConfig& config) {
    if (config.max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (!(config.mean_shift_tol >= 0.0)) throw ConfigError("mean_shift_tol must be nonnegative");
    if (!(config.inner_tol > 0.0)) throw ConfigError("inner_tol must be positive");
    if (config.inner_max_passes < 1) throw ConfigError("inner_max_passes must be at least 1");
    if (const auto* fixed = std::get_if<FixedLambda>(&config.lambda)) {
        if (!(fixed->value >= 0.0)) throw ConfigError("lambda must be nonnegative");
    } else {
        const auto& s = std::get<LambdaSchedule>(config.lambda);
        if (!(s.kappa > 0.0 && s.kappa < 0.5)) throw ConfigError("kappa must lie in (0, 1/2)");
        if (!(s.c_lambda > 0.0)) throw ConfigError("c_lambda must be positive");
        if (!(s.lambda0 >= 0.0)) throw ConfigError("lambda0 must be nonnegative");
    }
}

double lambda_at(const LambdaMode& mode, int t, std::size_t p, std::size_t n) {
    if (const auto* fixed = std::get_if<FixedLambda>(&mode)) return fixed->value;
    const auto& s = std::get<LambdaSchedule>(mode);
    const double floor_term = s.c_lambda * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
    double lambda = s.lambda0;
    double kappa_pow = 1.0;
    for (int step = 0; step <= t; ++step) {
        kappa_pow *= s.kappa;
        lambda = s.kappa * lambda + (1.0 - kappa_pow) / (1.0 - s.kappa) * floor_term;
    }
    return lambda;
}

// ---------------------------------------------------------------------------

GroupLassoSolver::GroupLassoSolver(std::vector<Matrix> sigmas, std::vector<Tensor> targets)
    : sigmas_(std::move(sigmas)), targets_(std::move(targets)) {
    if (sigmas_.empty()) throw DimensionError("solver needs at least one mode covariance");
    for (const auto& s : sigmas_) {
        if (s.rows() != s.cols()) throw DimensionError("mode covariance is not square");
        dims_.push_back(static_cast<std::size_t>(s.rows()));
    }
    for (const auto& t : targets_)
        if (t.dims() != dims_) throw DimensionError("target tensor does not match covariance sizes");
    p_ = dims_product(dims_);

    // diag(S_M kron ... kron S_1) in vec order.
    diag_ = sigmas_[0].diagonal();
    for (std::size_t m = 1; m < sigmas_.size(); ++m) {
        const Vector dm = sigmas_[m].diagonal();
        Vector next(diag_.size() * dm.size());
        for (Eigen::Index i = 0; i < dm.size(); ++i) next.segment(i * diag_.size(), diag_.size()) = dm[i] * diag_;
        diag_ = std::move(next);
    }
    if ((diag_.array() <= 0.0).any()) throw NumericalError("mode covariances must have positive diagonals");
}

std::vector<Tensor> GroupLassoSolver::fitted(const DiscriminantSet& discs) const {
    std::vector<Tensor> out;
    out.reserve(discs.coefs.size());
    for (const auto& b : discs.coefs) out.push_back(tucker(b, sigmas_));
    return out;
}

double GroupLassoSolver::lambda_max() const {
    double best = 0.0;
    for (std::size_t j = 0; j < p_; ++j) {
        double sq = 0.0;
        for (const auto& d : targets_) sq += d[j] * d[j];
        best = std::max(best, std::sqrt(sq));
    }
    return 2.0 * best;
}

double GroupLassoSolver::objective(const DiscriminantSet& discs, double lambda) const {
    if (discs.coefs.size() != targets_.size()) throw DimensionError("coefficient count mismatch");
    const auto fit = fitted(discs);
    double value = 0.0;
    for (std::size_t g = 0; g < targets_.size(); ++g)
        value += inner(discs.coefs[g], fit[g]) - 2.0 * inner(discs.coefs[g], targets_[g]);
    for (std::size_t j = 0; j < p_; ++j) {
        double sq = 0.0;
        for (const auto& b : discs.coefs) sq += b[j] * b[j];
        value += lambda * std::sqrt(sq);
    }
    return value;
}

double GroupLassoSolver::kkt_residual(const DiscriminantSet& discs, double lambda) const {
    if (discs.coefs.size() != targets_.size()) throw DimensionError("coefficient count mismatch");
    const auto fit = fitted(discs);
    const std::size_t groups = targets_.size();
    double worst = 0.0;
    Vector grad(static_cast<Eigen::Index>(groups));
    Vector b(static_cast<Eigen::Index>(groups));
    for (std::size_t j = 0; j < p_; ++j) {
        for (std::size_t g = 0; g < groups; ++g) {
            grad[static_cast<Eigen::Index>(g)] = 2.0 * (fit[g][j] - targets_[g][j]);
            b[static_cast<Eigen::Index>(g)] = discs.coefs[g][j];
        }
        const double bn = b.norm();
        const double r = bn > 0.0 ? (grad + lambda * b / bn).norm() : std::max(0.0, grad.norm() - lambda);
        worst = std::max(worst, r);
    }
    return worst;
}

GroupLassoSolver::Result GroupLassoSolver::solve(double lambda, const DiscriminantSet* warm, double tol,
                                                 int max_passes) const {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    const std::size_t groups = targets_.size();
    Result result;
    if (warm && warm->coefs.size() == groups) {
        for (const auto& b : warm->coefs)
            if (b.dims() != dims_) throw DimensionError("warm start has wrong dimensions");
        result.discs = *warm;
    } else {
        for (std::size_t g = 0; g < groups; ++g) result.discs.coefs.emplace_back(dims_);
    }
    if (groups == 0) {
        result.converged = true;
        return result;
    }

    auto& coefs = result.discs.coefs;
    std::vector<Tensor> fit = fitted(result.discs);
    const std::size_t order = dims_.size();
    std::vector<std::size_t> index(order);
    Vector column(static_cast<Eigen::Index>(p_));
    Vector z(static_cast<Eigen::Index>(groups));
    Vector delta(static_cast<Eigen::Index>(groups));

    // Column J of S_M kron ... kron S_1 written into `column`.
    auto build_column = [&](std::size_t j) {
        std::size_t rest = j;
        for (std::size_t m = 0; m < order; ++m) {
            index[m] = rest % dims_[m];
            rest /= dims_[m];
        }
        Eigen::Index len = static_cast<Eigen::Index>(dims_[0]);
        column.head(len) = sigmas_[0].col(static_cast<Eigen::Index>(index[0]));
        for (std::size_t m = 1; m < order; ++m) {
            const auto pm = static_cast<Eigen::Index>(dims_[m]);
            const auto jm = static_cast<Eigen::Index>(index[m]);
            for (Eigen::Index i = pm - 1; i >= 0; --i)
                column.segment(i * len, len) = sigmas_[m](i, jm) * column.head(len);
            len *= pm;
        }
    };

    auto update = [&](std::size_t j) -> double {
        const double sj = diag_[static_cast<Eigen::Index>(j)];
        for (std::size_t g = 0; g < groups; ++g)
            z[static_cast<Eigen::Index>(g)] = targets_[g][j] - fit[g][j] + sj * coefs[g][j];
        const double zn = z.norm();
        const double shrink = zn > 0.0 ? std::max(0.0, 1.0 - lambda / (2.0 * zn)) : 0.0;
        bool moved = false;
        for (std::size_t g = 0; g < groups; ++g) {
            const double next = shrink > 0.0 ? z[static_cast<Eigen::Index>(g)] / sj * shrink : 0.0;
            delta[static_cast<Eigen::Index>(g)] = next - coefs[g][j];
            if (delta[static_cast<Eigen::Index>(g)] != 0.0) moved = true;
            coefs[g][j] = next;
        }
        if (!moved) return 0.0;
        build_column(j);
        for (std::size_t g = 0; g < groups; ++g) {
            const double d = delta[static_cast<Eigen::Index>(g)];
            if (d != 0.0) fit[g].values() += d * column;
        }
        return delta.norm();
    };

    std::vector<std::size_t> active;
    while (result.passes < max_passes) {
        double change = 0.0;
        for (std::size_t j = 0; j < p_; ++j) change = std::max(change, update(j));
        ++result.passes;
        fit = fitted(result.discs);  // drop accumulated rounding from the rank-one updates
        if (change < tol) {
            result.converged = true;
            break;
        }
        active.clear();
        for (std::size_t j = 0; j < p_; ++j) {
            for (std::size_t g = 0; g < groups; ++g)
                if (coefs[g][j] != 0.0) {
                    active.push_back(j);
                    break;
                }
        }
        while (result.passes < max_passes) {
            double active_change = 0.0;
            for (auto j : active) active_change = std::max(active_change, update(j));
            ++result.passes;
            if (active_change < tol) break;
        }
    }
    return result;
}

std::vector<Tensor> discriminant_targets(const TnmmParams& params) {
    std::vector<Tensor> out;
    for (std::size_t k = 1; k < params.clusters(); ++k) out.push_back(params.means[k] - params.means[0]);
    return out;
}

GroupLassoSolver::Result estep_solve_b(const TnmmParams& params, double lambda, const DiscriminantSet* warm,
                                       double tol, int max_passes) {
    const GroupLassoSolver solver(params.sigmas, discriminant_targets(params));
    return solver.solve(lambda, warm, tol, max_passes);
}

Matrix estep_weights(std::span<const Tensor> data, const TnmmParams& params, const DiscriminantSet& discs) {
    const auto k_total = params.clusters();
    if (discs.coefs.size() + 1 != k_total) throw DimensionError("discriminant set does not match cluster count");
    Vector offset(static_cast<Eigen::Index>(k_total));
    offset[0] = std::log(params.pis[0]);
    for (std::size_t k = 1; k < k_total; ++k) {
        const auto& b = discs.coefs[k - 1];
        offset[static_cast<Eigen::Index>(k)] =
            std::log(params.pis[k]) - 0.5 * (inner(params.means[k], b) + inner(params.means[0], b));
    }
    Matrix resp(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(k_total));
    Vector scores(static_cast<Eigen::Index>(k_total));
    for (std::size_t i = 0; i < data.size(); ++i) {
        scores = offset;
        for (std::size_t k = 1; k < k_total; ++k) scores[static_cast<Eigen::Index>(k)] += inner(data[i], discs.coefs[k - 1]);
        resp.row(static_cast<Eigen::Index>(i)) = softmax(scores).transpose();
    }
    return resp;
}

TnmmParams mstep(std::span<const Tensor> data, const Matrix& resp) {
    const DataMoments moments(data);
    return moment_update(data, resp, moments);
}

TnmmParams mstep(std::span<const Tensor> data, const Matrix& resp, const DataMoments& moments) {
    return moment_update(data, resp, moments);
}

double mean_shift(const TnmmParams& a, const TnmmParams& b) {
    if (a.clusters() != b.clusters()) throw DimensionError("cluster counts differ");
    double total = 0.0;
    for (std::size_t k = 0; k < a.clusters(); ++k) total += (a.means[k].values() - b.means[k].values()).squaredNorm();
    return total;
}

namespace {

// Criterion values closer than this (relative) count as ties.
bool bic_below(double a, double b) {
    return a < b - 1e-9 * std::max(1.0, std::abs(b));
}

void check_fit_inputs(std::span<const Tensor> data, int k, const TnmmParams& init) {
    if (k < 1) throw ConfigError("number of clusters must be positive");
    if (data.size() <= static_cast<std::size_t>(k)) throw ConfigError("need more observations than clusters");
    if (init.clusters() != static_cast<std::size_t>(k)) throw ConfigError("initial estimate has wrong cluster count");
    validate(init, false);
    for (const auto& x : data)
        if (!x.same_shape(init.means.front())) throw DimensionError("observation dimensions differ from the model");
}

}  // namespace

FitResult deem_fit(std::span<const Tensor> data, int k, const DeemConfig& config, const TnmmParams& init) {
    check_fit_inputs(data, k, init);
    const DataMoments moments(data);
    return deem_fit(data, k, config, init, moments);
}

FitResult deem_fit(std::span<const Tensor> data, int k, const DeemConfig& config, const TnmmParams& init,
                   const DataMoments& moments) {
    return deem_fit(data, k, config, init, moments, nullptr);
}

FitResult deem_fit(std::span<const Tensor> data, int k, const DeemConfig& config, const TnmmParams& init,
                   const DataMoments& moments, DiscriminantSet* first_solve) {
    validate(config);
    check_fit_inputs(data, k, init);
    const std::size_t p = dims_product(init.dims());

    FitResult result;
    TnmmParams params = init;
    DiscriminantSet warm;
    if (first_solve && first_solve->coefs.size() + 1 == static_cast<std::size_t>(k)) warm = *first_solve;
    Matrix resp;
    for (int t = 0; t < config.max_iters; ++t) {
        const double lambda = lambda_at(config.lambda, t, p, data.size());
        const GroupLassoSolver solver(params.sigmas, discriminant_targets(params));
        auto solved = solver.solve(lambda, warm.coefs.empty() ? nullptr : &warm, config.inner_tol,
                                   config.inner_max_passes);
        if (!solved.converged) ++result.inner_nonconverged;
        warm = std::move(solved.discs);
        if (t == 0 && first_solve) *first_solve = warm;
        resp = estep_weights(data, params, warm);

        TnmmParams next;
        try {
            next = moment_update(data, resp, moments);
        } catch (const DegenerateClusterError& e) {
            throw DegenerateClusterError(e.cluster(), t + 1,
                                         resp.col(e.cluster()).sum());
        }
        const double shift = mean_shift(next, params);
        params = std::move(next);
        result.iters = t + 1;
        result.lambda = lambda;
        result.mean_shift_trace.push_back(shift);
        if (config.track_loglik) result.loglik_trace.push_back(observed_log_likelihood(data, params));
        if (shift <= config.mean_shift_tol) {
            result.converged = true;
            break;
        }
    }
    result.params = std::move(params);
    result.discs = std::move(warm);
    result.responsibilities = std::move(resp);
    result.labels = row_argmax(result.responsibilities);
    result.support_size = result.discs.support_size();
    result.bic = bic(data, result);
    return result;
}

double bic(std::span<const Tensor> data, const TnmmParams& params, std::size_t support_size) {
    return -2.0 * profiled_log_likelihood(data, params).loglik +
           std::log(static_cast<double>(data.size())) * static_cast<double>(support_size);
}

double bic(std::span<const Tensor> data, const FitResult& fit) {
    return bic(data, fit.params, fit.discs.support_size());
}

std::vector<double> lambda_grid(double lambda_max, int count, double ratio) {
    if (count < 1) throw ConfigError("lambda grid needs at least one point");
    if (!(lambda_max > 0.0) || !(ratio >= 1.0)) throw ConfigError("invalid lambda grid bounds");
    std::vector<double> grid;
    if (count == 1) return {lambda_max};
    const double step = std::log(ratio) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) grid.push_back(lambda_max * std::exp(-step * i));
    return grid;
}

std::vector<double> default_lambda_grid(const TnmmParams& init, int count, double ratio) {
    const GroupLassoSolver solver(init.sigmas, discriminant_targets(init));
    double top = solver.lambda_max();
    if (!(top > 0.0)) top = 1.0;
    return lambda_grid(top, count, ratio);
}

TuneResult tune(std::span<const Tensor> data, int k, std::span<const double> grid, const DeemConfig& config,
                const TnmmParams& init) {
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    check_fit_inputs(data, k, init);
    const DataMoments moments(data);
    TuneResult out;
    bool have_best = false;
    std::string failures;
    DiscriminantSet path_warm;
    for (double lambda : grid) {
        GridPoint point;
        point.lambda = lambda;
        DeemConfig cfg = config;
        cfg.lambda = FixedLambda{lambda};
        try {
            FitResult fit = deem_fit(data, k, cfg, init, moments, &path_warm);
            point.bic = fit.bic;
            point.iters = fit.iters;
            point.support_size = fit.support_size;
            const bool better = !have_best || bic_below(fit.bic, out.fit.bic) ||
                                (!bic_below(out.fit.bic, fit.bic) && lambda < out.best_lambda);
            if (better) {
                out.best_lambda = lambda;
                out.fit = std::move(fit);
                have_best = true;
            }
        } catch (const std::exception& e) {
            point.error = e.what();
            failures += "lambda=" + std::to_string(lambda) + ": " + e.what() + "; ";
        }
        out.path.push_back(std::move(point));
    }
    if (!have_best) throw NumericalError("every lambda in the grid failed: " + failures);
    return out;
}

SelectKResult select_k(std::span<const Tensor> data, std::span<const int> k_grid, std::span<const double> grid,
                       const DeemConfig& config, const KmeansConfig& kmeans) {
    if (k_grid.empty()) throw ConfigError("K grid is empty");
    SelectKResult out;
    bool have_best = false;
    std::string failures;
    for (int k : k_grid) {
        if (k < 2) throw ConfigError("K grid entries must be at least 2");
        try {
            const auto labels = kmeans_labels(data, k, kmeans);
            const TnmmParams init = init_params(data, labels, k);
            const std::vector<double> own = grid.empty() ? default_lambda_grid(init) : std::vector<double>();
            TuneResult tuned = tune(data, k, grid.empty() ? std::span<const double>(own) : grid, config, init);
            const bool better = !have_best || bic_below(tuned.fit.bic, out.fit.bic) ||
                                (!bic_below(out.fit.bic, tuned.fit.bic) && k < out.k);
            if (better) {
                out.k = k;
                out.lambda = tuned.best_lambda;
                out.fit = tuned.fit;
                have_best = true;
            }
            out.per_k.emplace_back(k, std::move(tuned));
        } catch (const std::exception& e) {
            failures += "K=" + std::to_string(k) + ": " + e.what() + "; ";
        }
    }
    if (!have_best) throw NumericalError("no K in the grid produced a fit: " + failures);
    return out;
}

}  // namespace tensorclust

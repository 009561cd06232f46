#include "tensorclust/benchmark.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <thread>

#include "tensorclust/error.hpp"

namespace tensorclust {

std::string method_name(Method m) {
    switch (m) {
        case Method::optimal: return "optimal";
        case Method::kmeans: return "kmeans";
        case Method::em: return "em";
        case Method::deem: return "deem";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "optimal") return Method::optimal;
    if (name == "kmeans") return Method::kmeans;
    if (name == "em") return Method::em;
    if (name == "deem") return Method::deem;
    throw ConfigError("unknown method '" + name + "' (expected optimal, kmeans, em or deem)");
}

const CellSummary* BenchmarkReport::cell(const std::string& model, Method method) const {
    for (const auto& c : cells)
        if (c.model == model && c.method == method) return &c;
    return nullptr;
}

std::uint64_t replicate_seed(std::uint64_t seed, const std::string& model, int replicate) {
    std::uint64_t tag = 0;
    for (unsigned char ch : model) tag = tag * 131 + ch;
    return sim::derive_seed(sim::derive_seed(seed, tag), static_cast<std::uint64_t>(replicate));
}

std::pair<double, std::optional<double>> mean_and_se(const std::vector<double>& values) {
    if (values.empty()) return {std::nan(""), std::nullopt};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, std::nullopt};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(values.size()))};
}

namespace {

using Clock = std::chrono::steady_clock;

ReplicateOutcome make_outcome(const std::string& model, Method method, int rep) {
    ReplicateOutcome o;
    o.model = model;
    o.method = method;
    o.replicate = rep;
    return o;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<ReplicateOutcome> run_replicate(const BenchmarkOptions& opt, const std::string& model, int rep) {
    sim::SimSpec spec = sim::preset(model, replicate_seed(opt.seed, model, rep));
    spec.delta_scale = opt.delta_scale;
    const sim::LabeledDataset ds = sim::generate(spec);
    const int k = spec.k;

    std::vector<ReplicateOutcome> out;
    auto record = [&](Method m, const std::function<void(ReplicateOutcome&)>& body) {
        ReplicateOutcome o = make_outcome(model, m, rep);
        const auto start = Clock::now();
        try {
            body(o);
        } catch (const std::exception& e) {
            o.error.reset();
            o.failure = e.what();
        }
        o.seconds = seconds_since(start);
        out.push_back(std::move(o));
    };
    auto wants = [&](Method m) {
        for (Method x : opt.methods)
            if (x == m) return true;
        return false;
    };

    if (wants(Method::optimal)) {
        record(Method::optimal, [&](ReplicateOutcome& o) {
            const DiscriminantSet discs = discriminants(ds.truth);
            std::vector<int> labels;
            labels.reserve(ds.data.size());
            for (const auto& x : ds.data) labels.push_back(optimal_assign(x, ds.truth, discs));
            o.error = sim::clustering_error(labels, ds.labels, k);
        });
    }

    // K-means labels are shared: they are a method and the initializer of EM and DEEM.
    std::vector<int> km_labels;
    std::string km_failure;
    double km_seconds = 0.0;
    if (wants(Method::kmeans) || wants(Method::em) || wants(Method::deem)) {
        KmeansConfig kc = opt.kmeans;
        kc.seed = sim::derive_seed(spec.seed, 0x6b6d);
        const auto start = Clock::now();
        try {
            km_labels = kmeans_labels(ds.data, k, kc);
        } catch (const std::exception& e) {
            km_failure = e.what();
        }
        km_seconds = seconds_since(start);
    }
    if (wants(Method::kmeans)) {
        ReplicateOutcome o = make_outcome(model, Method::kmeans, rep);
        o.seconds = km_seconds;
        if (km_failure.empty())
            o.error = sim::clustering_error(km_labels, ds.labels, k);
        else
            o.failure = km_failure;
        out.push_back(std::move(o));
    }

    std::optional<TnmmParams> init;
    std::string init_failure = km_failure;
    if (km_failure.empty() && (wants(Method::em) || wants(Method::deem))) {
        try {
            init = init_params(ds.data, km_labels, k);
        } catch (const std::exception& e) {
            init_failure = std::string("initialization: ") + e.what();
        }
    }

    if (wants(Method::em)) {
        record(Method::em, [&](ReplicateOutcome& o) {
            if (!init) throw NumericalError(init_failure);
            const FitResult fit = em_fit(ds.data, k, opt.em, *init);
            o.error = sim::clustering_error(fit.labels, ds.labels, k);
            o.iters = fit.iters;
        });
    }
    if (wants(Method::deem)) {
        record(Method::deem, [&](ReplicateOutcome& o) {
            if (!init) throw NumericalError(init_failure);
            const std::vector<double> grid = opt.lambda_grid.empty()
                                                 ? default_lambda_grid(*init, opt.lambda_count, opt.lambda_ratio)
                                                 : opt.lambda_grid;
            const TuneResult tuned = tune(ds.data, k, grid, opt.deem, *init);
            o.error = sim::clustering_error(tuned.fit.labels, ds.labels, k);
            o.iters = tuned.fit.iters;
            o.lambda = tuned.best_lambda;
            o.support_size = tuned.fit.support_size;
        });
    }
    return out;
}

CellSummary summarize(const std::string& model, Method method, const std::vector<ReplicateOutcome>& outcomes) {
    CellSummary c;
    c.model = model;
    c.method = method;
    std::vector<double> errors;
    double iters = 0.0;
    for (const auto& o : outcomes) {
        if (o.model != model || o.method != method) continue;
        c.wall_seconds += o.seconds;
        if (!o.error) {
            ++c.failures;
            continue;
        }
        errors.push_back(*o.error);
        iters += o.iters;
    }
    c.replicates = static_cast<int>(errors.size());
    const auto [mean, se] = mean_and_se(errors);
    c.mean_error = mean;
    c.std_error = se;
    c.mean_iters = errors.empty() ? 0.0 : iters / static_cast<double>(errors.size());
    return c;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkOptions& options) {
    if (options.replicates < 1) throw ConfigError("replicates must be at least 1");
    if (options.workers < 0) throw ConfigError("workers must be nonnegative");
    if (options.models.empty() || options.methods.empty()) throw ConfigError("nothing to benchmark");
    if (!(options.delta_scale > 0.0)) throw ConfigError("delta scale must be positive");
    for (const auto& m : options.models) (void)sim::preset(m);
    validate(options.deem);
    validate(options.em);

    struct Task {
        std::string model;
        int rep;
    };
    std::vector<Task> tasks;
    for (const auto& m : options.models)
        for (int r = 0; r < options.replicates; ++r) tasks.push_back({m, r});

    std::vector<std::vector<ReplicateOutcome>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                results[i] = run_replicate(options, tasks[i].model, tasks[i].rep);
            } catch (const std::exception& e) {
                // Generation itself failed: every method of this replicate fails.
                for (Method m : options.methods) {
                    ReplicateOutcome o = make_outcome(tasks[i].model, m, tasks[i].rep);
                    o.failure = std::string("generation: ") + e.what();
                    results[i].push_back(std::move(o));
                }
            }
        }
    };

    unsigned n_workers = options.workers > 0 ? static_cast<unsigned>(options.workers)
                                             : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(tasks.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    BenchmarkReport report;
    for (auto& r : results)
        for (auto& o : r) report.outcomes.push_back(std::move(o));
    for (const auto& m : options.models)
        for (Method method : options.methods) report.cells.push_back(summarize(m, method, report.outcomes));
    return report;
}

std::vector<DeltaRow> delta_sweep(const std::vector<double>& a_values, BenchmarkOptions options) {
    if (a_values.empty()) throw ConfigError("no separation multipliers given");
    if (options.models.empty()) throw ConfigError("delta sweep needs a model");
    options.models.resize(1);
    options.methods = {Method::optimal, Method::deem};
    std::vector<DeltaRow> rows;
    for (double a : a_values) {
        if (!(a > 0.0)) throw ConfigError("separation multipliers must be positive");
        options.delta_scale = a;
        const BenchmarkReport rep = run_benchmark(options);
        DeltaRow row;
        row.a = a;
        row.deem = *rep.cell(options.models[0], Method::deem);
        row.optimal = *rep.cell(options.models[0], Method::optimal);
        std::map<int, double> opt_err;
        for (const auto& o : rep.outcomes)
            if (o.method == Method::optimal && o.error) opt_err[o.replicate] = *o.error;
        std::vector<double> gaps;
        for (const auto& o : rep.outcomes) {
            if (o.method != Method::deem || !o.error) continue;
            const auto it = opt_err.find(o.replicate);
            if (it != opt_err.end()) gaps.push_back(*o.error - it->second);
        }
        const auto [g, se] = mean_and_se(gaps);
        row.mean_gap = g;
        row.gap_std_error = se;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace tensorclust

// Command-line front end: simulate, fit, benchmark, delta-sweep, select-k.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tensorclust/benchmark.hpp"
#include "tensorclust/error.hpp"
#include "tensorclust/io.hpp"

namespace fs = std::filesystem;
using namespace tensorclust;
using io::json;

namespace {

enum Exit { ok = 0, other = 1, bad_config = 2, input_output = 3, numerical = 4 };

constexpr std::size_t kLargeElements = 10000;

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::stringstream is(item);
        T v{};
        if (!(is >> v) || !is.eof()) throw ConfigError(std::string("cannot parse ") + what + " entry '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(std::string("empty ") + what);
    return out;
}

sim::SimSpec load_spec(const std::string& spec_arg) {
    const fs::path as_path(spec_arg);
    if (fs::exists(as_path) || as_path.extension() == ".json" || as_path.has_parent_path())
        return io::spec_from_json(io::read_json(as_path));
    for (const auto& name : sim::preset_names())
        if (name == spec_arg) return sim::preset(name);
    throw ConfigError("--spec '" + spec_arg + "' is neither a readable file nor a preset name (M1..M7)");
}

void require_large(std::size_t elements, bool large, const std::string& what) {
    if (elements <= kLargeElements) return;
    if (!large)
        throw ConfigError(what + " has " + std::to_string(elements) +
                          " elements per observation; pass --large to run it (needs a few GB of memory)");
    std::cerr << "note: large run (" << elements << " elements per observation); covariances stay per-mode, "
              << "memory grows with n * p\n";
}

struct FitSettings {
    DeemConfig deem;
    EmConfig em;
    KmeansConfig kmeans;
    int lambda_count = 20;
    double lambda_ratio = 100.0;
};

FitSettings load_settings(const std::string& path) {
    FitSettings s;
    if (path.empty()) return s;
    const json j = io::read_json(path);
    if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "deem")
            s.deem = io::deem_config_from_json(value);
        else if (key == "em")
            s.em = io::em_config_from_json(value);
        else if (key == "kmeans")
            s.kmeans = io::kmeans_config_from_json(value);
        else if (key == "lambda_count")
            s.lambda_count = value.get<int>();
        else if (key == "lambda_ratio")
            s.lambda_ratio = value.get<double>();
        else
            throw ConfigError(path + ": unknown field '" + key + "'");
    }
    return s;
}

json grid_path_json(const std::vector<GridPoint>& path) {
    json out = json::array();
    for (const auto& g : path) {
        json row{{"lambda", g.lambda}, {"iterations", g.iters}, {"support_size", g.support_size}};
        row["bic"] = g.bic ? json(*g.bic) : json(nullptr);
        if (!g.error.empty()) row["error"] = g.error;
        out.push_back(row);
    }
    return out;
}

std::optional<std::vector<int>> truth_labels(const fs::path& data) {
    const auto paths = io::dataset_paths(data);
    if (!fs::exists(paths.truth)) return std::nullopt;
    return io::read_truth_labels(paths.truth);
}

json cell_json(const CellSummary& c) {
    json j{{"model", c.model},
           {"method", method_name(c.method)},
           {"replicates", c.replicates},
           {"failures", c.failures},
           {"mean_error", c.mean_error},
           {"mean_error_pct", 100.0 * c.mean_error},
           {"mean_iterations", c.mean_iters},
           {"wall_seconds", c.wall_seconds}};
    if (c.std_error) {
        j["std_error"] = *c.std_error;
        j["std_error_pct"] = 100.0 * *c.std_error;
    } else {
        j["std_error"] = nullptr;
        j["std_error_note"] = "fewer than two successful replicates";
    }
    return j;
}

std::string csv_number(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    return p.string() + suffix;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& spec_arg, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_per_cluster,
                 double delta, const std::string& out, bool large) {
    sim::SimSpec spec = load_spec(spec_arg);
    if (seed) spec.seed = *seed;
    if (n_per_cluster) spec.n_per_cluster = *n_per_cluster;
    if (delta != 1.0) spec.delta_scale = delta;
    sim::validate(spec);
    require_large(dims_product(spec.dims), large, "spec '" + spec.name + "'");
    const auto ds = sim::generate(spec);
    io::DatasetMeta meta{spec.dims, ds.data.size(), spec.k, spec.seed};
    io::write_dataset(out, ds.data, meta);
    io::write_truth(io::dataset_paths(out).truth, ds.labels, ds.truth);
    std::cout << "wrote " << ds.data.size() << " observations to " << io::dataset_paths(out).csv.string() << "\n";
    return ok;
}

int cmd_fit(const std::string& data_path, int k, const std::string& method, const std::string& config_path,
            const std::string& grid_arg, std::optional<std::uint64_t> seed, const std::string& out, bool large) {
    FitSettings s = load_settings(config_path);
    if (seed) s.kmeans.seed = *seed;
    const auto loaded = io::read_dataset(data_path);
    require_large(dims_product(loaded.meta.dims), large, "dataset");
    const auto& data = loaded.data;
    const auto truth = truth_labels(data_path);

    json result{{"method", method}, {"K", k}, {"n", data.size()}, {"dims", loaded.meta.dims}};
    std::vector<int> labels;
    const auto km = kmeans(data, k, s.kmeans);
    if (method == "kmeans") {
        labels = km.labels;
        result["labels"] = labels;
        result["inertia"] = km.inertia;
        result["iterations"] = km.objective_trace.size();
    } else {
        const TnmmParams init = init_params(data, km.labels, k);
        FitResult fit;
        if (method == "em") {
            fit = em_fit(data, k, s.em, init);
        } else if (method == "deem") {
            const bool explicit_config = !config_path.empty() && io::read_json(config_path).contains("deem");
            const bool scheduled = std::holds_alternative<LambdaSchedule>(s.deem.lambda);
            if (scheduled) {
                fit = deem_fit(data, k, s.deem, init);
            } else {
                std::vector<double> grid;
                if (!grid_arg.empty())
                    grid = parse_list<double>(grid_arg, "lambda grid");
                else if (explicit_config && io::read_json(config_path).at("deem").contains("lambda"))
                    grid = {std::get<FixedLambda>(s.deem.lambda).value};
                else
                    grid = default_lambda_grid(init, s.lambda_count, s.lambda_ratio);
                auto tuned = tune(data, k, grid, s.deem, init);
                result["lambda_path"] = grid_path_json(tuned.path);
                fit = std::move(tuned.fit);
            }
        } else {
            throw ConfigError("unknown method '" + method + "' (expected deem, em or kmeans)");
        }
        labels = fit.labels;
        result.update(io::fit_summary(fit));
    }
    if (truth) {
        if (truth->size() != labels.size()) throw DimensionError("truth sidecar does not match the dataset");
        result["clustering_error"] = sim::clustering_error(labels, *truth, k);
    }
    io::write_json(out, result);
    std::cout << "fit written to " << out;
    if (result.contains("clustering_error")) std::cout << " (error vs truth " << result["clustering_error"].get<double>() << ")";
    std::cout << "\n";
    return ok;
}

BenchmarkOptions benchmark_options(const FitSettings& s, int replicates, std::uint64_t seed, int workers,
                                   const std::string& grid_arg) {
    BenchmarkOptions o;
    o.replicates = replicates;
    o.seed = seed;
    o.workers = workers;
    o.deem = s.deem;
    o.em = s.em;
    o.kmeans = s.kmeans;
    o.lambda_count = s.lambda_count;
    o.lambda_ratio = s.lambda_ratio;
    if (!grid_arg.empty()) o.lambda_grid = parse_list<double>(grid_arg, "lambda grid");
    return o;
}

int cmd_benchmark(const std::string& models, const std::string& methods, int replicates, std::uint64_t seed, int workers,
                  const std::string& config_path, const std::string& grid_arg, const std::string& out, bool large) {
    BenchmarkOptions o = benchmark_options(load_settings(config_path), replicates, seed, workers, grid_arg);
    o.models = parse_list<std::string>(models, "model list");
    o.methods.clear();
    for (const auto& m : parse_list<std::string>(methods, "method list")) o.methods.push_back(parse_method(m));
    for (const auto& m : o.models) require_large(dims_product(sim::preset(m).dims), large, "model " + m);

    const BenchmarkReport report = run_benchmark(o);

    json cells = json::array();
    std::ostringstream csv;
    csv << "model,method,replicates,failures,mean_error,std_error,mean_iterations,wall_seconds\n";
    for (const auto& c : report.cells) {
        cells.push_back(cell_json(c));
        csv << c.model << ',' << method_name(c.method) << ',' << c.replicates << ',' << c.failures << ','
            << io::format_double(c.mean_error) << ',' << csv_number(c.std_error) << ',' << io::format_double(c.mean_iters)
            << ',' << io::format_double(c.wall_seconds) << '\n';
    }
    json outcomes = json::array();
    std::ostringstream rep_csv;
    rep_csv << "model,method,replicate,error,iterations,lambda,support_size,seconds,failure\n";
    for (const auto& r : report.outcomes) {
        json row{{"model", r.model},     {"method", method_name(r.method)}, {"replicate", r.replicate},
                 {"iterations", r.iters}, {"lambda", r.lambda},            {"support_size", r.support_size},
                 {"seconds", r.seconds}};
        row["error"] = r.error ? json(*r.error) : json(nullptr);
        if (!r.failure.empty()) row["failure"] = r.failure;
        outcomes.push_back(row);
        std::string failure = r.failure;
        std::replace(failure.begin(), failure.end(), ',', ';');
        std::replace(failure.begin(), failure.end(), '\n', ' ');
        rep_csv << r.model << ',' << method_name(r.method) << ',' << r.replicate << ',' << csv_number(r.error) << ','
                << r.iters << ',' << io::format_double(r.lambda) << ',' << r.support_size << ','
                << io::format_double(r.seconds) << ',' << failure << '\n';
    }
    io::write_json(out, json{{"replicates", replicates}, {"seed", seed}, {"cells", cells}, {"outcomes", outcomes}});
    write_text(with_suffix(out, ".csv"), csv.str());
    write_text(with_suffix(out, ".replicates.csv"), rep_csv.str());

    std::printf("%-4s %-8s %6s %10s %8s %8s\n", "model", "method", "reps", "error(%)", "se(%)", "iters");
    for (const auto& c : report.cells)
        std::printf("%-4s  %-8s %6d %10.2f %8s %8.1f%s\n", c.model.c_str(), method_name(c.method).c_str(), c.replicates,
                    100.0 * c.mean_error, c.std_error ? std::to_string(100.0 * *c.std_error).substr(0, 5).c_str() : "n/a",
                    c.mean_iters, c.failures ? ("  (" + std::to_string(c.failures) + " failed)").c_str() : "");
    return ok;
}

int cmd_delta_sweep(const std::string& model, const std::string& a_values, int replicates, std::uint64_t seed,
                    int workers, const std::string& config_path, const std::string& grid_arg, const std::string& out,
                    bool large) {
    BenchmarkOptions o = benchmark_options(load_settings(config_path), replicates, seed, workers, grid_arg);
    o.models = {model};
    require_large(dims_product(sim::preset(model).dims), large, "model " + model);
    const auto rows = delta_sweep(parse_list<double>(a_values, "separation multipliers"), o);

    json arr = json::array();
    std::ostringstream csv;
    csv << "a,deem_error,deem_se,optimal_error,optimal_se,gap,gap_se,deem_iterations,deem_failures\n";
    for (const auto& r : rows) {
        json row{{"a", r.a}, {"deem", cell_json(r.deem)}, {"optimal", cell_json(r.optimal)}, {"gap", r.mean_gap}};
        row["gap_std_error"] = r.gap_std_error ? json(*r.gap_std_error) : json(nullptr);
        arr.push_back(row);
        csv << io::format_double(r.a) << ',' << io::format_double(r.deem.mean_error) << ',' << csv_number(r.deem.std_error)
            << ',' << io::format_double(r.optimal.mean_error) << ',' << csv_number(r.optimal.std_error) << ','
            << io::format_double(r.mean_gap) << ',' << csv_number(r.gap_std_error) << ','
            << io::format_double(r.deem.mean_iters) << ',' << r.deem.failures << '\n';
    }
    io::write_json(out, json{{"model", model}, {"replicates", replicates}, {"seed", seed}, {"rows", arr}});
    write_text(with_suffix(out, ".csv"), csv.str());
    std::printf("%6s %10s %10s %8s %8s\n", "a", "deem(%)", "opt(%)", "gap", "iters");
    for (const auto& r : rows)
        std::printf("%6.2f %10.2f %10.2f %8.2f %8.1f\n", r.a, 100 * r.deem.mean_error, 100 * r.optimal.mean_error,
                    100 * r.mean_gap, r.deem.mean_iters);
    return ok;
}

int cmd_select_k(const std::string& data_path, const std::string& k_grid, const std::string& config_path,
                 const std::string& grid_arg, std::optional<std::uint64_t> seed, const std::string& out, bool large) {
    FitSettings s = load_settings(config_path);
    if (seed) s.kmeans.seed = *seed;
    const auto loaded = io::read_dataset(data_path);
    require_large(dims_product(loaded.meta.dims), large, "dataset");
    const auto ks = parse_list<int>(k_grid, "K grid");
    std::vector<double> grid;
    if (!grid_arg.empty()) grid = parse_list<double>(grid_arg, "lambda grid");
    const auto r = select_k(loaded.data, ks, grid, s.deem, s.kmeans);

    json per_k = json::array();
    for (const auto& [k, t] : r.per_k)
        per_k.push_back({{"K", k}, {"best_lambda", t.best_lambda}, {"bic", t.fit.bic}, {"lambda_path", grid_path_json(t.path)}});
    json result{{"K", r.k}, {"lambda", r.lambda}, {"per_K", per_k}};
    result.update(io::fit_summary(r.fit));
    if (const auto truth = truth_labels(data_path); truth && truth->size() == r.fit.labels.size()) {
        const int kk = std::max(r.k, *std::max_element(truth->begin(), truth->end()) + 1);
        result["clustering_error"] = sim::clustering_error(r.fit.labels, *truth, kk);
    }
    io::write_json(out, result);
    std::cout << "selected K=" << r.k << " lambda=" << r.lambda << "; written to " << out << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor normal mixture clustering: simulation, fitting and benchmarking"};
    app.require_subcommand(1);

    std::string spec, data, method = "deem", config, grid, out, models = "M1",
                methods = "optimal,kmeans,em,deem", a_values = "0.5,0.75,1,2,3,4", k_list;
    int k = 2, replicates = 20, workers = 0;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_per_cluster;
    double delta = 1.0;
    bool large = false;

    auto* sim_cmd = app.add_subcommand("simulate", "Generate a dataset with its truth sidecar");
    sim_cmd->add_option("--spec", spec, "Spec JSON file or preset name (M1..M7)")->required();
    sim_cmd->add_option("--seed", seed, "Override the spec seed");
    sim_cmd->add_option("--n-per-cluster", n_per_cluster, "Override the cluster size");
    sim_cmd->add_option("--delta-scale", delta, "Separation multiplier a")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--out", out, "Output stem: writes <stem>.csv, <stem>.json, <stem>.truth.json")->required();
    sim_cmd->add_flag("--large", large, "Allow observations with more than 10000 elements");

    auto* fit_cmd = app.add_subcommand("fit", "Cluster a dataset");
    fit_cmd->add_option("--data", data, "Dataset stem or .csv path")->required();
    fit_cmd->add_option("--k", k, "Number of clusters")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--method", method, "deem, em or kmeans")->check(CLI::IsMember({"deem", "em", "kmeans"}));
    fit_cmd->add_option("--config", config, "JSON with optional deem/em/kmeans sections");
    fit_cmd->add_option("--lambda-grid", grid, "Comma-separated penalty values (DEEM)");
    fit_cmd->add_option("--seed", seed, "k-means seed");
    fit_cmd->add_option("--out", out, "Result JSON path")->required();
    fit_cmd->add_flag("--large", large, "Allow observations with more than 10000 elements");

    auto* bench_cmd = app.add_subcommand("benchmark", "Replicated error rates per model and method");
    bench_cmd->add_option("--spec", models, "Comma-separated presets (M1..M7)");
    bench_cmd->add_option("--method", methods, "Comma-separated methods: optimal,kmeans,em,deem");
    bench_cmd->add_option("--replicates", replicates, "Replicates per model")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", seed, "Base seed");
    bench_cmd->add_option("--workers", workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--config", config, "JSON with optional deem/em/kmeans sections");
    bench_cmd->add_option("--lambda-grid", grid, "Comma-separated penalty values (default: per-replicate grid)");
    bench_cmd->add_option("--out", out, "Report JSON path (CSV summaries are written alongside)")->required();
    bench_cmd->add_flag("--large", large, "Required for M7");

    auto* sweep_cmd = app.add_subcommand("delta-sweep", "DEEM and optimal error across separation multipliers");
    std::string sweep_model = "M1";
    sweep_cmd->add_option("--spec", sweep_model, "Two-cluster preset to rescale");
    sweep_cmd->add_option("--a", a_values, "Comma-separated multipliers");
    sweep_cmd->add_option("--replicates", replicates, "Replicates per multiplier")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", seed, "Base seed");
    sweep_cmd->add_option("--workers", workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sweep_cmd->add_option("--config", config, "JSON with optional deem/em/kmeans sections");
    sweep_cmd->add_option("--lambda-grid", grid, "Comma-separated penalty values");
    sweep_cmd->add_option("--out", out, "Report JSON path")->required();
    sweep_cmd->add_flag("--large", large, "Required for M7");

    auto* select_cmd = app.add_subcommand("select-k", "Choose K and lambda jointly by BIC");
    select_cmd->add_option("--data", data, "Dataset stem or .csv path")->required();
    select_cmd->add_option("--k", k_list, "Comma-separated candidate K values")->required();
    select_cmd->add_option("--config", config, "JSON with optional deem/kmeans sections");
    select_cmd->add_option("--lambda-grid", grid, "Comma-separated penalty values");
    select_cmd->add_option("--seed", seed, "k-means seed");
    select_cmd->add_option("--out", out, "Result JSON path")->required();
    select_cmd->add_flag("--large", large, "Allow observations with more than 10000 elements");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_config;
    }

    try {
        if (*sim_cmd) return cmd_simulate(spec, seed, n_per_cluster, delta, out, large);
        if (*fit_cmd) return cmd_fit(data, k, method, config, grid, seed, out, large);
        if (*bench_cmd)
            return cmd_benchmark(models, methods, replicates, seed.value_or(0), workers, config, grid, out, large);
        if (*sweep_cmd)
            return cmd_delta_sweep(sweep_model, a_values, replicates, seed.value_or(0), workers, config, grid, out, large);
        if (*select_cmd) return cmd_select_k(data, k_list, config, grid, seed, out, large);
    } catch (const DegenerateClusterError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return input_output;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return input_output;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return bad_config;
    } catch (const DimensionError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return bad_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return bad_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
    return other;
}

#include "tensorclust/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tensorclust/error.hpp"

namespace tensorclust::io {

namespace fs = std::filesystem;

DatasetPaths dataset_paths(const fs::path& path) {
    fs::path stem = path;
    if (stem.extension() == ".csv") stem.replace_extension();
    const std::string base = stem.string();
    return {base + ".csv", base + ".json", base + ".truth.json"};
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc()) throw IoError("could not format number");
    return std::string(buf, res.ptr);
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

template <class T>
T required(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + std::string(key) + "' has the wrong type");
    }
}

template <class T>
void optional_into(const json& j, const char* key, T& target, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + std::string(key) + "' has the wrong type");
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

}  // namespace

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("matrix rows differ in length");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

json to_json(const Tensor& t) {
    return json{{"dims", t.dims()}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

namespace {

Tensor tensor_from_json(const json& j) {
    const auto dims = required<Dims>(j, "dims", "tensor");
    const auto values = required<std::vector<double>>(j, "values", "tensor");
    return Tensor(dims, Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
}

}  // namespace

json to_json(const TnmmParams& params) {
    json means = json::array();
    for (const auto& mu : params.means) means.push_back(to_json(mu));
    json sigmas = json::array();
    for (const auto& s : params.sigmas) sigmas.push_back(to_json(s));
    return json{{"pis", params.pis}, {"means", means}, {"sigmas", sigmas}};
}

TnmmParams params_from_json(const json& j) {
    TnmmParams out;
    out.pis = required<std::vector<double>>(j, "pis", "params");
    for (const auto& mu : required<json>(j, "means", "params")) out.means.push_back(tensor_from_json(mu));
    for (const auto& s : required<json>(j, "sigmas", "params")) out.sigmas.push_back(matrix_from_json(s));
    return out;
}

void write_dataset(const fs::path& path, std::span<const Tensor> data, const DatasetMeta& meta) {
    const auto paths = dataset_paths(path);
    if (paths.csv.has_parent_path()) fs::create_directories(paths.csv.parent_path());
    const std::size_t width = dims_product(meta.dims);
    if (meta.n != data.size()) throw DimensionError("metadata row count differs from data");
    std::ofstream out(paths.csv);
    if (!out) throw IoError("cannot write " + paths.csv.string());
    for (const auto& x : data) {
        if (x.dims() != meta.dims) throw DimensionError("observation does not match metadata dims");
        for (std::size_t j = 0; j < width; ++j) {
            if (j) out << ',';
            out << format_double(x[j]);
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + paths.csv.string());

    json m{{"dims", meta.dims}, {"n", meta.n}, {"layout", "first-index-fastest"}, {"payload", paths.csv.filename().string()}};
    if (meta.k_true) m["k_true"] = *meta.k_true;
    if (meta.seed) m["seed"] = *meta.seed;
    write_json(paths.meta, m);
}

LoadedDataset read_dataset(const fs::path& path) {
    const auto paths = dataset_paths(path);
    LoadedDataset out;
    const json m = read_json(paths.meta);
    out.meta.dims = required<Dims>(m, "dims", paths.meta.string());
    out.meta.n = required<std::size_t>(m, "n", paths.meta.string());
    if (m.contains("k_true")) out.meta.k_true = m.at("k_true").get<int>();
    if (m.contains("seed")) out.meta.seed = m.at("seed").get<std::uint64_t>();
    if (out.meta.dims.empty()) throw ConfigError(paths.meta.string() + ": dims must be nonempty");
    const std::size_t width = dims_product(out.meta.dims);

    std::ifstream in(paths.csv);
    if (!in) throw IoError("cannot open " + paths.csv.string());
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        Vector values(static_cast<Eigen::Index>(width));
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            if (col >= width)
                throw DimensionError(paths.csv.string() + ": row " + std::to_string(row) + " has more than " +
                                     std::to_string(width) + " values");
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) throw IoError(paths.csv.string() + ": bad number in row " + std::to_string(row));
            values[static_cast<Eigen::Index>(col++)] = v;
            p = res.ptr;
            if (p < end && *p == '\r') ++p;
            if (p < end) {
                if (*p != ',') throw IoError(paths.csv.string() + ": bad separator in row " + std::to_string(row));
                ++p;
            }
        }
        if (col != width)
            throw DimensionError(paths.csv.string() + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                                 " values, dims imply " + std::to_string(width));
        out.data.emplace_back(out.meta.dims, std::move(values));
    }
    if (out.data.size() != out.meta.n)
        throw DimensionError(paths.csv.string() + ": metadata says n=" + std::to_string(out.meta.n) + " but found " +
                             std::to_string(out.data.size()) + " rows");
    return out;
}

void write_truth(const fs::path& path, std::span<const int> labels, const TnmmParams& truth) {
    json j = to_json(truth);
    j["labels"] = std::vector<int>(labels.begin(), labels.end());
    write_json(path, j);
}

std::vector<int> read_truth_labels(const fs::path& path) {
    return required<std::vector<int>>(read_json(path), "labels", path.string());
}

namespace {

std::string cov_name(sim::CovKind k) {
    switch (k) {
        case sim::CovKind::identity: return "identity";
        case sim::CovKind::ar: return "ar";
        case sim::CovKind::cs: return "cs";
        case sim::CovKind::sparse_precision: return "sparse_precision";
        case sim::CovKind::envelope: return "envelope";
    }
    return "identity";
}

sim::CovKind cov_kind(const std::string& s) {
    if (s == "identity") return sim::CovKind::identity;
    if (s == "ar") return sim::CovKind::ar;
    if (s == "cs") return sim::CovKind::cs;
    if (s == "sparse_precision") return sim::CovKind::sparse_precision;
    if (s == "envelope") return sim::CovKind::envelope;
    throw ConfigError("covariances: unknown type '" + s + "'");
}

}  // namespace

json to_json(const sim::SimSpec& spec) {
    json covs = json::array();
    for (const auto& c : spec.covariances) {
        json cj{{"type", cov_name(c.kind)}};
        if (c.kind == sim::CovKind::ar || c.kind == sim::CovKind::cs) cj["rho"] = c.rho;
        if (c.kind == sim::CovKind::envelope) cj["block"] = c.block;
        covs.push_back(cj);
    }
    json mean;
    if (spec.mean.kind == sim::MeanKind::discriminant) {
        json entries = json::array();
        for (const auto& e : spec.mean.entries) {
            json ranges = json::array();
            for (const auto& [b, en] : e.ranges) ranges.push_back({b, en});
            entries.push_back({{"cluster", e.cluster}, {"ranges", ranges}, {"value", e.value}});
        }
        mean = {{"type", "discriminant"}, {"entries", entries}};
    } else {
        mean = {{"type", "corner_uniform"}, {"corner", spec.mean.corner}};
    }
    return json{{"name", spec.name},
                {"K", spec.k},
                {"dims", spec.dims},
                {"n_per_cluster", spec.n_per_cluster},
                {"covariances", covs},
                {"mean", mean},
                {"seed", spec.seed},
                {"delta_scale", spec.delta_scale}};
}

sim::SimSpec spec_from_json(const json& j) {
    const std::string where = "spec";
    if (j.is_object() && j.contains("preset")) {
        reject_unknown(j, {"preset", "seed", "delta_scale", "n_per_cluster"}, where);
        auto spec = sim::preset(required<std::string>(j, "preset", where));
        optional_into(j, "seed", spec.seed, where);
        optional_into(j, "delta_scale", spec.delta_scale, where);
        optional_into(j, "n_per_cluster", spec.n_per_cluster, where);
        sim::validate(spec);
        return spec;
    }
    reject_unknown(j, {"name", "K", "dims", "n_per_cluster", "covariances", "mean", "seed", "delta_scale"}, where);
    sim::SimSpec spec;
    optional_into(j, "name", spec.name, where);
    spec.k = required<int>(j, "K", where);
    spec.dims = required<Dims>(j, "dims", where);
    spec.n_per_cluster = required<std::size_t>(j, "n_per_cluster", where);
    spec.seed = required<std::uint64_t>(j, "seed", where);
    optional_into(j, "delta_scale", spec.delta_scale, where);
    const json covs = required<json>(j, "covariances", where);
    if (!covs.is_array()) throw ConfigError("spec: field 'covariances' must be an array");
    for (std::size_t m = 0; m < covs.size(); ++m) {
        const std::string cw = "covariances[" + std::to_string(m) + "]";
        sim::CovRecipe c;
        c.kind = cov_kind(required<std::string>(covs[m], "type", cw));
        if (c.kind == sim::CovKind::ar || c.kind == sim::CovKind::cs) c.rho = required<double>(covs[m], "rho", cw);
        if (c.kind == sim::CovKind::envelope) c.block = required<std::size_t>(covs[m], "block", cw);
        spec.covariances.push_back(c);
    }
    const json mean = required<json>(j, "mean", where);
    const auto type = required<std::string>(mean, "type", "mean");
    if (type == "discriminant") {
        spec.mean.kind = sim::MeanKind::discriminant;
        const json entries = required<json>(mean, "entries", "mean");
        for (std::size_t e = 0; e < entries.size(); ++e) {
            const std::string ew = "mean.entries[" + std::to_string(e) + "]";
            sim::BoxEntry box;
            box.cluster = required<int>(entries[e], "cluster", ew);
            box.value = required<double>(entries[e], "value", ew);
            for (const auto& r : required<json>(entries[e], "ranges", ew)) {
                if (!r.is_array() || r.size() != 2) throw ConfigError(ew + ": each range must be [begin, end)");
                box.ranges.emplace_back(r[0].get<std::size_t>(), r[1].get<std::size_t>());
            }
            spec.mean.entries.push_back(std::move(box));
        }
    } else if (type == "corner_uniform") {
        spec.mean.kind = sim::MeanKind::corner_uniform;
        spec.mean.corner = required<Dims>(mean, "corner", "mean");
    } else {
        throw ConfigError("mean: unknown type '" + type + "'");
    }
    sim::validate(spec);
    return spec;
}

DeemConfig deem_config_from_json(const json& j) {
    const std::string where = "deem config";
    reject_unknown(j, {"lambda", "schedule", "max_iters", "mean_shift_tol", "inner_tol", "inner_max_passes", "rng_seed",
                       "track_loglik"},
                   where);
    DeemConfig c;
    if (j.contains("lambda") && j.contains("schedule")) throw ConfigError(where + ": give either 'lambda' or 'schedule'");
    if (j.contains("lambda")) c.lambda = FixedLambda{required<double>(j, "lambda", where)};
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        reject_unknown(s, {"lambda0", "kappa", "c_lambda"}, "schedule");
        c.lambda = LambdaSchedule{required<double>(s, "lambda0", "schedule"), required<double>(s, "kappa", "schedule"),
                                  required<double>(s, "c_lambda", "schedule")};
    }
    optional_into(j, "max_iters", c.max_iters, where);
    optional_into(j, "mean_shift_tol", c.mean_shift_tol, where);
    optional_into(j, "inner_tol", c.inner_tol, where);
    optional_into(j, "inner_max_passes", c.inner_max_passes, where);
    optional_into(j, "rng_seed", c.rng_seed, where);
    optional_into(j, "track_loglik", c.track_loglik, where);
    validate(c);
    return c;
}

EmConfig em_config_from_json(const json& j) {
    const std::string where = "em config";
    reject_unknown(j, {"max_iters", "mean_shift_tol", "flipflop_max", "flipflop_tol"}, where);
    EmConfig c;
    optional_into(j, "max_iters", c.max_iters, where);
    optional_into(j, "mean_shift_tol", c.mean_shift_tol, where);
    optional_into(j, "flipflop_max", c.flipflop_max, where);
    optional_into(j, "flipflop_tol", c.flipflop_tol, where);
    validate(c);
    return c;
}

KmeansConfig kmeans_config_from_json(const json& j) {
    const std::string where = "kmeans config";
    reject_unknown(j, {"restarts", "max_lloyd_iters", "seed"}, where);
    KmeansConfig c;
    optional_into(j, "restarts", c.restarts, where);
    optional_into(j, "max_lloyd_iters", c.max_lloyd_iters, where);
    optional_into(j, "seed", c.seed, where);
    if (c.restarts < 1 || c.max_lloyd_iters < 1) throw ConfigError(where + ": limits must be positive");
    return c;
}

json fit_summary(const FitResult& fit, bool include_params) {
    json j{{"labels", fit.labels},
           {"iterations", fit.iters},
           {"converged", fit.converged},
           {"bic", fit.bic},
           {"support_size", fit.support_size},
           {"lambda", fit.lambda},
           {"mean_shift_trace", fit.mean_shift_trace}};
    if (!fit.loglik_trace.empty()) j["loglik_trace"] = fit.loglik_trace;
    if (include_params) {
        j["params"] = to_json(fit.params);
        json support = json::array();
        for (std::size_t k = 0; k < fit.discs.coefs.size(); ++k) {
            const auto& b = fit.discs.coefs[k];
            for (std::size_t off = 0; off < b.size(); ++off)
                if (b[off] != 0.0) support.push_back({{"cluster", k + 1}, {"offset", off}, {"value", b[off]}});
        }
        j["support"] = support;
    }
    return j;
}

}  // namespace tensorclust::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tensorclust/deem.hpp"
#include "tensorclust/em.hpp"
#include "tensorclust/kmeans.hpp"
#include "tensorclust/simulate.hpp"

namespace tensorclust::io {

using json = nlohmann::json;

/// Metadata sidecar of a dataset file.
struct DatasetMeta {
    Dims dims;
    std::size_t n = 0;
    std::optional<int> k_true;
    std::optional<std::uint64_t> seed;
};

struct LoadedDataset {
    std::vector<Tensor> data;
    DatasetMeta meta;
};

/// Paths making up one dataset: `<stem>.csv`, `<stem>.json`, `<stem>.truth.json`.
struct DatasetPaths {
    std::filesystem::path csv;
    std::filesystem::path meta;
    std::filesystem::path truth;
};

/// Accepts either the stem or the .csv path.
DatasetPaths dataset_paths(const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Headerless CSV, one vectorized observation per row, plus the JSON sidecar.
void write_dataset(const std::filesystem::path& path, std::span<const Tensor> data, const DatasetMeta& meta);
LoadedDataset read_dataset(const std::filesystem::path& path);

json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
json to_json(const Tensor& t);
json to_json(const TnmmParams& params);
TnmmParams params_from_json(const json& j);

/// Ground truth sidecar: labels (zero-based) and the generating parameters.
void write_truth(const std::filesystem::path& path, std::span<const int> labels, const TnmmParams& truth);
std::vector<int> read_truth_labels(const std::filesystem::path& path);

json to_json(const sim::SimSpec& spec);
/// Throws ConfigError naming the offending field.
sim::SimSpec spec_from_json(const json& j);

/// Optional keys override the defaults; unknown keys are rejected.
DeemConfig deem_config_from_json(const json& j);
EmConfig em_config_from_json(const json& j);
KmeansConfig kmeans_config_from_json(const json& j);

json fit_summary(const FitResult& fit, bool include_params = true);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace tensorclust::io

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "tensorclust/error.hpp"
#include "tensorclust/io.hpp"

using namespace tensorclust;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tensorclust_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("number formatting reads back exactly") {
    std::mt19937_64 rng(50);
    std::normal_distribution<double> g(0.0, 1e3);
    std::vector<double> values{0.0, -0.0, 1.0 / 3.0, 1e-310, std::numeric_limits<double>::max(),
                               std::numeric_limits<double>::denorm_min(), -2.5e-17};
    for (int i = 0; i < 500; ++i) values.push_back(g(rng));
    for (double v : values) {
        const std::string s = io::format_double(v);
        CHECK(same_bits(std::strtod(s.c_str(), nullptr), v));
    }
}

TEST_CASE("dataset round trip is bitwise") {
    const fs::path dir = scratch_dir("roundtrip");
    std::mt19937_64 rng(51);
    std::vector<Tensor> data;
    for (int i = 0; i < 12; ++i) data.push_back(oracle::random_tensor({3, 2, 2}, rng));
    io::DatasetMeta meta{{3, 2, 2}, data.size(), 2, 77};
    io::write_dataset(dir / "d.csv", data, meta);

    const auto loaded = io::read_dataset(dir / "d");
    REQUIRE(loaded.data.size() == data.size());
    CHECK(loaded.meta.dims == meta.dims);
    CHECK(loaded.meta.k_true == 2);
    CHECK(loaded.meta.seed == 77u);
    for (std::size_t i = 0; i < data.size(); ++i)
        for (Eigen::Index j = 0; j < data[i].values().size(); ++j)
            CHECK(same_bits(loaded.data[i].values()(j), data[i].values()(j)));

    // Writing what was read reproduces the same bytes.
    io::write_dataset(dir / "e", loaded.data, loaded.meta);
    CHECK(slurp(dir / "d.csv") == slurp(dir / "e.csv"));
    auto meta_d = io::read_json(dir / "d.json");
    auto meta_e = io::read_json(dir / "e.json");
    CHECK(meta_d.at("payload") == "d.csv");
    meta_d.erase("payload");
    meta_e.erase("payload");
    CHECK(meta_d == meta_e);

    // First-index-fastest: element (1,0,0) is the second column of row 0.
    std::ifstream in(dir / "d.csv");
    std::string first;
    std::getline(in, first, ',');
    std::getline(in, first, ',');
    const std::size_t idx[] = {1, 0, 0};
    CHECK(same_bits(std::strtod(first.c_str(), nullptr), data[0].at(idx)));
}

TEST_CASE("dataset shape checks") {
    const fs::path dir = scratch_dir("shape");
    std::mt19937_64 rng(52);
    std::vector<Tensor> data;
    for (int i = 0; i < 4; ++i) data.push_back(oracle::random_tensor({2, 2}, rng));
    io::write_dataset(dir / "d", data, io::DatasetMeta{{2, 2}, 4, std::nullopt, std::nullopt});

    SUBCASE("metadata dims disagree with row width") {
        auto meta = io::read_json(dir / "d.json");
        meta["dims"] = {2, 3};
        io::write_json(dir / "d.json", meta);
        CHECK_THROWS_AS(io::read_dataset(dir / "d"), DimensionError);
    }
    SUBCASE("row count disagrees") {
        auto meta = io::read_json(dir / "d.json");
        meta["n"] = 5;
        io::write_json(dir / "d.json", meta);
        CHECK_THROWS_AS(io::read_dataset(dir / "d"), DimensionError);
    }
    SUBCASE("short row") {
        std::ofstream(dir / "d.csv", std::ios::app) << "1,2,3\n";
        auto meta = io::read_json(dir / "d.json");
        meta["n"] = 5;
        io::write_json(dir / "d.json", meta);
        CHECK_THROWS_AS(io::read_dataset(dir / "d"), DimensionError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(io::read_dataset(dir / "absent"), IoError);
    }
    CHECK_THROWS_AS(io::write_dataset(dir / "x", data, io::DatasetMeta{{2, 3}, 4, std::nullopt, std::nullopt}),
                    DimensionError);
}

TEST_CASE("parameter and truth round trip") {
    const fs::path dir = scratch_dir("params");
    std::mt19937_64 rng(53);
    const auto p = testing_support::random_params({3, 2}, 3, rng);
    const TnmmParams q = io::params_from_json(io::to_json(p));
    CHECK(q.pis == p.pis);
    for (std::size_t k = 0; k < 3; ++k) CHECK(q.means[k].values() == p.means[k].values());
    for (std::size_t m = 0; m < 2; ++m) CHECK(q.sigmas[m] == p.sigmas[m]);

    // Text round trip of the serialized form.
    const TnmmParams r = io::params_from_json(io::json::parse(io::to_json(p).dump()));
    for (std::size_t m = 0; m < 2; ++m) CHECK(r.sigmas[m] == p.sigmas[m]);

    const std::vector<int> labels{0, 2, 1, 1};
    io::write_truth(dir / "t.json", labels, p);
    CHECK(io::read_truth_labels(dir / "t.json") == labels);
}

TEST_CASE("simulation spec JSON") {
    for (const auto& name : sim::preset_names()) {
        const auto spec = sim::preset(name, 9);
        const auto back = io::spec_from_json(io::to_json(spec));
        CHECK(io::to_json(back) == io::to_json(spec));
        CHECK(sim::build_model(back).means[1].values() == sim::build_model(spec).means[1].values());
    }

    SUBCASE("preset shorthand") {
        const auto s = io::spec_from_json(io::json{{"preset", "M4"}, {"seed", 3}, {"delta_scale", 2.0}});
        CHECK(s.name == "M4");
        CHECK(s.seed == 3u);
        CHECK(s.delta_scale == 2.0);
    }
    SUBCASE("missing field names the field") {
        io::json j = io::to_json(sim::preset("M1"));
        j.erase("n_per_cluster");
        try {
            io::spec_from_json(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("n_per_cluster") != std::string::npos);
        }
    }
    SUBCASE("unknown field") {
        io::json j = io::to_json(sim::preset("M1"));
        j["extra"] = 1;
        CHECK_THROWS_AS(io::spec_from_json(j), ConfigError);
    }
    SUBCASE("wrong type") {
        io::json j = io::to_json(sim::preset("M1"));
        j["K"] = "two";
        CHECK_THROWS_AS(io::spec_from_json(j), ConfigError);
    }
    SUBCASE("unknown covariance type") {
        io::json j = io::to_json(sim::preset("M1"));
        j["covariances"][0]["type"] = "banded";
        CHECK_THROWS_AS(io::spec_from_json(j), ConfigError);
    }
}

TEST_CASE("config parsing") {
    const auto d = io::deem_config_from_json(io::json{{"lambda", 0.5}, {"max_iters", 7}});
    REQUIRE(std::holds_alternative<FixedLambda>(d.lambda));
    CHECK(std::get<FixedLambda>(d.lambda).value == 0.5);
    CHECK(d.max_iters == 7);
    CHECK(d.mean_shift_tol == 0.1);

    const auto s = io::deem_config_from_json(io::json{{"schedule", {{"lambda0", 1.0}, {"kappa", 0.25}, {"c_lambda", 2.0}}}});
    REQUIRE(std::holds_alternative<LambdaSchedule>(s.lambda));
    CHECK(std::get<LambdaSchedule>(s.lambda).kappa == 0.25);

    CHECK_THROWS_AS(io::deem_config_from_json(io::json{{"lambda", 1.0}, {"schedule", {{"lambda0", 1.0}, {"kappa", 0.5}, {"c_lambda", 1.0}}}}),
                    ConfigError);
    CHECK_THROWS_AS(io::deem_config_from_json(io::json{{"lamda", 1.0}}), ConfigError);
    CHECK_THROWS_AS(io::deem_config_from_json(io::json{{"max_iters", 0}}), ConfigError);
    CHECK(io::em_config_from_json(io::json{{"flipflop_max", 3}}).flipflop_max == 3);
    CHECK(io::kmeans_config_from_json(io::json{{"restarts", 2}}).restarts == 2);
    CHECK_THROWS_AS(io::kmeans_config_from_json(io::json{{"restarts", 0}}), ConfigError);

    const fs::path dir = scratch_dir("config");
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(io::read_json(dir / "bad.json"), ConfigError);
}

TEST_CASE("fit summary") {
    const auto truth = testing_support::two_blobs({2, 2}, 8.0);
    const auto [data, labels] = testing_support::draw(truth, 60, 6);
    const TnmmParams init = init_params(data, labels, 2);
    DeemConfig cfg;
    cfg.lambda = FixedLambda{0.01};
    const FitResult fit = deem_fit(data, 2, cfg, init);
    const io::json j = io::fit_summary(fit);
    CHECK(j.at("labels").get<std::vector<int>>() == fit.labels);
    CHECK(j.at("support_size").get<std::size_t>() == fit.support_size);
    CHECK(j.at("support").size() == fit.support_size);
    CHECK(j.contains("params"));
    CHECK_FALSE(io::fit_summary(fit, false).contains("params"));
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "tensorclust/deem.hpp"
#include "tensorclust/em.hpp"
#include "tensorclust/error.hpp"
#include "tensorclust/kmeans.hpp"
#include "tensorclust/simulate.hpp"

namespace py = pybind11;
using namespace tensorclust;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// numpy arrays are C-order (last index fastest); tensors are first-index-fastest.
// Maps tensor offset -> C offset within one observation.
std::vector<std::size_t> c_offsets(const Dims& dims) {
    const std::size_t p = dims_product(dims);
    std::vector<std::size_t> out(p);
    std::vector<std::size_t> c_stride(dims.size(), 1);
    for (std::size_t m = dims.size(); m-- > 1;) c_stride[m - 1] = c_stride[m] * dims[m];
    for (std::size_t off = 0; off < p; ++off) {
        std::size_t rest = off, c = 0;
        for (std::size_t m = 0; m < dims.size(); ++m) {
            c += (rest % dims[m]) * c_stride[m];
            rest /= dims[m];
        }
        out[off] = c;
    }
    return out;
}

std::vector<Tensor> to_tensors(const Array& x) {
    if (x.ndim() < 2) throw DimensionError("expected an array of shape (n, p1, ..., pM)");
    Dims dims;
    for (py::ssize_t m = 1; m < x.ndim(); ++m) dims.push_back(static_cast<std::size_t>(x.shape(m)));
    const auto map = c_offsets(dims);
    const std::size_t p = map.size();
    const double* src = x.data();
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(x.shape(0)));
    for (py::ssize_t i = 0; i < x.shape(0); ++i) {
        Tensor t(dims);
        const double* row = src + static_cast<std::size_t>(i) * p;
        for (std::size_t off = 0; off < p; ++off) t[off] = row[map[off]];
        out.push_back(std::move(t));
    }
    return out;
}

Array to_array(std::span<const Tensor> ts) {
    const Dims& dims = ts.front().dims();
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(ts.size())};
    for (std::size_t d : dims) shape.push_back(static_cast<py::ssize_t>(d));
    Array out(shape);
    const auto map = c_offsets(dims);
    double* dst = out.mutable_data();
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t off = 0; off < map.size(); ++off) dst[i * map.size() + map[off]] = ts[i][off];
    return out;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto v = out.mutable_unchecked<2>();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v(i, j) = m(i, j);
    return out;
}

py::dict params_dict(const TnmmParams& p) {
    py::dict d;
    d["pis"] = p.pis;
    d["means"] = to_array(p.means);
    py::list sigmas;
    for (const auto& s : p.sigmas) sigmas.append(to_array(s));
    d["sigmas"] = sigmas;
    return d;
}

py::dict fit_dict(const FitResult& fit) {
    py::dict d;
    d["labels"] = fit.labels;
    d["iterations"] = fit.iters;
    d["converged"] = fit.converged;
    d["bic"] = fit.bic;
    d["support_size"] = fit.support_size;
    d["lambda"] = fit.lambda;
    d["responsibilities"] = to_array(fit.responsibilities);
    d["params"] = params_dict(fit.params);
    if (!fit.discs.coefs.empty()) d["discriminants"] = to_array(fit.discs.coefs);
    if (!fit.loglik_trace.empty()) d["loglik_trace"] = fit.loglik_trace;
    return d;
}

TnmmParams kmeans_init(const std::vector<Tensor>& data, int k, std::uint64_t seed) {
    KmeansConfig kc;
    kc.seed = seed;
    return init_params(data, kmeans_labels(data, k, kc), k);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tensor normal mixture clustering";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def(
        "simulate",
        [](const std::string& preset, std::uint64_t seed, std::optional<std::size_t> n_per_cluster, double delta_scale) {
            auto spec = sim::preset(preset, seed);
            if (n_per_cluster) spec.n_per_cluster = *n_per_cluster;
            spec.delta_scale = delta_scale;
            const auto ds = sim::generate(spec);
            py::dict d;
            d["data"] = to_array(ds.data);
            d["labels"] = ds.labels;
            d["truth"] = params_dict(ds.truth);
            return d;
        },
        py::arg("preset"), py::arg("seed") = 0, py::arg("n_per_cluster") = py::none(), py::arg("delta_scale") = 1.0,
        "Draw a benchmark dataset. Returns data of shape (n, p1, ..., pM), zero-based labels and the true parameters.");

    m.def(
        "kmeans",
        [](const Array& x, int k, std::uint64_t seed) {
            KmeansConfig kc;
            kc.seed = seed;
            return kmeans_labels(to_tensors(x), k, kc);
        },
        py::arg("x"), py::arg("k"), py::arg("seed") = 0);

    m.def(
        "fit_deem",
        [](const Array& x, int k, std::optional<std::vector<double>> lambdas, std::uint64_t seed) {
            const auto data = to_tensors(x);
            const TnmmParams init = kmeans_init(data, k, seed);
            const std::vector<double> grid = lambdas ? *lambdas : default_lambda_grid(init);
            py::gil_scoped_release release;
            TuneResult r = tune(data, k, grid, DeemConfig{}, init);
            py::gil_scoped_acquire acquire;
            py::dict d = fit_dict(r.fit);
            py::list path;
            for (const auto& p : r.path) {
                py::dict e;
                e["lambda"] = p.lambda;
                e["bic"] = p.bic ? py::cast(*p.bic) : py::none();
                e["support_size"] = p.support_size;
                path.append(e);
            }
            d["lambda_path"] = path;
            return d;
        },
        py::arg("x"), py::arg("k"), py::arg("lambdas") = py::none(), py::arg("seed") = 0,
        "DEEM with the penalty chosen by BIC over `lambdas` (default: 20-point grid).");

    m.def(
        "fit_em",
        [](const Array& x, int k, std::uint64_t seed) {
            const auto data = to_tensors(x);
            const TnmmParams init = kmeans_init(data, k, seed);
            py::gil_scoped_release release;
            FitResult fit = em_fit(data, k, EmConfig{}, init);
            py::gil_scoped_acquire acquire;
            return fit_dict(fit);
        },
        py::arg("x"), py::arg("k"), py::arg("seed") = 0);

    m.def(
        "clustering_error",
        [](const std::vector<int>& pred, const std::vector<int>& truth, int k) {
            return sim::clustering_error(pred, truth, k);
        },
        py::arg("pred"), py::arg("truth"), py::arg("k"));

    m.def("presets", &sim::preset_names);
}

#include "tensorclust/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "tensorclust/error.hpp"

namespace tensorclust {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

void check_dims(const Dims& dims) {
    if (dims.empty()) throw DimensionError("tensor needs at least one mode");
    for (auto d : dims)
        if (d == 0) throw DimensionError("tensor dimensions must be positive");
}

void check_mode(const Tensor& t, std::size_t mode) {
    if (mode >= t.order())
        throw DimensionError("mode " + std::to_string(mode) + " out of range for order-" +
                             std::to_string(t.order()) + " tensor");
}

struct ModeSplit {
    Eigen::Index left;   // prod_{l<mode} p_l
    Eigen::Index mid;    // p_mode
    Eigen::Index right;  // prod_{l>mode} p_l
};

ModeSplit split(const Dims& dims, std::size_t mode) {
    ModeSplit s{1, static_cast<Eigen::Index>(dims[mode]), 1};
    for (std::size_t l = 0; l < mode; ++l) s.left *= static_cast<Eigen::Index>(dims[l]);
    for (std::size_t l = mode + 1; l < dims.size(); ++l) s.right *= static_cast<Eigen::Index>(dims[l]);
    return s;
}

}  // namespace

std::size_t dims_product(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Dims dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    values_ = Vector::Zero(static_cast<Eigen::Index>(dims_product(dims_)));
}

Tensor::Tensor(Dims dims, Vector values) : dims_(std::move(dims)), values_(std::move(values)) {
    check_dims(dims_);
    if (static_cast<std::size_t>(values_.size()) != dims_product(dims_))
        throw DimensionError("value buffer length " + std::to_string(values_.size()) +
                             " does not match dimensions (expected " +
                             std::to_string(dims_product(dims_)) + ")");
}

Tensor Tensor::constant(Dims dims, double value) {
    Tensor t(std::move(dims));
    t.values_.setConstant(value);
    return t;
}

std::size_t Tensor::offset_of(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) throw DimensionError("index has wrong number of modes");
    std::size_t offset = 0;
    std::size_t stride = 1;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (index[m] >= dims_[m]) throw DimensionError("index out of range");
        offset += index[m] * stride;
        stride *= dims_[m];
    }
    return offset;
}

double Tensor::at(std::span<const std::size_t> index) const { return (*this)[offset_of(index)]; }
double& Tensor::at(std::span<const std::size_t> index) { return (*this)[offset_of(index)]; }

Tensor& Tensor::operator+=(const Tensor& rhs) {
    if (!same_shape(rhs)) throw DimensionError("tensor shapes differ in addition");
    values_ += rhs.values_;
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& rhs) {
    if (!same_shape(rhs)) throw DimensionError("tensor shapes differ in subtraction");
    values_ -= rhs.values_;
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    values_ *= s;
    return *this;
}

Vector vectorize(const Tensor& t) { return t.values(); }

Matrix matricize(const Tensor& t, std::size_t mode) {
    check_mode(t, mode);
    const auto s = split(t.dims(), mode);
    Matrix out(s.mid, s.left * s.right);
    const double* src = t.values().data();
    for (Eigen::Index r = 0; r < s.right; ++r)
        for (Eigen::Index i = 0; i < s.mid; ++i)
            for (Eigen::Index a = 0; a < s.left; ++a)
                out(i, a + s.left * r) = src[a + s.left * (i + s.mid * r)];
    return out;
}

Tensor fold(const Matrix& unfolded, std::size_t mode, const Dims& dims) {
    Tensor t(dims);
    check_mode(t, mode);
    const auto s = split(dims, mode);
    if (unfolded.rows() != s.mid || unfolded.cols() != s.left * s.right)
        throw DimensionError("unfolded matrix does not match target dimensions");
    double* dst = t.values().data();
    for (Eigen::Index r = 0; r < s.right; ++r)
        for (Eigen::Index i = 0; i < s.mid; ++i)
            for (Eigen::Index a = 0; a < s.left; ++a)
                dst[a + s.left * (i + s.mid * r)] = unfolded(i, a + s.left * r);
    return t;
}

Tensor mode_mult(const Tensor& t, std::size_t mode, const Matrix& g) {
    check_mode(t, mode);
    if (static_cast<std::size_t>(g.cols()) != t.dim(mode))
        throw DimensionError("mode_mult: matrix has " + std::to_string(g.cols()) +
                             " columns, mode " + std::to_string(mode) + " has size " +
                             std::to_string(t.dim(mode)));
    Dims out_dims = t.dims();
    out_dims[mode] = static_cast<std::size_t>(g.rows());
    Tensor out(out_dims);
    const auto s = split(t.dims(), mode);
    const Eigen::Index d = g.rows();

    // The unfolding is a set of `right` column blocks, each a (left x p_mode)
    // column-major slice, so the product is done slice by slice in place.
    if (s.left == 1) {
        MutMap(out.values().data(), d, s.right).noalias() = g * ConstMap(t.values().data(), s.mid, s.right);
        return out;
    }
    for (Eigen::Index r = 0; r < s.right; ++r) {
        ConstMap slice(t.values().data() + r * s.left * s.mid, s.left, s.mid);
        MutMap dst(out.values().data() + r * s.left * d, s.left, d);
        dst.noalias() = slice * g.transpose();
    }
    return out;
}

Tensor tucker(const Tensor& t, std::span<const Matrix> gs) {
    if (gs.size() != t.order())
        throw DimensionError("tucker: expected " + std::to_string(t.order()) + " matrices, got " +
                             std::to_string(gs.size()));
    Tensor out = t;
    for (std::size_t m = 0; m < gs.size(); ++m) out = mode_mult(out, m, gs[m]);
    return out;
}

Tensor tucker_except(const Tensor& t, std::span<const Matrix> gs, std::size_t skip) {
    if (gs.size() != t.order()) throw DimensionError("tucker_except: wrong number of matrices");
    Tensor out = t;
    for (std::size_t m = 0; m < gs.size(); ++m)
        if (m != skip) out = mode_mult(out, m, gs[m]);
    return out;
}

double inner(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("inner: tensor shapes differ");
    return a.values().dot(b.values());
}

double frobenius_norm(const Tensor& t) { return t.values().norm(); }

void add_mode_scatter(const Tensor& t, std::size_t mode, double weight, Matrix& out) {
    check_mode(t, mode);
    const auto s = split(t.dims(), mode);
    if (out.rows() != s.mid || out.cols() != s.mid) throw DimensionError("scatter accumulator has wrong size");
    if (s.left == 1) {
        ConstMap unfolded(t.values().data(), s.mid, s.right);
        out.selfadjointView<Eigen::Lower>().rankUpdate(unfolded, weight);
    } else {
        for (Eigen::Index r = 0; r < s.right; ++r) {
            ConstMap slice(t.values().data() + r * s.left * s.mid, s.left, s.mid);
            out.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose(), weight);
        }
    }
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
}

Matrix mode_scatter(const Tensor& t, std::size_t mode) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(t.dim(mode)), static_cast<Eigen::Index>(t.dim(mode)));
    add_mode_scatter(t, mode, 1.0, out);
    return out;
}

}  // namespace tensorclust

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tensorclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

/// Product of all entries of `dims`.
std::size_t dims_product(std::span<const std::size_t> dims);

/**
 * Dense M-way array of doubles.
 *
 * Storage is first-index-fastest: the element at zero-based multi-index
 * (i_1, ..., i_M) lives at offset sum_m i_m * prod_{l<m} p_l. With this
 * layout vec(T) is the raw buffer and
 *     vec(T x_1 G_1 ... x_M G_M) = (G_M kron ... kron G_1) vec(T).
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Dims dims);
    Tensor(Dims dims, Vector values);

    static Tensor zeros(Dims dims) { return Tensor(std::move(dims)); }
    static Tensor constant(Dims dims, double value);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

    const Vector& values() const noexcept { return values_; }
    Vector& values() noexcept { return values_; }

    double operator[](std::size_t offset) const { return values_[static_cast<Eigen::Index>(offset)]; }
    double& operator[](std::size_t offset) { return values_[static_cast<Eigen::Index>(offset)]; }

    double at(std::span<const std::size_t> index) const;
    double& at(std::span<const std::size_t> index);
    std::size_t offset_of(std::span<const std::size_t> index) const;

    bool same_shape(const Tensor& other) const noexcept { return dims_ == other.dims_; }

    Tensor& operator+=(const Tensor& rhs);
    Tensor& operator-=(const Tensor& rhs);
    Tensor& operator*=(double s);

    friend Tensor operator+(Tensor lhs, const Tensor& rhs) { return lhs += rhs; }
    friend Tensor operator-(Tensor lhs, const Tensor& rhs) { return lhs -= rhs; }
    friend Tensor operator*(Tensor lhs, double s) { return lhs *= s; }
    friend Tensor operator*(double s, Tensor rhs) { return rhs *= s; }

private:
    Dims dims_;
    Vector values_;
};

/// vec(T): the flat buffer in first-index-fastest order.
Vector vectorize(const Tensor& t);

/// Mode-`mode` unfolding (zero-based mode), p_mode x prod_{m != mode} p_m.
Matrix matricize(const Tensor& t, std::size_t mode);

/// Inverse of matricize for a tensor of shape `dims`.
Tensor fold(const Matrix& unfolded, std::size_t mode, const Dims& dims);

/// T x_mode G. G must have dims[mode] columns.
Tensor mode_mult(const Tensor& t, std::size_t mode, const Matrix& g);

/// [[T; G_1, ..., G_M]] = T x_1 G_1 x_2 ... x_M G_M.
Tensor tucker(const Tensor& t, std::span<const Matrix> gs);

/// Tucker product that skips mode `skip` (identity on that mode).
Tensor tucker_except(const Tensor& t, std::span<const Matrix> gs, std::size_t skip);

double inner(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& t);

/**
 * Accumulates  weight * T_(mode) T_(mode)^T  into `out` (p_mode x p_mode)
 * without materializing the unfolding.
 */
void add_mode_scatter(const Tensor& t, std::size_t mode, double weight, Matrix& out);

/// T_(mode) T_(mode)^T.
Matrix mode_scatter(const Tensor& t, std::size_t mode);

}  // namespace tensorclust

#pragma once

#include <stdexcept>
#include <string>

namespace tensorclust {

/// Shapes or modes that do not conform.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad configuration or model specification.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File reading/writing failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: non-SPD input, failed factorization, collapsed clusters.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cluster lost (effectively) all of its members during fitting.
class DegenerateClusterError : public NumericalError {
public:
    DegenerateClusterError(int cluster, int iteration, double mass)
        : NumericalError("cluster " + std::to_string(cluster) + " collapsed at iteration " +
                         std::to_string(iteration) + " (effective size " + std::to_string(mass) + ")"),
          cluster_(cluster),
          iteration_(iteration) {}

    int cluster() const noexcept { return cluster_; }
    int iteration() const noexcept { return iteration_; }

private:
    int cluster_;
    int iteration_;
};

}  // namespace tensorclust

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace levelset {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map it onto an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnsupportedArchitecture : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual);
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// splitmix64 finaliser; used to derive independent sub-stream seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix_seed(mix_seed(base) ^ (index * 0xd1342543de82ef95ULL + 1));
}

/// Pairwise (tree) sum in a fixed order. The association pattern depends only
/// on values.size(), never on how the values were produced.
[[nodiscard]] double pairwise_sum(std::span<const double> values);

/// Pairwise reduction of equally sized vectors, same fixed order as pairwise_sum.
[[nodiscard]] Vector pairwise_sum(std::vector<Vector> parts);

/// Caps the number of OpenMP workers used by the parallel kernels (0 = runtime default).
void set_max_threads(int threads);
[[nodiscard]] int max_threads();

}  // namespace levelset

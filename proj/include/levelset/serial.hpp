#pragma once

// Straight-line serial reference implementations of the data-parallel kernels.
// They share no code with the chunked/OpenMP paths and exist so tests and the
// benchmark can compare the two.

#include <span>
#include <vector>

#include "levelset/kernels.hpp"
#include "levelset/netcore.hpp"

namespace levelset::serial {

[[nodiscard]] std::vector<double> forward(const ParamVector& params, std::span<const double> x);

/// Left-to-right summation over samples.
[[nodiscard]] double loss(const ParamVector& params, const Dataset& data, const LossSpec& spec);

/// Per-sample backpropagation with explicit loops.
[[nodiscard]] std::vector<double> grad(const ParamVector& params, const Dataset& data, const LossSpec& spec);

/// Same sub-streams as kernels::relu_kernel_mc, consumed sequentially with a
/// running Welford accumulator instead of a blocked pairwise reduction.
[[nodiscard]] kernels::KernelEstimate relu_kernel_mc(const Vector& w1, const Vector& w2,
                                                     const kernels::Sampler& sampler, long n, std::uint64_t seed);

}  // namespace levelset::serial

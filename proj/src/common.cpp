#include "levelset/common.hpp"

#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace levelset {

namespace {

double tree_sum(std::span<const double> v) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    const std::size_t half = v.size() / 2;
    return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

}  // namespace

SolverError::SolverError(const std::string& what, double residual)
    : Error([&] {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3e", residual);
          return what + " (residual " + buf + ")";
      }()),
      residual_(residual) {}

double pairwise_sum(std::span<const double> values) { return tree_sum(values); }

Vector pairwise_sum(std::vector<Vector> parts) {
    if (parts.empty()) return {};
    // Bottom-up with stride doubling: ((0+1)+(2+3))+... independent of thread count.
    for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
        for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
            parts[i] += parts[i + stride];
        }
    }
    return std::move(parts[0]);
}

void set_max_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace levelset

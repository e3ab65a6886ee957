#pragma once

#include <cstdint>
#include <string>

#include "levelset/dataset.hpp"
#include "levelset/netcore.hpp"

namespace levelset::tasks {

/// f2(x) = 4 (x - 0.5)^2, range [0, 1] on [0, 1].
[[nodiscard]] double quadratic_target(double x);
/// f3(x) = 0.5 + 6 (x - 0.2)(x - 0.5)(x - 0.8), range [0.02, 0.98] on [0, 1].
[[nodiscard]] double cubic_target(double x);

/// x ~ U[0, 1), y = f_degree(x). degree is 2 or 3; L >= 2.
[[nodiscard]] Dataset gen_poly(int degree, long samples, std::uint64_t seed);

struct MixtureSpec {
    double mu = 1.0;     // component means at (+-mu, 0)
    double sigma = 0.1;  // isotropic component standard deviation
    double pi = 1.0;     // probability of the primary target
    long samples = 256;
    std::uint64_t seed = 0;

    void validate() const;
};

/// X ~ N((Z mu, 0), sigma^2 I) with Z uniform on {-1, +1}. With probability pi
/// the target is Y = (X - mu_Z) Z, otherwise the alternative target -Y.
[[nodiscard]] Dataset gen_mixture(const MixtureSpec& spec);

/// The 2-2-2 ReLU network that bisects the two mixture components: hidden
/// units max(0, x0) and max(0, -x0), output (h0 + h1 - mu, 0). With
/// `swapped` the two hidden units trade places.
[[nodiscard]] ParamVector mixture_bisector_net(double mu, bool swapped = false);

/// Three points (1, 0), (-0.5, 0.87), (-0.5, -0.87) mapped to the next point
/// in that cyclic order.
[[nodiscard]] Dataset gen_permutation();

/// X ~ N(0, I_n), y = sum_j a_j max(0, <u_j, x>) for a fixed random teacher
/// with `units` unit-norm directions. Scalar targets.
[[nodiscard]] Dataset gen_relu_teacher(int dim, int units, long samples, std::uint64_t seed);

/// Copy of `data` with a constant 1 appended to every input row.
[[nodiscard]] Dataset with_bias_column(const Dataset& data);

/// Header x0..x{n-1},y0..y{p-1}; values written with 17 significant digits.
void save_csv(const Dataset& data, const std::string& path);
/// Throws ParseError carrying the 1-based line number of the first bad line.
[[nodiscard]] Dataset load_csv(const std::string& path);

}  // namespace levelset::tasks

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "levelset/netcore.hpp"

/// Continuous low-loss paths between two deep linear networks (identity
/// activations, no bias) built by repeatedly merging a pair of adjacent layers
/// and lifting the path of the shorter network back through a factorization
/// F(t) = U(t) S(t) V(t)^T with a companion layer G(t) = W(t) F(t)^+ + N(t)(I - U U^T).
namespace levelset::linpath {

/// Geodesic t -> A exp(t log(A^T B)) in SO(n). A and B must be special
/// orthogonal; eigenvalues -1 of A^T B are paired into rotations by pi.
class SoGeodesic {
public:
    SoGeodesic() = default;
    SoGeodesic(const Matrix& a, const Matrix& b);
    [[nodiscard]] Matrix at(double t) const;

private:
    Matrix a_;
    Matrix b_;
    Matrix q_;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> planes_;
    std::vector<double> angles_;
};

/// Real skew-symmetric logarithm of a special orthogonal matrix.
[[nodiscard]] Matrix so_log(const Matrix& r);

/// Completes orthonormal columns U (h×r, h > r) to a square orthogonal matrix with determinant +1.
[[nodiscard]] Matrix complete_special_orthogonal(const Matrix& u);

struct GlobalMin {
    ParamVector params;
    double loss = 0.0;
    bool singular_covariance = false;  // inputs rank deficient; pseudo-inverse used
    int rank = 0;                      // rank of the fitted product
};

/// Least squares over products W_K ... W_1 (rank limited by the narrowest
/// layer): ordinary least squares through a pseudo-inverse, reduced-rank
/// projection onto the leading right singular vectors of the fitted outputs,
/// then a balanced split across the layers.
[[nodiscard]] GlobalMin global_min_linear(const ArchSpec& arch, const Dataset& data);

struct LinearDiagnostics {
    double det_v = 1.0;        // determinant of V(t) farthest from 1 over all lifted layers
    double det_u = 1.0;        // same for the completed U(t)
    double min_singular = 0.0; // smallest entry of S(t) over all lifted layers
    double product_residual = 0.0;  // largest |G(t) F(t) - W(t)|_F
};

class LinearPath {
public:
    struct Node;

    LinearPath(ArchSpec arch, ParamVector a, ParamVector b, std::shared_ptr<const Node> root);

    [[nodiscard]] ParamVector at(double t) const;
    [[nodiscard]] LinearDiagnostics diagnostics(double t) const;
    [[nodiscard]] const ArchSpec& arch() const noexcept { return arch_; }
    /// 1-based index of the hidden layer removed by the outermost merge.
    [[nodiscard]] int pivot_layer() const noexcept { return pivot_; }

private:
    ArchSpec arch_;
    ParamVector a_;
    ParamVector b_;
    std::shared_ptr<const Node> root_;
    int pivot_ = 0;
};

/// Requires identity activations, no bias, and every hidden width strictly
/// greater than min(input, output) (UnsupportedArchitecture otherwise).
[[nodiscard]] LinearPath build_linear_path(const ParamVector& a, const ParamVector& b);

enum class RidgeStage { rebalance_a, main, rebalance_b };

struct RidgeSample {
    ParamVector params;
    RidgeStage stage = RidgeStage::main;
    double factor_norm_sq = 0.0;  // |W1|^2 + |W2|^2
    double nuclear_norm = 0.0;    // |W2 W1|_*
};

/// Two-layer linear path for the l2-regularized loss: each endpoint is first
/// moved (product fixed, factor norms nonincreasing) to the balanced
/// factorization of its product, then the product is interpolated linearly and
/// factored in balanced form, then the second endpoint's move is replayed backwards.
class RidgePath {
public:
    struct Impl;

    explicit RidgePath(std::shared_ptr<const Impl> impl);
    [[nodiscard]] ParamVector at(double t) const;
    [[nodiscard]] RidgeSample sample(double t) const;
    /// Euclidean length of the first rebalancing stage, measured on `samples` points.
    [[nodiscard]] double rebalance_length(int samples = 257) const;

private:
    std::shared_ptr<const Impl> impl_;
};

/// K = 2 only (UnsupportedArchitecture otherwise); hidden width must exceed min(input, output).
[[nodiscard]] RidgePath build_ridge_path(const ParamVector& a, const ParamVector& b);

/// Balanced factorization of a p×n product for hidden width h (both factors have norm^2 = nuclear norm).
[[nodiscard]] std::pair<Matrix, Matrix> balanced_factors(const Matrix& product, int hidden);

struct PathVerification {
    double max_loss = 0.0;
    bool monotone = true;  // nonincreasing within kMonotoneTolerance per step
    std::vector<std::pair<double, double>> profile;  // (t, loss)
};

inline constexpr double kMonotoneTolerance = 1e-9;

[[nodiscard]] PathVerification verify_path(const std::function<ParamVector(double)>& path, const Dataset& data,
                                           const LossSpec& spec, int samples);

struct ProfileRow {
    double t = 0.0;
    double loss = 0.0;
    LinearDiagnostics diag;
};

[[nodiscard]] std::vector<ProfileRow> linear_profile(const LinearPath& path, const Dataset& data, int samples);

/// CSV columns: t,loss,det_V,min_singular,product_residual.
void save_profile_csv(const std::string& path, const std::vector<ProfileRow>& rows);

}  // namespace levelset::linpath

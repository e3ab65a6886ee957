#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "levelset/common.hpp"
#include "levelset/dataset.hpp"

/// ReLU feature kernels and the pruning machinery for single-hidden-layer
/// networks Y ~ gamma . max(0, W^T X). First-layer matrices are n×m with one
/// hidden unit per column.
namespace levelset::kernels {

/// Monte-Carlo draws are made in blocks of this many samples; block b uses its
/// own generator seeded from (seed, b), so estimates are bit-stable no matter
/// how blocks are scheduled.
inline constexpr long kBlockSamples = 4096;

enum class SamplerKind { gaussian, uniform_sphere, mixture };

/// Input distribution P for the expectations below.
struct Sampler {
    SamplerKind kind = SamplerKind::gaussian;
    int dim = 2;
    double scale = 1.0;  // gaussian: standard deviation; uniform_sphere: radius
    double mu = 1.0;     // mixture: component means at (+-mu, 0, ...)
    double sigma = 0.1;  // mixture: isotropic component standard deviation

    [[nodiscard]] static Sampler gaussian(int dim, double scale = 1.0);
    [[nodiscard]] static Sampler uniform_sphere(int dim, double radius = 1.0);
    [[nodiscard]] static Sampler mixture(int dim, double mu, double sigma);

    void draw(std::mt19937_64& rng, double* out) const;
};

struct KernelEstimate {
    double value = 0.0;      // estimate of E max(0,<X,w1>) max(0,<X,w2>)
    double std_error = 0.0;  // sample std / sqrt(n)
    long n_samples = 0;
    double alpha = 0.0;  // angle between w1 and w2
};

/// Angle between two vectors, computed as 2 atan2(|a-b|, |a+b|) so that
/// identical inputs give exactly 0.
[[nodiscard]] double angle_between(const Vector& a, const Vector& b);

/// Closed-form E max(0,<X,w1>) max(0,<X,w2>) for X ~ N(0, I) and unit w1, w2.
[[nodiscard]] double arccos_kernel(double alpha);

[[nodiscard]] KernelEstimate relu_kernel_mc(const Vector& w1, const Vector& w2, const Sampler& sampler, long n,
                                            std::uint64_t seed);

/// (w1 + w2) / |w1 + w2|. Throws ContractViolation for antipodal inputs.
[[nodiscard]] Vector bisector(const Vector& w1, const Vector& w2);

enum class BoundMode {
    spectral,   // uses |Sigma_X|, the top eigenvalue of E[X X^T]
    projected,  // replaces 2|Sigma_X| by E|Q X|^2, Q the projection onto span(w1, w2)
};

struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
    double wm_norm_z_sq = 0.0;  // E max(0,<X,w_m>)^2
    double sigma_norm = 0.0;    // top eigenvalue of the empirical E[X X^T]
    double projected_energy = 0.0;
    KernelEstimate kernel;      // [w1,w2]_Z from the same draws
};

/// Lower/upper bounds on [w1,w2]_Z around the unit bisector, every quantity
/// estimated from one sample stream.
[[nodiscard]] BoundPair prop3_bounds(const Vector& w1, const Vector& w2, const Sampler& sampler, long n,
                                     std::uint64_t seed, BoundMode mode = BoundMode::spectral);

struct EpsNet {
    int dim = 0;
    double epsilon = 0.0;         // chord radius
    std::vector<Vector> centers;  // unit vectors, pairwise chord distance > epsilon
    std::vector<int> assignments; // per covered column (see cover_columns), nearest center
    [[nodiscard]] double bound() const;
};

/// (1 + 2/eps)^n.
[[nodiscard]] double covering_bound(int dim, double epsilon);

/// Greedy net on S^{n-1}: random candidate points are visited in order and a
/// candidate becomes a center whenever no existing center is within epsilon.
[[nodiscard]] EpsNet build_eps_net(int dim, double epsilon, std::uint64_t seed, int candidates = 20000);

/// Adds any column not within epsilon of the net as a new center (keeping the
/// separation), then records the nearest center of every column.
void cover_columns(EpsNet& net, const Matrix& unit_columns);

struct Cluster {
    std::vector<int> members;  // column indices, ascending
    int center = -1;
    EpsNet net;
};

/// Assigns each unit column of W to its nearest net center, for a net whose
/// chord radius corresponds to the angle `angle_eps`; returns the most populous
/// cluster (ties go to the lowest center index).
[[nodiscard]] Cluster cluster_pigeonhole(const Matrix& w, double angle_eps, std::uint64_t seed);

/// max(0, X W): L×m features.
[[nodiscard]] Matrix relu_features(const Matrix& w, const RowMatrix& inputs);

struct SecondLayerFit {
    Vector gamma;
    double objective = 0.0;
    double kappa = 0.0;
    int support_size = 0;
    double stationarity = 0.0;  // largest KKT violation
    long sweeps = 0;
};

inline constexpr double kFitTolerance = 1e-8;

/// min_gamma mean |y - Z(W) gamma|^2 + kappa |gamma|_1 for scalar targets,
/// solved by cyclic coordinate descent on the Gram matrix. Throws SolverError
/// if the KKT residual is not below kFitTolerance within the sweep budget.
[[nodiscard]] SecondLayerFit fit_second_layer(const Matrix& w, const Dataset& data, double kappa,
                                              const Vector* warm_start = nullptr);

/// Objective of the fit above at a given gamma.
[[nodiscard]] double second_layer_objective(const Matrix& w, const Dataset& data, double kappa, const Vector& gamma);

struct PruneStep {
    int removed = -1;      // original column index
    int merged_into = -1;  // original column index receiving the coefficient
    double merged_objective = 0.0;
    double objective = 0.0;  // after re-fit
    double increase = 0.0;   // objective minus the previous optimum
};

struct PruneReport {
    std::vector<int> cluster;
    std::vector<PruneStep> steps;
    std::vector<double> per_step_increase;
    double total_increase = 0.0;
    double initial_objective = 0.0;
    std::vector<int> surviving;  // original indices of the remaining columns
    Vector merged_coeffs;        // second layer over `surviving`
};

/// Removes cluster columns one at a time (all but one), folding each removed
/// coefficient onto the nearest surviving cluster member before re-fitting.
[[nodiscard]] PruneReport prune_merge(const Matrix& w, const Vector& gamma, const std::vector<int>& cluster,
                                      const Dataset& data, double kappa);

struct OracleRiskProfile {
    std::vector<double> raw;       // index l = number of units, l = 0..max
    std::vector<double> enforced;  // running minimum (zero-unit padding)
};

/// Heuristic upper bound on the oracle risk with l unit-norm hidden units.
[[nodiscard]] double estimate_oracle_risk(int units, const Dataset& data, double kappa, int restarts,
                                          std::uint64_t seed);
[[nodiscard]] OracleRiskProfile oracle_risk_profile(int max_units, const Dataset& data, double kappa, int restarts,
                                                    std::uint64_t seed);

}  // namespace levelset::kernels

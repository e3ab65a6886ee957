#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "levelset/netcore.hpp"

/// Dynamic string sampling: connect two models of equal loss level through a
/// chain of intermediate models ("beads") such that the loss along every
/// straight segment stays below a threshold.
namespace levelset::strings {

enum class TStarMode { local_max, half };

[[nodiscard]] std::string_view to_string(TStarMode m);
[[nodiscard]] TStarMode parse_tstar_mode(std::string_view s);

struct DssConfig {
    double L0 = 0.01;
    double alpha_train = 0.8;  // beads are trained to alpha_train * L0
    TStarMode tstar_mode = TStarMode::local_max;
    int interp_samples = 33;
    int max_depth = 10;
    TrainConfig train;  // template; target_loss is overridden and seeds are derived per bead

    void validate() const;
};

struct SegmentMax {
    double t_star = 0.5;
    double max_loss = 0.0;
};

struct SegmentProfile {
    double t_star = 0.5;
    double max_loss = 0.0;
    std::vector<std::pair<double, double>> curve;  // (t, loss) on a uniform grid, endpoints included
};

enum class AbortReason { max_depth, diverged, budget };

[[nodiscard]] std::string_view to_string(AbortReason r);
[[nodiscard]] AbortReason parse_abort_reason(std::string_view s);

struct PathResult {
    bool converged = false;
    double normalized_length = 1.0;
    int bead_count = 0;
    double max_interp_loss = 0.0;
    int depth_reached = 0;
    std::optional<AbortReason> abort_reason;
};

struct BeadList {
    std::vector<ParamVector> beads;
    std::vector<double> losses;
    std::vector<SegmentMax> segment_max;  // one per adjacent pair
    std::vector<int> depth_log;           // insertion depth (DSS) or round (CDSS); endpoints 0
};

struct Connection {
    BeadList beads;
    PathResult result;
};

class EndpointAboveThreshold : public ContractViolation {
public:
    EndpointAboveThreshold(double loss, double threshold)
        : ContractViolation("endpoint loss " + std::to_string(loss) + " exceeds threshold " + std::to_string(threshold)) {}
};

/// t * p1 + (1 - t) * p2.
[[nodiscard]] ParamVector interpolate(const ParamVector& p1, const ParamVector& p2, double t);

/// Loss of interpolate(p1, p2, t) on `samples` evenly spaced t in [0, 1].
/// t_star is the interior grid argmax (ties to the smallest t), or 0.5 in half mode.
[[nodiscard]] SegmentProfile segment_profile(const ParamVector& p1, const ParamVector& p2, const Dataset& data,
                                             const LossSpec& spec, int samples,
                                             TStarMode mode = TStarMode::local_max);

/// Greedy recursive bisection, depth first with the left segment first.
/// Endpoints must have loss <= cfg.L0 (EndpointAboveThreshold otherwise).
[[nodiscard]] Connection find_connection(const ParamVector& p1, const ParamVector& p2, const Dataset& data,
                                         const LossSpec& spec, const DssConfig& cfg);

enum class InsertRule { at_max, halfway };

[[nodiscard]] std::string_view to_string(InsertRule r);
[[nodiscard]] InsertRule parse_insert_rule(std::string_view s);

struct CdssConfig {
    double zeta = 0.0;     // spring weight
    double kappa_h = 0.0;  // hyperplane weight
    int steps_per_round = 50;
    InsertRule insert_rule = InsertRule::at_max;
    std::vector<double> schedule;  // strictly decreasing thresholds; the last one is the target
    int interp_samples = 33;
    int max_rounds = 200;
    int max_beads = 64;
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    int batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

/// F(b_i) + zeta (|b_i - b_{i-1}| + |b_i - b_{i+1}|) + kappa_h |cos(b_{i-1} - b_{i+1}, b_i - mid)|,
/// mid the midpoint of the neighbours; the cosine term is 0 when |b_i - mid| < 1e-12.
[[nodiscard]] double cdss_augmented_loss(const std::vector<ParamVector>& beads, std::size_t i, const Dataset& data,
                                         const LossSpec& spec, const CdssConfig& cfg);

/// Value and gradient in b_i of the augmented loss, data term over `rows`.
[[nodiscard]] LossGrad cdss_augmented_loss_grad(const std::vector<ParamVector>& beads, std::size_t i,
                                                const Dataset& data, const LossSpec& spec, const CdssConfig& cfg,
                                                std::span<const Eigen::Index> rows);

/// Breadth-first string evolution. For each threshold of the schedule, rounds
/// of (train every interior bead on the augmented loss, insert a bead into every
/// segment above the threshold) run until the string is below the threshold.
[[nodiscard]] Connection cdss_evolve(const ParamVector& a, const ParamVector& b, const Dataset& data,
                                     const LossSpec& spec, const CdssConfig& cfg);

// BeadList file: {arch, L0, beads, losses, segment_max: [{t_star, max_loss}], depth_log, result}.
void save_beadlist(const std::string& path, const Connection& c, double L0);
[[nodiscard]] Connection load_beadlist(const std::string& path, double* L0 = nullptr);

}  // namespace levelset::strings

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "levelset/netcore.hpp"
#include "levelset/strings.hpp"

namespace levelset::geometry {

struct LengthReport {
    double polyline_length = 0.0;
    double endpoint_distance = 0.0;
    double normalized_length = 1.0;  // 1 when the endpoints coincide
    std::vector<double> per_segment;
    bool degenerate_endpoints = false;
};

/// Euclidean polyline length over flat parameter vectors. Needs >= 2 beads.
[[nodiscard]] LengthReport path_length(const std::vector<ParamVector>& beads);

struct SweepRecord {
    double L0 = 0.0;
    double mean_normalized_length = 0.0;  // NaN when no pair converged
    double mean_bead_count = 0.0;
    int n_pairs = 0;
    int n_converged = 0;
};

/// For every threshold (strictly decreasing): trains `pairs` model pairs to L0
/// (pair p uses init/training seeds derived from base_seed and p, identical
/// across thresholds) and connects them with find_connection. Pairs whose
/// endpoints fail to train or whose string does not converge are counted but
/// excluded from the means. `dss` supplies everything except L0.
[[nodiscard]] std::vector<SweepRecord> threshold_sweep(const ArchSpec& arch, const Dataset& data, const LossSpec& spec,
                                                       const std::vector<double>& thresholds, int pairs,
                                                       std::uint64_t base_seed, const strings::DssConfig& dss);

/// CSV columns: L0,mean_normalized_length,mean_bead_count,n_converged.
void save_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records);

struct Projection {
    Matrix coords;                   // beads × k
    std::vector<double> explained;   // variance ratios, decreasing
    Matrix components;               // S × k, orthonormal columns
    Vector mean;                     // bead centroid
};

/// PCA of the bead set (all beads, centered). Needs >= 2 beads and
/// 1 <= k <= min(bead count, parameter count).
[[nodiscard]] Projection pca_project(const std::vector<ParamVector>& beads, int k);

/// CSV columns: bead_index,c1..ck,loss.
void save_projection_csv(const std::string& path, const Projection& proj, const std::vector<double>& losses);

}  // namespace levelset::geometry

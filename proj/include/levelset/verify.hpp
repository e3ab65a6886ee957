#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

/// Self-checking experiment suites behind `levelset verify`. Each suite
/// returns its raw records and an overall verdict.
namespace levelset::verify {

struct Report {
    std::string kind;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> summary;
    bool pass = true;
    std::string failure;  // first failing record, empty on success

    void fail(const std::string& what) {
        if (pass) failure = what;
        pass = false;
    }
};

/// Kernel bound containment over random unit pairs, dimension 2 + (i mod 4);
/// every 20th pair has alpha = 0. Passes when >= 99.7% of pairs lie in
/// [lower - 3se, upper + 3se] and every alpha = 0 pair is tight.
[[nodiscard]] Report prop3_scan(int pairs, long samples, std::uint64_t seed);

/// Deep linear paths between random endpoints of a depth-K network (input 3,
/// output 2, hidden widths 4, 5, 4, ...): loss bound, det = 1, product
/// residual at 101 samples, and monotone descent to the global minimum.
[[nodiscard]] Report linpath_suite(int depth, int pairs, std::uint64_t seed);

/// Two-layer ridge paths (3-4-2, l2 penalty kappa): loss bound and the
/// factor-norm identity on the balanced stage at 101 samples.
[[nodiscard]] Report ridge_suite(int pairs, double kappa, std::uint64_t seed);

/// Greedy net sizes against (1 + 2/eps)^n.
[[nodiscard]] Report covering_suite(const std::vector<int>& dims, const std::vector<double>& epsilons,
                                    std::uint64_t seed);

/// Prune-and-merge on a ReLU teacher task: exact duplicates, planted clusters
/// of angular radius eps in {0.05, 0.1, 0.2} (linear fit of the worst per-step
/// increase, R^2 >= 0.8), and three prunes from the smallest pigeonhole
/// cluster for m in {32, 64, 128} (total increase must fall from m = 32 to 128).
[[nodiscard]] Report prune_suite(std::uint64_t seed);

void save_report_csv(const std::string& path, const Report& r);

}  // namespace levelset::verify

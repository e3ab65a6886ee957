#pragma once

#include <string>

#include "levelset/common.hpp"

namespace levelset {

/// L samples, one per row. inputs is L×n, targets is L×p.
struct Dataset {
    RowMatrix inputs;
    RowMatrix targets;
    std::string name;

    [[nodiscard]] Eigen::Index size() const noexcept { return inputs.rows(); }
    [[nodiscard]] Eigen::Index input_dim() const noexcept { return inputs.cols(); }
    [[nodiscard]] Eigen::Index output_dim() const noexcept { return targets.cols(); }

    /// Throws ContractViolation when empty or when row counts disagree.
    void validate() const;

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.inputs.rows() == b.inputs.rows() && a.inputs.cols() == b.inputs.cols() &&
               a.targets.cols() == b.targets.cols() && a.inputs == b.inputs && a.targets == b.targets;
    }
};

}  // namespace levelset

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levelset/common.hpp"
#include "levelset/dataset.hpp"

namespace levelset {

enum class Activation { relu, sigmoid, identity };

[[nodiscard]] std::string_view to_string(Activation a);
[[nodiscard]] Activation parse_activation(std::string_view s);

/// Fully connected network shape. Layer k (0-based) maps layer_sizes[k] inputs
/// to layer_sizes[k+1] outputs; hidden layer k is followed by activations[k].
struct ArchSpec {
    std::vector<int> layer_sizes;
    std::vector<Activation> activations;  // one per hidden layer
    bool use_bias = true;

    [[nodiscard]] static ArchSpec uniform(std::vector<int> sizes, Activation act, bool bias);

    [[nodiscard]] int depth() const noexcept { return static_cast<int>(layer_sizes.size()) - 1; }
    [[nodiscard]] int input_dim() const { return layer_sizes.front(); }
    [[nodiscard]] int output_dim() const { return layer_sizes.back(); }
    [[nodiscard]] int fan_in(int layer) const { return layer_sizes.at(layer); }
    [[nodiscard]] int fan_out(int layer) const { return layer_sizes.at(layer + 1); }

    [[nodiscard]] std::size_t param_count() const;
    /// Start of layer `layer` in the flat vector: weights (row-major, out×in) then biases.
    [[nodiscard]] std::size_t layer_offset(int layer) const;
    [[nodiscard]] std::size_t weight_index(int layer, int row, int col) const;
    [[nodiscard]] std::size_t bias_index(int layer, int row) const;

    struct Location {
        int layer;
        int row;
        int col;  // -1 for a bias entry
        friend bool operator==(const Location&, const Location&) = default;
    };
    [[nodiscard]] Location locate(std::size_t flat) const;

    /// Throws ContractViolation on an ill-formed shape.
    void validate() const;

    friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

/// Flat parameter vector tagged with the architecture that indexes it.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(ArchSpec arch);
    ParamVector(ArchSpec arch, Vector values);

    [[nodiscard]] const ArchSpec& arch() const noexcept { return arch_; }
    [[nodiscard]] const Vector& values() const noexcept { return values_; }
    [[nodiscard]] Vector& values() noexcept { return values_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }

    [[nodiscard]] RowMatrixMap weight(int layer);
    [[nodiscard]] ConstRowMatrixMap weight(int layer) const;
    [[nodiscard]] Eigen::Map<Vector> bias(int layer);
    [[nodiscard]] Eigen::Map<const Vector> bias(int layer) const;

    [[nodiscard]] bool all_finite() const { return values_.allFinite(); }

    friend bool operator==(const ParamVector& a, const ParamVector& b) {
        return a.arch_ == b.arch_ && a.values_.size() == b.values_.size() && a.values_ == b.values_;
    }

private:
    ArchSpec arch_;
    Vector values_;
};

enum class RegKind { none, l2_all, l1_second_layer, l2_first_l1_second };

[[nodiscard]] std::string_view to_string(RegKind r);
[[nodiscard]] RegKind parse_reg_kind(std::string_view s);

struct LossSpec {
    double kappa = 0.0;
    RegKind reg = RegKind::none;

    [[nodiscard]] bool active() const noexcept { return kappa != 0.0 && reg != RegKind::none; }
};

enum class OptimizerKind { sgd, rmsprop, adam };

[[nodiscard]] std::string_view to_string(OptimizerKind o);
[[nodiscard]] OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    int batch_size = 32;
    long max_steps = 10000;
    double target_loss = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

class TrainingDiverged : public Error {
public:
    explicit TrainingDiverged(long step)
        : Error("training diverged at step " + std::to_string(step)), step_(step) {}
    [[nodiscard]] long step() const noexcept { return step_; }

private:
    long step_;
};

struct TrainResult {
    ParamVector params;
    double final_loss = 0.0;
    bool converged = false;
    long steps = 0;
};

/// Optional per-step hook, applied to the parameters after every optimizer update.
using ParamProjector = std::function<void(ParamVector&)>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, deterministic in seed.
[[nodiscard]] ParamVector init_params(const ArchSpec& arch, std::uint64_t seed);

/// Relabels the units of hidden layer `hidden` (1-based into layer_sizes): new
/// unit j is old unit perm[j]. The network function is unchanged.
[[nodiscard]] ParamVector permute_hidden(const ParamVector& params, int hidden, std::span<const int> perm);

[[nodiscard]] Vector forward(const ParamVector& params, std::span<const double> x);
/// Network outputs for every row of `inputs`.
[[nodiscard]] RowMatrix forward_batch(const ParamVector& params, const RowMatrix& inputs);

[[nodiscard]] double regularizer(const ParamVector& params, const LossSpec& spec);
/// Adds kappa * dR/dtheta into `grad` (l1 terms use sign(0) = 0).
void add_regularizer_grad(const ParamVector& params, const LossSpec& spec, Vector& grad);

/// (1/L) sum ||phi(x_i) - y_i||^2 + kappa R(theta).
[[nodiscard]] double loss(const ParamVector& params, const Dataset& data, const LossSpec& spec);

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

[[nodiscard]] ParamVector grad(const ParamVector& params, const Dataset& data, const LossSpec& spec);
[[nodiscard]] LossGrad loss_and_grad(const ParamVector& params, const Dataset& data, const LossSpec& spec);
/// Same objective restricted to a subset of rows (a mini-batch); mean over the subset.
[[nodiscard]] LossGrad loss_and_grad(const ParamVector& params, const Dataset& data, const LossSpec& spec,
                                     std::span<const Eigen::Index> rows);

/// Stateful first-order optimizer over a flat vector.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index dim);
    void step(Vector& theta, const Vector& gradient);
    [[nodiscard]] long steps() const noexcept { return t_; }

private:
    OptimizerKind kind_;
    double lr_;
    Vector m_;
    Vector v_;
    long t_ = 0;
};

/// Mini-batch training until the full-dataset loss (checked once per epoch and
/// at the step budget) is <= cfg.target_loss. Throws TrainingDiverged.
[[nodiscard]] TrainResult train_to(ParamVector init, const Dataset& data, const TrainConfig& cfg,
                                   const LossSpec& spec, const ParamProjector& project = {});

// Checkpoint file: {arch: {layer_sizes, activation, use_bias}, values, meta: {seed, final_loss, created}}.
struct CheckpointMeta {
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    std::string created;
};

struct Checkpoint {
    ParamVector params;
    CheckpointMeta meta;
};

void save_checkpoint(const std::string& path, const ParamVector& params, const CheckpointMeta& meta);
[[nodiscard]] Checkpoint load_checkpoint(const std::string& path);

}  // namespace levelset

#include "levelset/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace levelset {

namespace {

// Rows per work unit. Fixed so that the reduction tree (and hence the result
// bits) is independent of the number of threads.
constexpr Eigen::Index kChunkRows = 64;
constexpr Eigen::Index kParallelMinRows = 1024;
constexpr double kDivergenceLoss = 1e12;

void activate(RowMatrix& z, Activation act) {
    switch (act) {
        case Activation::relu: z = z.cwiseMax(0.0); break;
        case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
        case Activation::identity: break;
    }
}

// Derivative expressed through the activation output a = act(z).
RowMatrix activation_slope(const RowMatrix& a, Activation act) {
    switch (act) {
        case Activation::relu: return (a.array() > 0.0).cast<double>().matrix();
        case Activation::sigmoid: return (a.array() * (1.0 - a.array())).matrix();
        case Activation::identity: break;
    }
    return RowMatrix::Ones(a.rows(), a.cols());
}

struct ChunkResult {
    double sse = 0.0;
    Vector grad;
};

ChunkResult chunk_loss_grad(const ParamVector& p, const Dataset& data, std::span<const Eigen::Index> rows,
                            bool want_grad) {
    const ArchSpec& arch = p.arch();
    const int depth = arch.depth();
    const auto n = static_cast<Eigen::Index>(rows.size());

    std::vector<RowMatrix> acts(static_cast<std::size_t>(depth) + 1);
    RowMatrix& x = acts[0];
    x.resize(n, data.input_dim());
    RowMatrix y(n, data.output_dim());
    for (Eigen::Index r = 0; r < n; ++r) {
        x.row(r) = data.inputs.row(rows[static_cast<std::size_t>(r)]);
        y.row(r) = data.targets.row(rows[static_cast<std::size_t>(r)]);
    }

    for (int k = 0; k < depth; ++k) {
        RowMatrix z = acts[k] * p.weight(k).transpose();
        if (arch.use_bias) z.rowwise() += p.bias(k).transpose();
        if (k + 1 < depth) activate(z, arch.activations[k]);
        acts[k + 1] = std::move(z);
    }

    ChunkResult out;
    RowMatrix delta = acts[depth] - y;
    out.sse = delta.squaredNorm();
    if (!want_grad) return out;

    out.grad = Vector::Zero(static_cast<Eigen::Index>(arch.param_count()));
    delta *= 2.0;
    for (int k = depth - 1; k >= 0; --k) {
        const auto off = static_cast<Eigen::Index>(arch.layer_offset(k));
        const int fo = arch.fan_out(k);
        const int fi = arch.fan_in(k);
        RowMatrixMap gw(out.grad.data() + off, fo, fi);
        gw.noalias() += delta.transpose() * acts[k];
        if (arch.use_bias) out.grad.segment(off + fo * fi, fo) += delta.colwise().sum().transpose();
        if (k > 0) {
            RowMatrix back = delta * p.weight(k);
            delta = back.cwiseProduct(activation_slope(acts[k], arch.activations[k - 1]));
        }
    }
    return out;
}

LossGrad evaluate_rows(const ParamVector& p, const Dataset& data, const LossSpec& spec,
                       std::span<const Eigen::Index> rows, bool want_grad) {
    if (rows.empty()) throw ContractViolation("loss over an empty set of samples");
    if (data.input_dim() != p.arch().input_dim() || data.output_dim() != p.arch().output_dim()) {
        throw ShapeError("dataset dimensions do not match the architecture");
    }
    const auto total = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index chunks = (total + kChunkRows - 1) / kChunkRows;
    std::vector<ChunkResult> parts(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static) if (total >= kParallelMinRows)
    for (Eigen::Index c = 0; c < chunks; ++c) {
        const Eigen::Index b = c * kChunkRows;
        const Eigen::Index e = std::min(total, b + kChunkRows);
        parts[static_cast<std::size_t>(c)] =
            chunk_loss_grad(p, data, rows.subspan(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b)),
                            want_grad);
    }

    std::vector<double> sse(parts.size());
    std::transform(parts.begin(), parts.end(), sse.begin(), [](const ChunkResult& r) { return r.sse; });
    const double inv_n = 1.0 / static_cast<double>(total);

    LossGrad out;
    out.loss = pairwise_sum(sse) * inv_n + regularizer(p, spec);
    if (want_grad) {
        std::vector<Vector> grads;
        grads.reserve(parts.size());
        for (auto& r : parts) grads.push_back(std::move(r.grad));
        Vector g = pairwise_sum(std::move(grads)) * inv_n;
        add_regularizer_grad(p, spec, g);
        out.grad = ParamVector(p.arch(), std::move(g));
    }
    return out;
}

std::vector<Eigen::Index> all_rows(const Dataset& data) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.size()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    return rows;
}

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::identity: return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "identity") return Activation::identity;
    throw ContractViolation("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(RegKind r) {
    switch (r) {
        case RegKind::none: return "none";
        case RegKind::l2_all: return "l2_all";
        case RegKind::l1_second_layer: return "l1_second_layer";
        case RegKind::l2_first_l1_second: return "l2_first_l1_second";
    }
    return "?";
}

RegKind parse_reg_kind(std::string_view s) {
    if (s == "none") return RegKind::none;
    if (s == "l2_all") return RegKind::l2_all;
    if (s == "l1_second_layer") return RegKind::l1_second_layer;
    if (s == "l2_first_l1_second") return RegKind::l2_first_l1_second;
    throw ContractViolation("unknown regularizer '" + std::string(s) + "'");
}

std::string_view to_string(OptimizerKind o) {
    switch (o) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::rmsprop: return "rmsprop";
        case OptimizerKind::adam: return "adam";
    }
    return "?";
}

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "rmsprop") return OptimizerKind::rmsprop;
    if (s == "adam") return OptimizerKind::adam;
    throw ContractViolation("unknown optimizer '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- ArchSpec

ArchSpec ArchSpec::uniform(std::vector<int> sizes, Activation act, bool bias) {
    ArchSpec a;
    const std::size_t hidden = sizes.size() >= 2 ? sizes.size() - 2 : 0;
    a.layer_sizes = std::move(sizes);
    a.activations.assign(hidden, act);
    a.use_bias = bias;
    a.validate();
    return a;
}

void ArchSpec::validate() const {
    if (layer_sizes.size() < 2) throw ContractViolation("layer_sizes needs at least two entries");
    for (int s : layer_sizes) {
        if (s < 1) throw ContractViolation("layer sizes must be positive");
    }
    if (activations.size() != layer_sizes.size() - 2) {
        throw ContractViolation("expected one activation per hidden layer");
    }
}

std::size_t ArchSpec::param_count() const { return layer_offset(depth()); }

std::size_t ArchSpec::layer_offset(int layer) const {
    std::size_t off = 0;
    for (int k = 0; k < layer; ++k) {
        const auto in = static_cast<std::size_t>(layer_sizes[k]);
        const auto out = static_cast<std::size_t>(layer_sizes[k + 1]);
        off += in * out + (use_bias ? out : 0);
    }
    return off;
}

std::size_t ArchSpec::weight_index(int layer, int row, int col) const {
    return layer_offset(layer) + static_cast<std::size_t>(row) * static_cast<std::size_t>(fan_in(layer)) +
           static_cast<std::size_t>(col);
}

std::size_t ArchSpec::bias_index(int layer, int row) const {
    if (!use_bias) throw ContractViolation("architecture has no biases");
    return layer_offset(layer) + static_cast<std::size_t>(fan_in(layer)) * static_cast<std::size_t>(fan_out(layer)) +
           static_cast<std::size_t>(row);
}

ArchSpec::Location ArchSpec::locate(std::size_t flat) const {
    if (flat >= param_count()) throw ContractViolation("flat index out of range");
    for (int k = 0; k < depth(); ++k) {
        const std::size_t end = layer_offset(k + 1);
        if (flat >= end) continue;
        const std::size_t local = flat - layer_offset(k);
        const auto in = static_cast<std::size_t>(fan_in(k));
        const auto out = static_cast<std::size_t>(fan_out(k));
        if (local < in * out) return {k, static_cast<int>(local / in), static_cast<int>(local % in)};
        return {k, static_cast<int>(local - in * out), -1};
    }
    throw ContractViolation("flat index out of range");
}

// ------------------------------------------------------------- ParamVector

ParamVector::ParamVector(ArchSpec arch)
    : arch_(std::move(arch)), values_(Vector::Zero(static_cast<Eigen::Index>(arch_.param_count()))) {}

ParamVector::ParamVector(ArchSpec arch, Vector values) : arch_(std::move(arch)), values_(std::move(values)) {
    if (values_.size() != static_cast<Eigen::Index>(arch_.param_count())) {
        throw ShapeError("parameter vector length " + std::to_string(values_.size()) + " does not match architecture (" +
                         std::to_string(arch_.param_count()) + ")");
    }
}

RowMatrixMap ParamVector::weight(int layer) {
    return {values_.data() + arch_.layer_offset(layer), arch_.fan_out(layer), arch_.fan_in(layer)};
}

ConstRowMatrixMap ParamVector::weight(int layer) const {
    return {values_.data() + arch_.layer_offset(layer), arch_.fan_out(layer), arch_.fan_in(layer)};
}

Eigen::Map<Vector> ParamVector::bias(int layer) {
    return {values_.data() + arch_.bias_index(layer, 0), arch_.fan_out(layer)};
}

Eigen::Map<const Vector> ParamVector::bias(int layer) const {
    return {values_.data() + arch_.bias_index(layer, 0), arch_.fan_out(layer)};
}

// -------------------------------------------------------------- evaluation

ParamVector init_params(const ArchSpec& arch, std::uint64_t seed) {
    arch.validate();
    ParamVector p(arch);
    std::mt19937_64 rng(seed);
    for (int k = 0; k < arch.depth(); ++k) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(arch.fan_in(k)));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto w = p.weight(k);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
        if (arch.use_bias) {
            auto b = p.bias(k);
            for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
        }
    }
    return p;
}

ParamVector permute_hidden(const ParamVector& params, int hidden, std::span<const int> perm) {
    const ArchSpec& arch = params.arch();
    if (hidden < 1 || hidden >= arch.depth()) throw ContractViolation("permute_hidden: not a hidden layer index");
    const int width = arch.layer_sizes[static_cast<std::size_t>(hidden)];
    std::vector<int> seen(static_cast<std::size_t>(width), 0);
    if (static_cast<int>(perm.size()) != width) throw ShapeError("permutation length must equal the layer width");
    for (int j : perm) {
        if (j < 0 || j >= width || seen[static_cast<std::size_t>(j)]++) throw ContractViolation("not a permutation");
    }
    ParamVector out = params;
    for (int j = 0; j < width; ++j) {
        const int from = perm[static_cast<std::size_t>(j)];
        out.weight(hidden - 1).row(j) = params.weight(hidden - 1).row(from);
        if (arch.use_bias) out.bias(hidden - 1)[j] = params.bias(hidden - 1)[from];
        out.weight(hidden).col(j) = params.weight(hidden).col(from);
    }
    return out;
}

Vector forward(const ParamVector& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != params.arch().input_dim()) {
        throw ShapeError("input has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(params.arch().input_dim()));
    }
    RowMatrix in(1, static_cast<Eigen::Index>(x.size()));
    for (Eigen::Index j = 0; j < in.cols(); ++j) in(0, j) = x[static_cast<std::size_t>(j)];
    return forward_batch(params, in).row(0).transpose();
}

RowMatrix forward_batch(const ParamVector& params, const RowMatrix& inputs) {
    const ArchSpec& arch = params.arch();
    if (inputs.cols() != arch.input_dim()) throw ShapeError("input width does not match the architecture");
    RowMatrix h = inputs;
    for (int k = 0; k < arch.depth(); ++k) {
        RowMatrix z = h * params.weight(k).transpose();
        if (arch.use_bias) z.rowwise() += params.bias(k).transpose();
        if (k + 1 < arch.depth()) activate(z, arch.activations[k]);
        h = std::move(z);
    }
    return h;
}

double regularizer(const ParamVector& params, const LossSpec& spec) {
    if (!spec.active()) return 0.0;
    const int last = params.arch().depth() - 1;
    switch (spec.reg) {
        case RegKind::none: return 0.0;
        case RegKind::l2_all: return spec.kappa * params.values().squaredNorm();
        case RegKind::l1_second_layer: return spec.kappa * params.weight(last).cwiseAbs().sum();
        case RegKind::l2_first_l1_second:
            return spec.kappa * (params.weight(0).squaredNorm() + params.weight(last).cwiseAbs().sum());
    }
    return 0.0;
}

void add_regularizer_grad(const ParamVector& params, const LossSpec& spec, Vector& g) {
    if (!spec.active()) return;
    const ArchSpec& arch = params.arch();
    const int last = arch.depth() - 1;
    auto add_l1_last = [&] {
        const auto off = static_cast<Eigen::Index>(arch.layer_offset(last));
        const auto n = static_cast<Eigen::Index>(arch.fan_in(last)) * arch.fan_out(last);
        g.segment(off, n) += spec.kappa * params.values().segment(off, n).cwiseSign();
    };
    switch (spec.reg) {
        case RegKind::none: break;
        case RegKind::l2_all: g += 2.0 * spec.kappa * params.values(); break;
        case RegKind::l1_second_layer: add_l1_last(); break;
        case RegKind::l2_first_l1_second: {
            const auto n = static_cast<Eigen::Index>(arch.fan_in(0)) * arch.fan_out(0);
            g.head(n) += 2.0 * spec.kappa * params.values().head(n);
            add_l1_last();
            break;
        }
    }
}

double loss(const ParamVector& params, const Dataset& data, const LossSpec& spec) {
    const auto rows = all_rows(data);
    return evaluate_rows(params, data, spec, rows, false).loss;
}

ParamVector grad(const ParamVector& params, const Dataset& data, const LossSpec& spec) {
    return loss_and_grad(params, data, spec).grad;
}

LossGrad loss_and_grad(const ParamVector& params, const Dataset& data, const LossSpec& spec) {
    const auto rows = all_rows(data);
    return evaluate_rows(params, data, spec, rows, true);
}

LossGrad loss_and_grad(const ParamVector& params, const Dataset& data, const LossSpec& spec,
                       std::span<const Eigen::Index> rows) {
    return evaluate_rows(params, data, spec, rows, true);
}

// --------------------------------------------------------------- training

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index dim)
    : kind_(kind), lr_(learning_rate), m_(Vector::Zero(dim)), v_(Vector::Zero(dim)) {}

void Optimizer::step(Vector& theta, const Vector& g) {
    ++t_;
    switch (kind_) {
        case OptimizerKind::sgd: theta -= lr_ * g; break;
        case OptimizerKind::rmsprop: {
            constexpr double decay = 0.9;
            v_ = decay * v_ + (1.0 - decay) * g.cwiseAbs2();
            theta.array() -= lr_ * g.array() / (v_.array().sqrt() + 1e-8);
            break;
        }
        case OptimizerKind::adam: {
            constexpr double b1 = 0.9;
            constexpr double b2 = 0.999;
            m_ = b1 * m_ + (1.0 - b1) * g;
            v_ = b2 * v_ + (1.0 - b2) * g.cwiseAbs2();
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
            theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + 1e-8);
            break;
        }
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ContractViolation("learning_rate must be positive");
    if (batch_size < 1) throw ContractViolation("batch_size must be positive");
    if (max_steps < 0) throw ContractViolation("max_steps must be nonnegative");
    if (!(target_loss >= 0.0)) throw ContractViolation("target_loss must be nonnegative");
}

TrainResult train_to(ParamVector init, const Dataset& data, const TrainConfig& cfg, const LossSpec& spec,
                     const ParamProjector& project) {
    cfg.validate();
    data.validate();
    TrainResult out;
    out.params = std::move(init);
    out.final_loss = loss(out.params, data, spec);
    if (!std::isfinite(out.final_loss) || out.final_loss > kDivergenceLoss) throw TrainingDiverged(0);
    if (out.final_loss <= cfg.target_loss) {
        out.converged = true;
        return out;
    }

    std::mt19937_64 rng(cfg.seed);
    auto order = all_rows(data);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    Optimizer opt(cfg.optimizer, cfg.learning_rate, out.params.size());

    while (out.steps < cfg.max_steps) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t b = 0; b < order.size() && out.steps < cfg.max_steps; b += batch) {
            const std::size_t e = std::min(order.size(), b + batch);
            const LossGrad lg = loss_and_grad(out.params, data, spec, std::span(order).subspan(b, e - b));
            if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLoss) throw TrainingDiverged(out.steps);
            opt.step(out.params.values(), lg.grad.values());
            if (project) project(out.params);
            ++out.steps;
        }
        out.final_loss = loss(out.params, data, spec);
        if (!std::isfinite(out.final_loss) || out.final_loss > kDivergenceLoss) throw TrainingDiverged(out.steps);
        if (out.final_loss <= cfg.target_loss) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

}  // namespace levelset

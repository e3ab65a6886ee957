#include "levelset/serial.hpp"

#include <cmath>

namespace levelset::serial {

namespace {

double act_value(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::identity: return z;
    }
    return z;
}

double act_slope(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

// Pre-activations and activations of every layer for one sample.
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

Trace run(const ParamVector& p, std::span<const double> x) {
    const ArchSpec& a = p.arch();
    const auto& v = p.values();
    Trace t;
    t.post.emplace_back(x.begin(), x.end());
    for (int k = 0; k < a.depth(); ++k) {
        const int in = a.fan_in(k);
        const int out = a.fan_out(k);
        std::vector<double> z(static_cast<std::size_t>(out), 0.0);
        for (int i = 0; i < out; ++i) {
            double s = a.use_bias ? v[static_cast<Eigen::Index>(a.bias_index(k, i))] : 0.0;
            for (int j = 0; j < in; ++j) {
                s += v[static_cast<Eigen::Index>(a.weight_index(k, i, j))] * t.post.back()[static_cast<std::size_t>(j)];
            }
            z[static_cast<std::size_t>(i)] = s;
        }
        std::vector<double> h = z;
        if (k + 1 < a.depth()) {
            for (auto& e : h) e = act_value(a.activations[k], e);
        }
        t.pre.push_back(std::move(z));
        t.post.push_back(std::move(h));
    }
    return t;
}

std::vector<double> row_of(const RowMatrix& m, Eigen::Index r) {
    return {m.row(r).data(), m.row(r).data() + m.cols()};
}

}  // namespace

std::vector<double> forward(const ParamVector& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != params.arch().input_dim()) throw ShapeError("input dimension mismatch");
    return run(params, x).post.back();
}

double loss(const ParamVector& params, const Dataset& data, const LossSpec& spec) {
    data.validate();
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto out = serial::forward(params, row_of(data.inputs, i));
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double d = out[j] - data.targets(i, static_cast<Eigen::Index>(j));
            total += d * d;
        }
    }
    return total / static_cast<double>(data.size()) + regularizer(params, spec);
}

std::vector<double> grad(const ParamVector& params, const Dataset& data, const LossSpec& spec) {
    data.validate();
    const ArchSpec& a = params.arch();
    const auto& v = params.values();
    std::vector<double> g(a.param_count(), 0.0);
    const double scale = 1.0 / static_cast<double>(data.size());

    for (Eigen::Index s = 0; s < data.size(); ++s) {
        const Trace t = run(params, row_of(data.inputs, s));
        std::vector<double> delta(t.post.back().size());
        for (std::size_t j = 0; j < delta.size(); ++j) {
            delta[j] = 2.0 * (t.post.back()[j] - data.targets(s, static_cast<Eigen::Index>(j))) * scale;
        }
        for (int k = a.depth() - 1; k >= 0; --k) {
            const int in = a.fan_in(k);
            const int out = a.fan_out(k);
            for (int i = 0; i < out; ++i) {
                for (int j = 0; j < in; ++j) {
                    g[a.weight_index(k, i, j)] += delta[static_cast<std::size_t>(i)] *
                                                  t.post[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                }
                if (a.use_bias) g[a.bias_index(k, i)] += delta[static_cast<std::size_t>(i)];
            }
            if (k == 0) break;
            std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
            for (int j = 0; j < in; ++j) {
                double s2 = 0.0;
                for (int i = 0; i < out; ++i) {
                    s2 += v[static_cast<Eigen::Index>(a.weight_index(k, i, j))] * delta[static_cast<std::size_t>(i)];
                }
                prev[static_cast<std::size_t>(j)] =
                    s2 * act_slope(a.activations[k - 1], t.pre[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j)]);
            }
            delta = std::move(prev);
        }
    }

    if (spec.active()) {
        const int last = a.depth() - 1;
        const std::size_t last_begin = a.layer_offset(last);
        const std::size_t last_end = last_begin + static_cast<std::size_t>(a.fan_in(last) * a.fan_out(last));
        const std::size_t first_end = static_cast<std::size_t>(a.fan_in(0) * a.fan_out(0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double th = v[static_cast<Eigen::Index>(i)];
            const double sign = th > 0.0 ? 1.0 : (th < 0.0 ? -1.0 : 0.0);
            const bool in_last = i >= last_begin && i < last_end;
            switch (spec.reg) {
                case RegKind::none: break;
                case RegKind::l2_all: g[i] += 2.0 * spec.kappa * th; break;
                case RegKind::l1_second_layer:
                    if (in_last) g[i] += spec.kappa * sign;
                    break;
                case RegKind::l2_first_l1_second:
                    if (i < first_end) g[i] += 2.0 * spec.kappa * th;
                    if (in_last) g[i] += spec.kappa * sign;
                    break;
            }
        }
    }
    return g;
}

kernels::KernelEstimate relu_kernel_mc(const Vector& w1, const Vector& w2, const kernels::Sampler& sampler, long n,
                                       std::uint64_t seed) {
    const int dim = sampler.dim;
    std::vector<double> x(static_cast<std::size_t>(dim));
    double mean = 0.0;
    double m2 = 0.0;
    long count = 0;
    const long blocks = (n + kernels::kBlockSamples - 1) / kernels::kBlockSamples;
    for (long b = 0; b < blocks; ++b) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        const long len = std::min(kernels::kBlockSamples, n - b * kernels::kBlockSamples);
        for (long i = 0; i < len; ++i) {
            sampler.draw(rng, x.data());
            double p1 = 0.0;
            double p2 = 0.0;
            for (int j = 0; j < dim; ++j) {
                p1 += x[static_cast<std::size_t>(j)] * w1[j];
                p2 += x[static_cast<std::size_t>(j)] * w2[j];
            }
            const double f = (p1 > 0.0 ? p1 : 0.0) * (p2 > 0.0 ? p2 : 0.0);
            ++count;
            const double d = f - mean;
            mean += d / static_cast<double>(count);
            m2 += d * (f - mean);
        }
    }
    kernels::KernelEstimate e;
    e.value = mean;
    e.n_samples = count;
    e.std_error = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count)) : 0.0;
    e.alpha = kernels::angle_between(w1, w2);
    return e;
}

}  // namespace levelset::serial

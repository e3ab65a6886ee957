#include "levelset/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "levelset/netcore.hpp"

namespace levelset::kernels {

namespace {

constexpr double kUnitTolerance = 1e-10;
constexpr long kMaxSweeps = 200000;

void require_unit(const Vector& w, const char* name) {
    if (std::abs(w.norm() - 1.0) > kUnitTolerance) {
        throw ContractViolation(std::string(name) + " must have unit norm");
    }
}

// Count / mean / sum of squared deviations; combined with Chan's update.
struct Moments {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
};

Moments combine(const Moments& a, const Moments& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    Moments out;
    out.n = a.n + b.n;
    const double delta = b.mean - a.mean;
    const double nb = static_cast<double>(b.n) / static_cast<double>(out.n);
    out.mean = a.mean + delta * nb;
    out.m2 = a.m2 + b.m2 + delta * delta * static_cast<double>(a.n) * nb;
    return out;
}

// Per-block sufficient statistics for the kernel and the bound terms.
struct BlockStats {
    Moments kernel;
    double wm_sq_sum = 0.0;
    double projected_sum = 0.0;
    Matrix second_moment;  // sum of x x^T
};

struct BlockRequest {
    const Vector* w1 = nullptr;
    const Vector* w2 = nullptr;
    const Vector* wm = nullptr;  // null: kernel only
    const Matrix* span = nullptr;
};

BlockStats run_block(const BlockRequest& req, const Sampler& sampler, long begin, long len, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(begin / kBlockSamples)));
    const int dim = sampler.dim;
    Matrix xs(dim, len);
    for (long i = 0; i < len; ++i) sampler.draw(rng, xs.col(i).data());

    const Eigen::RowVectorXd p1 = req.w1->transpose() * xs;
    const Eigen::RowVectorXd p2 = req.w2->transpose() * xs;
    const Eigen::ArrayXd f = (p1.array().max(0.0) * p2.array().max(0.0)).transpose();

    BlockStats s;
    s.kernel.n = len;
    s.kernel.mean = f.sum() / static_cast<double>(len);
    s.kernel.m2 = (f - s.kernel.mean).square().sum();
    if (req.wm != nullptr) {
        const Eigen::RowVectorXd pm = req.wm->transpose() * xs;
        s.wm_sq_sum = pm.array().max(0.0).square().sum();
        s.projected_sum = (req.span->transpose() * xs).squaredNorm();
        s.second_moment = xs * xs.transpose();
    }
    return s;
}

BlockStats reduce(std::vector<BlockStats>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return parts[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    BlockStats a = reduce(parts, lo, mid);
    const BlockStats b = reduce(parts, mid, hi);
    a.kernel = combine(a.kernel, b.kernel);
    a.wm_sq_sum += b.wm_sq_sum;
    a.projected_sum += b.projected_sum;
    if (b.second_moment.size() > 0) a.second_moment += b.second_moment;
    return a;
}

BlockStats sample_stats(const BlockRequest& req, const Sampler& sampler, long n, std::uint64_t seed) {
    if (n < 1) throw ContractViolation("need at least one Monte-Carlo sample");
    if (req.w1->size() != sampler.dim || req.w2->size() != sampler.dim) {
        throw ShapeError("direction dimension does not match the sampler");
    }
    const long blocks = (n + kBlockSamples - 1) / kBlockSamples;
    std::vector<BlockStats> parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < blocks; ++b) {
        const long begin = b * kBlockSamples;
        parts[static_cast<std::size_t>(b)] = run_block(req, sampler, begin, std::min(kBlockSamples, n - begin), seed);
    }
    return reduce(parts, 0, parts.size());
}

KernelEstimate to_estimate(const Moments& m, double alpha) {
    KernelEstimate e;
    e.value = m.mean;
    e.n_samples = m.n;
    e.std_error = m.n > 1 ? std::sqrt(m.m2 / static_cast<double>(m.n - 1) / static_cast<double>(m.n)) : 0.0;
    e.alpha = alpha;
    return e;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

Vector scalar_targets(const Dataset& data) {
    data.validate();
    if (data.output_dim() != 1) throw ShapeError("second-layer fits need scalar targets");
    return data.targets.col(0);
}

}  // namespace

// ----------------------------------------------------------------- sampling

Sampler Sampler::gaussian(int dim, double scale) { return {SamplerKind::gaussian, dim, scale, 1.0, 0.1}; }

Sampler Sampler::uniform_sphere(int dim, double radius) { return {SamplerKind::uniform_sphere, dim, radius, 1.0, 0.1}; }

Sampler Sampler::mixture(int dim, double mu, double sigma) { return {SamplerKind::mixture, dim, 1.0, mu, sigma}; }

void Sampler::draw(std::mt19937_64& rng, double* out) const {
    std::normal_distribution<double> g(0.0, 1.0);
    switch (kind) {
        case SamplerKind::gaussian:
            for (int i = 0; i < dim; ++i) out[i] = scale * g(rng);
            break;
        case SamplerKind::uniform_sphere: {
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (int i = 0; i < dim; ++i) {
                    out[i] = g(rng);
                    norm2 += out[i] * out[i];
                }
            } while (norm2 == 0.0);
            const double f = scale / std::sqrt(norm2);
            for (int i = 0; i < dim; ++i) out[i] *= f;
            break;
        }
        case SamplerKind::mixture: {
            const double z = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
            for (int i = 0; i < dim; ++i) out[i] = sigma * g(rng);
            out[0] += z * mu;
            break;
        }
    }
}

// ------------------------------------------------------------------ kernels

double angle_between(const Vector& a, const Vector& b) {
    return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

double arccos_kernel(double alpha) {
    return (std::sin(alpha) + (std::numbers::pi - alpha) * std::cos(alpha)) / (2.0 * std::numbers::pi);
}

KernelEstimate relu_kernel_mc(const Vector& w1, const Vector& w2, const Sampler& sampler, long n,
                              std::uint64_t seed) {
    require_unit(w1, "w1");
    require_unit(w2, "w2");
    if (n < 100) throw ContractViolation("relu_kernel_mc needs n >= 100");
    BlockRequest req{&w1, &w2, nullptr, nullptr};
    return to_estimate(sample_stats(req, sampler, n, seed).kernel, angle_between(w1, w2));
}

Vector bisector(const Vector& w1, const Vector& w2) {
    Vector s = w1 + w2;
    const double norm = s.norm();
    if (norm < 1e-12) throw ContractViolation("bisector of antipodal vectors is undefined");
    return s / norm;
}

BoundPair prop3_bounds(const Vector& w1, const Vector& w2, const Sampler& sampler, long n, std::uint64_t seed,
                       BoundMode mode) {
    require_unit(w1, "w1");
    require_unit(w2, "w2");
    const Vector wm = bisector(w1, w2);

    // Orthonormal basis of span(w1, w2).
    Vector r = w2 - w2.dot(w1) * w1;
    Matrix span(w1.size(), r.norm() > 1e-12 ? 2 : 1);
    span.col(0) = w1;
    if (span.cols() == 2) span.col(1) = r.normalized();

    BlockRequest req{&w1, &w2, &wm, &span};
    const BlockStats s = sample_stats(req, sampler, n, seed);
    const double count = static_cast<double>(s.kernel.n);

    const double alpha = angle_between(w1, w2);
    const double c = std::cos(alpha);
    const double sn = std::sin(alpha);

    BoundPair out;
    out.kernel = to_estimate(s.kernel, alpha);
    out.wm_norm_z_sq = s.wm_sq_sum / count;
    out.projected_energy = s.projected_sum / count;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(s.second_moment / count, Eigen::EigenvaluesOnly);
    out.sigma_norm = eig.eigenvalues().maxCoeff();

    const double deficit_scale = mode == BoundMode::spectral ? 2.0 * out.sigma_norm : out.projected_energy;
    out.upper = 0.5 * (1.0 + c) * out.wm_norm_z_sq;
    out.lower = out.upper - deficit_scale * (0.5 * (1.0 - c) + sn * sn);
    return out;
}

// ------------------------------------------------------------------ eps-nets

double EpsNet::bound() const { return covering_bound(dim, epsilon); }

double covering_bound(int dim, double epsilon) { return std::pow(1.0 + 2.0 / epsilon, dim); }

namespace {

// Index of the nearest center and its chord distance.
std::pair<int, double> nearest(const std::vector<Vector>& centers, const Vector& x) {
    int best = -1;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double d = (centers[i] - x).norm();
        if (d < dist) {
            dist = d;
            best = static_cast<int>(i);
        }
    }
    return {best, dist};
}

}  // namespace

EpsNet build_eps_net(int dim, double epsilon, std::uint64_t seed, int candidates) {
    if (dim < 1) throw ContractViolation("net dimension must be positive");
    if (!(epsilon > 0.0)) throw ContractViolation("epsilon must be positive");
    EpsNet net;
    net.dim = dim;
    net.epsilon = epsilon;
    std::mt19937_64 rng(seed);
    const Sampler sphere = Sampler::uniform_sphere(dim);
    Vector x(dim);
    for (int c = 0; c < candidates; ++c) {
        sphere.draw(rng, x.data());
        if (nearest(net.centers, x).second > epsilon) net.centers.push_back(x);
    }
    return net;
}

void cover_columns(EpsNet& net, const Matrix& unit_columns) {
    if (unit_columns.rows() != net.dim) throw ShapeError("column dimension does not match the net");
    net.assignments.assign(static_cast<std::size_t>(unit_columns.cols()), -1);
    for (Eigen::Index j = 0; j < unit_columns.cols(); ++j) {
        const Vector col = unit_columns.col(j);
        if (nearest(net.centers, col).second > net.epsilon) net.centers.push_back(col);
    }
    for (Eigen::Index j = 0; j < unit_columns.cols(); ++j) {
        net.assignments[static_cast<std::size_t>(j)] = nearest(net.centers, unit_columns.col(j)).first;
    }
}

Cluster cluster_pigeonhole(const Matrix& w, double angle_eps, std::uint64_t seed) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (std::abs(w.col(j).norm() - 1.0) > 1e-8) throw ContractViolation("columns must be unit-normalized");
    }
    if (w.cols() == 0) throw ContractViolation("no columns to cluster");
    Cluster out;
    const double chord = 2.0 * std::sin(0.5 * std::min(angle_eps, std::numbers::pi));
    out.net = build_eps_net(static_cast<int>(w.rows()), chord, seed);
    cover_columns(out.net, w);
    std::vector<int> counts(out.net.centers.size(), 0);
    for (int a : out.net.assignments) ++counts[static_cast<std::size_t>(a)];
    out.center = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (std::size_t j = 0; j < out.net.assignments.size(); ++j) {
        if (out.net.assignments[j] == out.center) out.members.push_back(static_cast<int>(j));
    }
    return out;
}

// ------------------------------------------------------- second-layer fits

Matrix relu_features(const Matrix& w, const RowMatrix& inputs) {
    if (inputs.cols() != w.rows()) throw ShapeError("input width does not match first-layer rows");
    return (inputs * w).cwiseMax(0.0);
}

double second_layer_objective(const Matrix& w, const Dataset& data, double kappa, const Vector& gamma) {
    const Vector y = scalar_targets(data);
    const Vector r = y - relu_features(w, data.inputs) * gamma;
    return r.squaredNorm() / static_cast<double>(y.size()) + kappa * gamma.lpNorm<1>();
}

SecondLayerFit fit_second_layer(const Matrix& w, const Dataset& data, double kappa, const Vector* warm_start) {
    if (kappa < 0.0) throw ContractViolation("kappa must be nonnegative");
    const Vector y = scalar_targets(data);
    const Matrix z = relu_features(w, data.inputs);
    const double inv_n = 1.0 / static_cast<double>(y.size());
    const Matrix gram = z.transpose() * z * inv_n;
    const Vector corr = z.transpose() * y * inv_n;
    const Eigen::Index m = gram.rows();

    SecondLayerFit fit;
    fit.kappa = kappa;
    fit.gamma = warm_start != nullptr ? *warm_start : Vector::Zero(m);
    if (fit.gamma.size() != m) throw ShapeError("warm start has the wrong length");

    auto kkt = [&](const Vector& q) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double g = 2.0 * (q[j] - corr[j]);
            const double v = fit.gamma[j] != 0.0 ? std::abs(g + kappa * (fit.gamma[j] > 0.0 ? 1.0 : -1.0))
                                                 : std::max(0.0, std::abs(g) - kappa);
            worst = std::max(worst, v);
        }
        return worst;
    };

    // Active-set refinement from the current iterate: exact solves on the
    // signed support, stepping back to the first sign change, and adding the
    // worst KKT violator among the zeros. Coordinate descent alone crawls when
    // the Gram matrix is near singular.
    auto polish = [&]() {
        Vector g = fit.gamma;
        std::vector<double> sign(static_cast<std::size_t>(m), 0.0);
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto u = static_cast<std::size_t>(j);
            sign[u] = kappa == 0.0 ? 1.0 : (g[j] > 0.0 ? 1.0 : (g[j] < 0.0 ? -1.0 : 0.0));
        }
        for (Eigen::Index iter = 0; iter < 10 * m + 10; ++iter) {
            std::vector<Eigen::Index> support;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (sign[static_cast<std::size_t>(j)] != 0.0) support.push_back(j);
            }
            const auto k = static_cast<Eigen::Index>(support.size());
            Vector sol(k);
            if (k > 0) {
                Matrix gs(k, k);
                Vector rhs(k);
                for (Eigen::Index a = 0; a < k; ++a) {
                    const Eigen::Index ja = support[static_cast<std::size_t>(a)];
                    for (Eigen::Index b = 0; b < k; ++b) gs(a, b) = gram(ja, support[static_cast<std::size_t>(b)]);
                    rhs[a] = corr[ja] - (kappa == 0.0 ? 0.0 : 0.5 * kappa * sign[static_cast<std::size_t>(ja)]);
                }
                sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(gs).solve(rhs);
            }
            double step = 1.0;
            Eigen::Index blocking = -1;
            if (kappa != 0.0) {
                for (Eigen::Index a = 0; a < k; ++a) {
                    const Eigen::Index ja = support[static_cast<std::size_t>(a)];
                    const double sj = sign[static_cast<std::size_t>(ja)];
                    if (sol[a] * sj > 0.0) continue;
                    const double cur = g[ja] * sj;
                    const double t = cur > 0.0 ? cur / (cur - sol[a] * sj) : 0.0;
                    if (t < step) {
                        step = t;
                        blocking = ja;
                    }
                }
            }
            for (Eigen::Index a = 0; a < k; ++a) {
                const Eigen::Index ja = support[static_cast<std::size_t>(a)];
                g[ja] += step * (sol[a] - g[ja]);
            }
            if (blocking >= 0) {
                g[blocking] = 0.0;
                sign[static_cast<std::size_t>(blocking)] = 0.0;
                continue;
            }
            const Vector grad = 2.0 * (gram * g - corr);
            Eigen::Index enter = -1;
            double worst = kFitTolerance;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (sign[static_cast<std::size_t>(j)] != 0.0) continue;
                if (std::abs(grad[j]) - kappa > worst) {
                    worst = std::abs(grad[j]) - kappa;
                    enter = j;
                }
            }
            if (enter < 0) break;
            sign[static_cast<std::size_t>(enter)] = grad[enter] > 0.0 ? -1.0 : 1.0;
        }
        const Vector saved = fit.gamma;
        fit.gamma = g;
        if (kkt(gram * fit.gamma) <= kFitTolerance) return true;
        fit.gamma = saved;
        return false;
    };

    Vector q = gram * fit.gamma;
    for (fit.sweeps = 0; fit.sweeps < kMaxSweeps; ++fit.sweeps) {
        if (fit.sweeps % 64 == 0) q = gram * fit.gamma;
        fit.stationarity = kkt(q);
        if (fit.stationarity <= kFitTolerance) break;
        if (fit.sweeps % 64 == 63 && polish()) break;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double gjj = gram(j, j);
            const double old = fit.gamma[j];
            double next = 0.0;
            if (gjj > 1e-300) next = soft_threshold(corr[j] - (q[j] - gjj * old), 0.5 * kappa) / gjj;
            if (next != old) {
                q += gram.col(j) * (next - old);
                fit.gamma[j] = next;
            }
        }
    }
    q = gram * fit.gamma;
    fit.stationarity = kkt(q);
    if (fit.stationarity > kFitTolerance) {
        throw SolverError("second-layer fit did not reach first-order tolerance", fit.stationarity);
    }
    fit.objective = second_layer_objective(w, data, kappa, fit.gamma);
    fit.support_size = static_cast<int>((fit.gamma.array() != 0.0).count());
    return fit;
}

// ------------------------------------------------------------------ pruning

PruneReport prune_merge(const Matrix& w, const Vector& gamma, const std::vector<int>& cluster, const Dataset& data,
                        double kappa) {
    if (gamma.size() != w.cols()) throw ShapeError("gamma length must equal the number of columns");
    PruneReport rep;
    rep.cluster = cluster;
    rep.surviving.resize(static_cast<std::size_t>(w.cols()));
    std::iota(rep.surviving.begin(), rep.surviving.end(), 0);

    SecondLayerFit fit = fit_second_layer(w, data, kappa, &gamma);
    rep.initial_objective = fit.objective;
    rep.merged_coeffs = fit.gamma;
    if (cluster.size() < 2) return rep;

    auto position = [&](int original) {
        const auto it = std::find(rep.surviving.begin(), rep.surviving.end(), original);
        if (it == rep.surviving.end()) throw ContractViolation("cluster index is not a surviving column");
        return static_cast<Eigen::Index>(it - rep.surviving.begin());
    };

    double previous = fit.objective;
    Vector coeffs = fit.gamma;
    std::vector<int> remaining = cluster;
    while (remaining.size() > 1) {
        const int removed = remaining.front();
        remaining.erase(remaining.begin());
        // Nearest surviving cluster member by angle.
        int target = remaining.front();
        double best = -2.0;
        for (int c : remaining) {
            const double d = w.col(removed).normalized().dot(w.col(c).normalized());
            if (d > best) {
                best = d;
                target = c;
            }
        }
        const Eigen::Index pr = position(removed);
        const Eigen::Index pt = position(target);

        Vector merged(coeffs.size() - 1);
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            if (i == pr) continue;
            merged[k++] = coeffs[i] + (i == pt ? coeffs[pr] : 0.0);
        }
        rep.surviving.erase(rep.surviving.begin() + pr);
        Matrix wk(w.rows(), static_cast<Eigen::Index>(rep.surviving.size()));
        for (std::size_t i = 0; i < rep.surviving.size(); ++i) {
            wk.col(static_cast<Eigen::Index>(i)) = w.col(rep.surviving[i]);
        }

        PruneStep step;
        step.removed = removed;
        step.merged_into = target;
        step.merged_objective = second_layer_objective(wk, data, kappa, merged);
        const SecondLayerFit refit = fit_second_layer(wk, data, kappa, &merged);
        step.objective = refit.objective;
        step.increase = refit.objective - previous;
        previous = refit.objective;
        coeffs = refit.gamma;
        rep.steps.push_back(step);
        rep.per_step_increase.push_back(step.increase);
    }
    rep.total_increase = previous - rep.initial_objective;
    rep.merged_coeffs = coeffs;
    return rep;
}

// ---------------------------------------------------------------- oracle risk

namespace {

double single_size_risk(int units, const Dataset& data, double kappa, int restarts, std::uint64_t seed) {
    const Vector y = scalar_targets(data);
    if (units == 0) return y.squaredNorm() / static_cast<double>(y.size());
    const int dim = static_cast<int>(data.input_dim());
    const ArchSpec arch = ArchSpec::uniform({dim, units, 1}, Activation::relu, false);
    const LossSpec spec{kappa, kappa > 0.0 ? RegKind::l1_second_layer : RegKind::none};

    // Unit-ball constraint on each hidden unit's incoming weights.
    const ParamProjector project = [](ParamVector& p) {
        auto w = p.weight(0);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double nrm = w.row(i).norm();
            if (nrm > 1.0) w.row(i) /= nrm;
        }
    };

    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        ParamVector p = init_params(arch, derive_seed(seed, static_cast<std::uint64_t>(units) * 1000 + r));
        auto w0 = p.weight(0);
        for (Eigen::Index i = 0; i < w0.rows(); ++i) w0.row(i).normalize();
        TrainConfig cfg;
        cfg.optimizer = OptimizerKind::adam;
        cfg.learning_rate = 0.02;
        cfg.batch_size = static_cast<int>(data.size());
        cfg.max_steps = 3000;
        cfg.target_loss = 0.0;
        cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
        ParamVector trained = p;
        try {
            trained = train_to(p, data, cfg, spec, project).params;
        } catch (const TrainingDiverged&) {
            // keep the (feasible) initial point
        }
        const Matrix w = trained.weight(0).transpose();
        const SecondLayerFit fit = fit_second_layer(w, data, kappa);
        best = std::min(best, fit.objective);
    }
    return best;
}

}  // namespace

OracleRiskProfile oracle_risk_profile(int max_units, const Dataset& data, double kappa, int restarts,
                                      std::uint64_t seed) {
    if (max_units < 0) throw ContractViolation("unit count must be nonnegative");
    OracleRiskProfile prof;
    for (int l = 0; l <= max_units; ++l) {
        prof.raw.push_back(single_size_risk(l, data, kappa, restarts, seed));
        // A network with one more unit can reproduce the smaller one by
        // setting the extra unit's coefficient to zero.
        prof.enforced.push_back(l == 0 ? prof.raw.back() : std::min(prof.raw.back(), prof.enforced.back()));
    }
    return prof;
}

double estimate_oracle_risk(int units, const Dataset& data, double kappa, int restarts, std::uint64_t seed) {
    return oracle_risk_profile(units, data, kappa, restarts, seed).enforced.back();
}

}  // namespace levelset::kernels

#include "levelset/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "levelset/kernels.hpp"
#include "levelset/linpath.hpp"
#include "levelset/tasks.hpp"

namespace levelset::verify {

namespace {

Vector random_unit(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    return v / v.norm();
}

std::string record(const Report& r, std::size_t row) {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
        if (c != 0) os << ' ';
        os << r.columns[c] << '=' << r.rows[row][c];
    }
    return os.str();
}

Dataset linear_data(int n, int p, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(p, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    Dataset d;
    d.inputs.resize(samples, n);
    for (Eigen::Index i = 0; i < d.inputs.size(); ++i) d.inputs.data()[i] = g(rng);
    d.targets = d.inputs * m.transpose();
    for (Eigen::Index i = 0; i < d.targets.size(); ++i) d.targets.data()[i] += 0.1 * g(rng);
    return d;
}

ParamVector scaled_init(const ArchSpec& arch, std::uint64_t seed) {
    ParamVector p = init_params(arch, seed);
    p.values() *= 1.5;
    return p;
}

// Least-squares line y = a + b x; returns (slope, R^2).
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return {slope, r2};
}

}  // namespace

Report prop3_scan(int pairs, long samples, std::uint64_t seed) {
    if (pairs < 1 || samples < 2) throw ContractViolation("prop3 scan needs pairs >= 1 and samples >= 2");
    Report r;
    r.kind = "prop3";
    r.columns = {"n", "alpha", "kernel", "se", "lower", "upper", "violated"};
    std::mt19937_64 rng(seed);
    int inside = 0;
    for (int i = 0; i < pairs; ++i) {
        const int dim = 2 + i % 4;
        const Vector a = random_unit(dim, rng);
        const Vector b = i % 20 == 0 ? a : random_unit(dim, rng);
        const auto bp = kernels::prop3_bounds(a, b, kernels::Sampler::gaussian(dim), samples,
                                              derive_seed(seed, static_cast<std::uint64_t>(i)));
        const double se = bp.kernel.std_error;
        const bool ok = bp.kernel.value >= bp.lower - 3.0 * se && bp.kernel.value <= bp.upper + 3.0 * se;
        inside += ok;
        r.rows.push_back({static_cast<double>(dim), bp.kernel.alpha, bp.kernel.value, se, bp.lower, bp.upper,
                          ok ? 0.0 : 1.0});
        if (i % 20 == 0) {
            const bool tight = bp.lower == bp.upper && std::abs(bp.kernel.value - bp.upper) <= 3.0 * se;
            if (!tight) r.fail("alpha=0 pair not tight: " + record(r, r.rows.size() - 1));
        }
    }
    const int needed = static_cast<int>(std::ceil(0.997 * pairs));
    r.summary = {{"pairs", pairs}, {"inside", inside}, {"required", needed}};
    if (inside < needed) {
        for (std::size_t k = 0; k < r.rows.size(); ++k) {
            if (r.rows[k][6] != 0.0) {
                r.fail("containment " + std::to_string(inside) + "/" + std::to_string(pairs) +
                       "; first violation: " + record(r, k));
                break;
            }
        }
    }
    return r;
}

Report linpath_suite(int depth, int pairs, std::uint64_t seed) {
    if (depth < 2) throw ContractViolation("linpath suite needs depth >= 2");
    if (pairs < 1) throw ContractViolation("linpath suite needs pairs >= 1");
    std::vector<int> sizes{3};
    for (int k = 1; k < depth; ++k) sizes.push_back(k % 2 == 1 ? 4 : 5);
    sizes.push_back(2);
    const ArchSpec arch = ArchSpec::uniform(sizes, Activation::identity, false);
    const Dataset d = linear_data(3, 2, 50, seed);

    Report r;
    r.kind = "linpath";
    r.columns = {"pair", "t", "loss", "lambda", "det_V", "det_U", "min_singular", "product_residual"};
    double worst_excess = -INFINITY, worst_det = 0.0, worst_res = 0.0;
    for (int pair = 0; pair < pairs; ++pair) {
        const auto s = static_cast<std::uint64_t>(pair);
        const ParamVector a = scaled_init(arch, derive_seed(seed, 2 * s + 1));
        const ParamVector b = scaled_init(arch, derive_seed(seed, 2 * s + 2));
        const double lambda = std::max(loss(a, d, {}), loss(b, d, {}));
        const linpath::LinearPath path = linpath::build_linear_path(a, b);
        for (int j = 0; j <= 100; ++j) {
            const double t = j / 100.0;
            const double l = loss(path.at(t), d, {});
            const linpath::LinearDiagnostics diag = path.diagnostics(t);
            r.rows.push_back({static_cast<double>(pair), t, l, lambda, diag.det_v, diag.det_u, diag.min_singular,
                              diag.product_residual});
            const double det_err = std::max(std::abs(diag.det_v - 1.0), std::abs(diag.det_u - 1.0));
            worst_excess = std::max(worst_excess, l - lambda);
            worst_det = std::max(worst_det, det_err);
            worst_res = std::max(worst_res, diag.product_residual);
            if (l > lambda + 1e-8 || det_err > 1e-8 || diag.product_residual > 1e-8) {
                r.fail(record(r, r.rows.size() - 1));
            }
        }
    }

    const linpath::GlobalMin gm = linpath::global_min_linear(arch, d);
    int monotone = 0;
    for (int pair = 0; pair < pairs; ++pair) {
        const ParamVector start = scaled_init(arch, derive_seed(seed, 1000 + static_cast<std::uint64_t>(pair)));
        const linpath::LinearPath path = linpath::build_linear_path(start, gm.params);
        const linpath::PathVerification v = linpath::verify_path([&](double t) { return path.at(t); }, d, {}, 101);
        monotone += v.monotone;
        if (!v.monotone) r.fail("path to global minimum not monotone, pair " + std::to_string(pair));
    }
    r.summary = {{"pairs", pairs},
                 {"max_loss_excess", worst_excess},
                 {"max_det_error", worst_det},
                 {"max_product_residual", worst_res},
                 {"monotone_to_global_min", monotone},
                 {"global_min_loss", gm.loss}};
    return r;
}

Report ridge_suite(int pairs, double kappa, std::uint64_t seed) {
    if (pairs < 1) throw ContractViolation("ridge suite needs pairs >= 1");
    const ArchSpec arch = ArchSpec::uniform({3, 4, 2}, Activation::identity, false);
    const Dataset d = linear_data(3, 2, 50, seed);
    const LossSpec spec{kappa, RegKind::l2_all};

    Report r;
    r.kind = "ridge";
    r.columns = {"pair", "t", "stage", "loss", "bound", "factor_norm_sq", "nuclear_norm"};
    double worst_excess = -INFINITY, worst_identity = 0.0;
    for (int pair = 0; pair < pairs; ++pair) {
        const auto s = static_cast<std::uint64_t>(pair);
        const ParamVector a = scaled_init(arch, derive_seed(seed, 2 * s + 1));
        const ParamVector b = scaled_init(arch, derive_seed(seed, 2 * s + 2));
        const double bound = std::max(loss(a, d, spec), loss(b, d, spec));
        const linpath::RidgePath path = linpath::build_ridge_path(a, b);
        for (int j = 0; j <= 100; ++j) {
            const double t = j / 100.0;
            const linpath::RidgeSample smp = path.sample(t);
            const double l = loss(smp.params, d, spec);
            r.rows.push_back({static_cast<double>(pair), t, static_cast<double>(smp.stage), l, bound,
                              smp.factor_norm_sq, smp.nuclear_norm});
            worst_excess = std::max(worst_excess, l - bound);
            const double gap = smp.factor_norm_sq - 2.0 * smp.nuclear_norm;
            bool ok = l <= bound + 1e-8 && gap >= -1e-8;
            if (smp.stage == linpath::RidgeStage::main) {
                worst_identity = std::max(worst_identity, std::abs(gap));
                ok = ok && std::abs(gap) <= 1e-8;
            }
            if (!ok) r.fail(record(r, r.rows.size() - 1));
        }
    }
    r.summary = {{"pairs", pairs}, {"kappa", kappa}, {"max_loss_excess", worst_excess},
                 {"max_identity_error", worst_identity}};
    return r;
}

Report covering_suite(const std::vector<int>& dims, const std::vector<double>& epsilons, std::uint64_t seed) {
    if (dims.empty() || epsilons.empty()) throw ContractViolation("covering suite needs dims and epsilons");
    Report r;
    r.kind = "covering";
    r.columns = {"n", "epsilon", "size", "bound"};
    for (int n : dims) {
        for (double eps : epsilons) {
            const kernels::EpsNet net = kernels::build_eps_net(n, eps, seed);
            const auto size = static_cast<double>(net.centers.size());
            r.rows.push_back({static_cast<double>(n), eps, size, net.bound()});
            if (size > net.bound()) r.fail(record(r, r.rows.size() - 1));
        }
    }
    r.summary = {{"cases", static_cast<double>(r.rows.size())}};
    return r;
}

Report prune_suite(std::uint64_t seed) {
    using namespace kernels;
    const Dataset data = tasks::gen_relu_teacher(3, 4, 512, derive_seed(seed, 7));
    Report r;
    r.kind = "prune";
    r.columns = {"phase", "param", "trial", "step", "removed_index", "increase", "objective"};

    // Exact duplicates.
    double dup_worst = 0.0;
    {
        std::mt19937_64 rng(derive_seed(seed, 10));
        Matrix w(3, 16);
        for (int j = 0; j < 16; ++j) w.col(j) = random_unit(3, rng);
        w.col(9) = w.col(2);
        w.col(13) = w.col(2);
        const double kappa = 1e-3;
        const SecondLayerFit fit = fit_second_layer(w, data, kappa);
        const PruneReport rep = prune_merge(w, fit.gamma, {2, 9, 13}, data, kappa);
        for (std::size_t k = 0; k < rep.steps.size(); ++k) {
            const PruneStep& s = rep.steps[k];
            r.rows.push_back({0.0, 0.0, 0.0, static_cast<double>(k), static_cast<double>(s.removed), s.increase,
                              s.objective});
            dup_worst = std::max(dup_worst, std::abs(s.increase));
            if (std::abs(s.increase) > 1e-10) r.fail("duplicate prune: " + record(r, r.rows.size() - 1));
        }
    }

    // Planted clusters of angular radius eps.
    const std::vector<double> radii{0.05, 0.1, 0.2};
    std::vector<double> worst_step;
    for (double eps : radii) {
        const double kappa = 1e-3;
        double worst = 0.0;
        for (int trial = 0; trial < 8; ++trial) {
            std::mt19937_64 rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(trial)));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            Matrix w(3, 32);
            for (int j = 0; j < 32; ++j) w.col(j) = random_unit(3, rng);
            const Vector axis = random_unit(3, rng);
            std::vector<int> cluster;
            for (int j = 0; j < 6; ++j) {
                Vector z = random_unit(3, rng);
                z -= z.dot(axis) * axis;
                z.normalize();
                const double a = eps * std::sqrt(unif(rng));
                w.col(j) = std::cos(a) * axis + std::sin(a) * z;
                cluster.push_back(j);
            }
            const SecondLayerFit fit = fit_second_layer(w, data, kappa);
            const PruneReport rep = prune_merge(w, fit.gamma, cluster, data, kappa);
            for (std::size_t k = 0; k < rep.steps.size(); ++k) {
                const PruneStep& s = rep.steps[k];
                r.rows.push_back({1.0, eps, static_cast<double>(trial), static_cast<double>(k),
                                  static_cast<double>(s.removed), s.increase, s.objective});
                worst = std::max(worst, s.increase);
            }
        }
        worst_step.push_back(worst);
    }
    const auto [slope, r2] = fit_line(radii, worst_step);
    if (!(slope > 0.0 && r2 >= 0.8)) {
        r.fail("cluster increase not linear in eps: slope=" + std::to_string(slope) + " R2=" + std::to_string(r2));
    }

    // Pigeonhole clusters as the width grows.
    const std::vector<int> widths{32, 64, 128};
    std::vector<double> mean_total;
    for (int m : widths) {
        const double kappa = 1e-4;
        const int q = 3;
        double total = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const auto ts = static_cast<std::uint64_t>(trial);
            std::mt19937_64 rng(derive_seed(seed, 200 + ts));
            Matrix w(3, m);
            for (int j = 0; j < m; ++j) w.col(j) = random_unit(3, rng);
            const SecondLayerFit fit = fit_second_layer(w, data, kappa);
            Cluster c;
            for (int step = 1; step <= 30; ++step) {
                c = cluster_pigeonhole(w, 0.05 * step, derive_seed(seed, 300 + ts));
                if (static_cast<int>(c.members.size()) >= q + 1) break;
            }
            if (static_cast<int>(c.members.size()) < q + 1) {
                r.fail("no cluster of " + std::to_string(q + 1) + " at m=" + std::to_string(m));
                continue;
            }
            const std::vector<int> members(c.members.begin(), c.members.begin() + q + 1);
            const PruneReport rep = prune_merge(w, fit.gamma, members, data, kappa);
            for (std::size_t k = 0; k < rep.steps.size(); ++k) {
                const PruneStep& s = rep.steps[k];
                r.rows.push_back({2.0, static_cast<double>(m), static_cast<double>(trial), static_cast<double>(k),
                                  static_cast<double>(s.removed), s.increase, s.objective});
            }
            total += rep.total_increase;
        }
        mean_total.push_back(total / 10.0);
    }
    if (!(mean_total.back() < mean_total.front())) {
        r.fail("total increase did not fall: m=32 " + std::to_string(mean_total.front()) + ", m=128 " +
               std::to_string(mean_total.back()));
    }

    r.summary = {{"duplicate_max_abs_increase", dup_worst},
                 {"eps_0.05_max_increase", worst_step[0]},
                 {"eps_0.1_max_increase", worst_step[1]},
                 {"eps_0.2_max_increase", worst_step[2]},
                 {"slope", slope},
                 {"r_squared", r2},
                 {"m32_mean_total", mean_total[0]},
                 {"m64_mean_total", mean_total[1]},
                 {"m128_mean_total", mean_total[2]}};
    return r;
}

void save_report_csv(const std::string& path, const Report& r) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (std::size_t c = 0; c < r.columns.size(); ++c) out << (c ? "," : "") << r.columns[c];
    out << '\n';
    char buf[32];
    for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", row[c]);
            out << (c ? "," : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw Error("cannot write " + path);
}

}  // namespace levelset::verify

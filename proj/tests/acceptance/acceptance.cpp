// Runs the ten acceptance criteria and prints one PASS/FAIL line per criterion.
// `acceptance --only 3 --only 5` runs a subset. Exit code 0 iff every selected
// criterion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "levelset/geometry.hpp"
#include "levelset/kernels.hpp"
#include "levelset/linpath.hpp"
#include "levelset/strings.hpp"
#include "levelset/tasks.hpp"
#include "levelset/verify.hpp"

using namespace levelset;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return saa == 0.0 || sbb == 0.0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

Dataset gaussian_dataset(int n, int p, long rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Dataset d;
    d.inputs.resize(rows, n);
    d.targets.resize(rows, p);
    for (Eigen::Index i = 0; i < d.inputs.size(); ++i) d.inputs.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < d.targets.size(); ++i) d.targets.data()[i] = g(rng);
    return d;
}

// 1. Backpropagation against central differences.
Verdict gradient_check() {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> width(1, 5);
    std::uniform_int_distribution<int> depth(1, 3);
    double worst = 0.0;
    for (int net = 0; net < 100; ++net) {
        std::vector<int> sizes{width(rng)};
        const int k = depth(rng);
        for (int i = 0; i < k; ++i) sizes.push_back(width(rng));
        const ArchSpec arch = ArchSpec::uniform(sizes, Activation::sigmoid, net % 2 == 0);
        const Dataset d = gaussian_dataset(arch.input_dim(), arch.output_dim(), 9, rng());
        const ParamVector p = init_params(arch, rng());
        const LossSpec spec{net % 3 == 0 ? 0.05 : 0.0, net % 3 == 0 ? RegKind::l2_all : RegKind::none};
        const Vector g = grad(p, d, spec).values();
        constexpr double h = 1e-5;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            ParamVector up = p;
            ParamVector dn = p;
            up.values()[i] += h;
            dn.values()[i] -= h;
            const double fd = (loss(up, d, spec) - loss(dn, d, spec)) / (2.0 * h);
            worst = std::max(worst, std::abs(g[i] - fd) / std::max({1.0, std::abs(g[i]), std::abs(fd)}));
        }
    }
    return {worst <= 1e-5, fmt("max relative error %.2e over 100 nets (limit 1e-5)", worst)};
}

// 2. Convex baseline: K=1 ridge regression connects at depth 0 with unit length.
Verdict convex_baseline() {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    Dataset d = gaussian_dataset(3, 1, 60, 13);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d.targets(i, 0) = d.inputs(i, 0) - 2.0 * d.inputs(i, 1) + 0.5 * d.inputs(i, 2) + 0.2 * g(rng);
    }
    const ArchSpec arch = ArchSpec::uniform({3, 1}, Activation::identity, true);
    const LossSpec spec{0.1, RegKind::l2_all};
    int ok = 0;
    double worst_len = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        ParamVector a = init_params(arch, derive_seed(12, 2 * pair));
        ParamVector b = init_params(arch, derive_seed(12, 2 * pair + 1));
        strings::DssConfig cfg;
        cfg.L0 = std::max(loss(a, d, spec), loss(b, d, spec)) * (1.0 + 1e-12);
        const strings::Connection c = strings::find_connection(a, b, d, spec, cfg);
        const double err = std::abs(c.result.normalized_length - 1.0);
        worst_len = std::max(worst_len, err);
        ok += c.result.converged && c.result.depth_reached == 0 && c.result.bead_count == 2 && err <= 1e-12;
    }
    return {ok == 20, fmt("%d/20 pairs converged at depth 0; max |length - 1| = %.1e", ok, worst_len)};
}

// 3. Kernel bounds contain the Monte-Carlo kernel.
Verdict prop3_containment() {
    const verify::Report r = verify::prop3_scan(1000, 100000, 0);
    double inside = 0.0;
    for (const auto& [k, v] : r.summary) {
        if (k == "inside") inside = v;
    }
    return {r.pass, fmt("%.0f/1000 pairs inside [lower-3se, upper+3se]; alpha=0 pairs tight%s%s", inside,
                        r.pass ? "" : "; first failure: ", r.failure.c_str())};
}

// Independent check of the closed form: polar reduction in R^2 leaves
// (1/pi) * integral of relu(cos th) relu(cos(th - alpha)) over the circle.
double kernel_by_quadrature(double alpha) {
    const int n = 200000;
    const double h = 2.0 * std::numbers::pi / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double th = -std::numbers::pi + i * h;
        const double f = std::max(0.0, std::cos(th)) * std::max(0.0, std::cos(th - alpha));
        sum += ((i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0)) * f;
    }
    return sum * h / 3.0 / std::numbers::pi;
}

// 4. Monte-Carlo kernel against the arc-cosine closed form.
Verdict arccos_agreement() {
    std::string detail;
    bool pass = true;
    const double pi = std::numbers::pi;
    for (double alpha : {0.0, pi / 4, pi / 2, 3 * pi / 4}) {
        const double closed = (std::sin(alpha) + (pi - alpha) * std::cos(alpha)) / (2.0 * pi);
        const double quad = kernel_by_quadrature(alpha);
        const double lib = kernels::arccos_kernel(alpha);
        Vector w1 = Vector::Zero(2), w2 = Vector::Zero(2);
        w1[0] = 1.0;
        w2[0] = std::cos(alpha);
        w2[1] = std::sin(alpha);
        const kernels::KernelEstimate mc = kernels::relu_kernel_mc(w1, w2, kernels::Sampler::gaussian(2), 1000000, 4);
        const double z = std::abs(mc.value - closed) / mc.std_error;
        pass = pass && std::abs(quad - closed) <= 1e-9 && std::abs(lib - closed) <= 1e-14 && z <= 3.0;
        detail += fmt("%salpha=%.3f: %.1f se", detail.empty() ? "" : ", ", alpha, z);
    }
    return {pass, detail + " (limit 3 se; closed form matches quadrature to 1e-9)"};
}

double summary_of(const verify::Report& r, const std::string& key) {
    for (const auto& [k, v] : r.summary) {
        if (k == key) return v;
    }
    return NAN;
}

// 5. Deep linear path.
Verdict linear_path() {
    const verify::Report r = verify::linpath_suite(3, 10, 0);
    return {r.pass, fmt("max loss - lambda %.1e, max |det - 1| %.1e, max residual %.1e, monotone %.0f/10%s%s",
                        summary_of(r, "max_loss_excess"), summary_of(r, "max_det_error"),
                        summary_of(r, "max_product_residual"), summary_of(r, "monotone_to_global_min"),
                        r.pass ? "" : "; first failure: ", r.failure.c_str())};
}

// 6. Two-layer ridge path.
Verdict ridge_path() {
    const verify::Report r = verify::ridge_suite(10, 0.1, 0);
    return {r.pass, fmt("max loss - bound %.1e, max nuclear identity error %.1e%s%s", summary_of(r, "max_loss_excess"),
                        summary_of(r, "max_identity_error"), r.pass ? "" : "; first failure: ", r.failure.c_str())};
}

// 7. Threshold sweep on the quadratic task.
Verdict quadratic_trend() {
    const Dataset d = tasks::gen_poly(2, 128, 1);
    const ArchSpec arch = ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true);
    strings::DssConfig cfg;
    cfg.train.learning_rate = 1e-3;
    cfg.train.max_steps = 400000;
    std::vector<double> thresholds;
    for (int i = 0; i < 6; ++i) thresholds.push_back(0.02 * std::pow(0.5, i));
    const auto recs = geometry::threshold_sweep(arch, d, {}, thresholds, 5, 0, cfg);
    std::vector<double> x, len, beads;
    std::string table;
    bool all_defined = true;
    for (const auto& r : recs) {
        x.push_back(-r.L0);
        len.push_back(r.mean_normalized_length);
        beads.push_back(r.mean_bead_count);
        all_defined = all_defined && std::isfinite(r.mean_normalized_length);
        table += fmt(" %.5g:%.3f/%.1f/%d", r.L0, r.mean_normalized_length, r.mean_bead_count, r.n_converged);
    }
    const double rho_len = spearman(x, len);
    const double rho_beads = spearman(x, beads);
    const bool pass = all_defined && rho_len >= 0.8 && rho_beads >= 0.8 && recs.front().n_converged == 5;
    return {pass, fmt("rho(length) %.2f, rho(beads) %.2f, loosest %d/5 converged (limits 0.8, 0.8, 5);", rho_len,
                      rho_beads, recs.front().n_converged) +
                      " L0:length/beads/converged" + table};
}

// 8. Permuted copies do not connect; independently trained quadratic models do.
Verdict disconnection() {
    const Dataset perm = tasks::gen_permutation();
    const ArchSpec parch = ArchSpec::uniform({2, 3, 2}, Activation::relu, false);
    TrainConfig ptc;
    ptc.learning_rate = 0.01;
    ptc.batch_size = 3;
    ptc.max_steps = 50000;
    ptc.target_loss = 1e-3;
    int failed = 0, trained = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        TrainResult tr;
        for (std::uint64_t r = 0; r < 20 && !tr.converged; ++r) {
            ptc.seed = derive_seed(s, r);
            tr = train_to(init_params(parch, derive_seed(s, 100 + r)), perm, ptc, {});
        }
        if (!tr.converged) continue;
        ++trained;
        const std::vector<int> swap{1, 0, 2};
        strings::DssConfig cfg;
        cfg.L0 = 0.01;
        cfg.max_depth = 10;
        cfg.train = ptc;
        cfg.train.seed = derive_seed(s, 999);
        failed += !strings::find_connection(tr.params, permute_hidden(tr.params, 1, swap), perm, {}, cfg)
                       .result.converged;
    }

    const Dataset quad = tasks::gen_poly(2, 128, 1);
    const ArchSpec qarch = ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true);
    TrainConfig qtc;
    qtc.learning_rate = 0.02;
    qtc.max_steps = 100000;
    qtc.target_loss = 0.008;
    auto train_quad = [&](std::uint64_t s) {
        TrainResult tr;
        for (std::uint64_t r = 0; r < 20 && !tr.converged; ++r) {
            qtc.seed = derive_seed(s, r);
            tr = train_to(init_params(qarch, derive_seed(s, 100 + r)), quad, qtc, {});
        }
        return tr;
    };
    int connected = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const TrainResult a = train_quad(2 * s + 1000);
        const TrainResult b = train_quad(2 * s + 1001);
        if (!a.converged || !b.converged) continue;
        strings::DssConfig cfg;
        cfg.L0 = 0.01;
        cfg.max_depth = 10;
        cfg.train = qtc;
        cfg.train.seed = derive_seed(s, 999);
        connected += strings::find_connection(a.params, b.params, quad, {}, cfg).result.converged;
    }
    return {failed >= 9 && connected >= 9,
            fmt("permuted copies not connected %d/10 (%d trained), quadratic pairs connected %d/10 (limits 9, 9)",
                failed, trained, connected)};
}

// 9. Greedy epsilon-net sizes.
Verdict covering() {
    const verify::Report r = verify::covering_suite({2, 3}, {0.5, 0.25, 0.1}, 0);
    std::string detail;
    for (const auto& row : r.rows) detail += fmt(" n=%.0f eps=%.2f: %.0f<=%.0f;", row[0], row[1], row[2], row[3]);
    return {r.pass, "net size <= (1+2/eps)^n:" + detail};
}

// 10. Prune-and-merge.
Verdict pruning() {
    const verify::Report r = verify::prune_suite(0);
    return {r.pass,
            fmt("duplicate |increase| %.1e; worst step at eps 0.05/0.1/0.2 = %.2e/%.2e/%.2e, R^2 %.3f, slope %.2e; "
                "mean total m=32/64/128 = %.2e/%.2e/%.2e%s%s",
                summary_of(r, "duplicate_max_abs_increase"), summary_of(r, "eps_0.05_max_increase"),
                summary_of(r, "eps_0.1_max_increase"), summary_of(r, "eps_0.2_max_increase"),
                summary_of(r, "r_squared"), summary_of(r, "slope"), summary_of(r, "m32_mean_total"),
                summary_of(r, "m64_mean_total"), summary_of(r, "m128_mean_total"),
                r.pass ? "" : "; first failure: ", r.failure.c_str())};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "Criterion number to run (repeatable)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "gradient correctness", 30, gradient_check},
        {2, "convex baseline", 60, convex_baseline},
        {3, "kernel bound containment", 300, prop3_containment},
        {4, "arc-cosine kernel agreement", 60, arccos_agreement},
        {5, "deep linear path", 120, linear_path},
        {6, "ridge path", 120, ridge_path},
        {7, "quadratic-task trend", 1200, quadratic_trend},
        {8, "disconnection regression", 600, disconnection},
        {9, "covering bound", 10, covering},
        {10, "pruning bound", 600, pruning},
    };

    int failures = 0;
    for (const Criterion& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_seconds) {
            v.pass = false;
            v.detail += fmt("; runtime over %.0f s", c.limit_seconds);
        }
        failures += !v.pass;
        std::printf("[%s] criterion %2d, %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}

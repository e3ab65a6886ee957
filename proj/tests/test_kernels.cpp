#include <cmath>
#include <numbers>
#include <random>

#include <omp.h>

#include "doctest.h"
#include "levelset/kernels.hpp"
#include "levelset/tasks.hpp"

using namespace levelset;
using namespace levelset::kernels;

namespace {

Vector unit(const Vector& v) { return v / v.norm(); }

Vector random_unit(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    return unit(v);
}

Vector planar(double alpha, int dim = 2) {
    Vector v = Vector::Zero(dim);
    v[0] = std::cos(alpha);
    v[1] = std::sin(alpha);
    return v;
}

// E relu(<X,e1>) relu(<X,w(alpha)>) for standard normal X in R^2, by polar
// reduction: the radial factor integrates to 2, leaving (1/pi) * an angular
// integral evaluated with composite Simpson.
double kernel_by_quadrature(double alpha) {
    const int n = 200000;
    const double h = 2.0 * std::numbers::pi / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double th = -std::numbers::pi + i * h;
        const double f = std::max(0.0, std::cos(th)) * std::max(0.0, std::cos(th - alpha));
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * f;
    }
    return sum * h / 3.0 / std::numbers::pi;
}

Matrix unit_columns(int dim, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix w(dim, m);
    for (int j = 0; j < m; ++j) w.col(j) = random_unit(dim, rng);
    return w;
}

Dataset gaussian_task(int dim, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Dataset d;
    d.inputs.resize(samples, dim);
    d.targets.resize(samples, 1);
    for (int i = 0; i < samples; ++i) {
        for (int j = 0; j < dim; ++j) d.inputs(i, j) = g(rng);
        d.targets(i, 0) = std::max(0.0, d.inputs(i, 0)) - 0.5 * std::max(0.0, d.inputs(i, 1)) + 0.05 * g(rng);
    }
    return d;
}

}  // namespace

TEST_CASE("arc-cosine closed form agrees with quadrature") {
    for (double a : {0.0, 0.3, std::numbers::pi / 4, 1.0, std::numbers::pi / 2, 2.0, 3 * std::numbers::pi / 4, 3.0}) {
        CHECK(arccos_kernel(a) == doctest::Approx(kernel_by_quadrature(a)).epsilon(1e-8));
    }
    CHECK(arccos_kernel(0.0) == doctest::Approx(0.5));
    CHECK(arccos_kernel(std::numbers::pi / 2) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
    CHECK(arccos_kernel(std::numbers::pi) == doctest::Approx(0.0));
}

TEST_CASE("Monte-Carlo kernel examples") {
    const Sampler s = Sampler::gaussian(2);
    const Vector e1 = planar(0.0);
    const KernelEstimate anti = relu_kernel_mc(e1, -e1, s, 10000, 3);
    CHECK(anti.value == 0.0);
    const KernelEstimate same = relu_kernel_mc(e1, e1, s, 200000, 4);
    CHECK(std::abs(same.value - 0.5) <= 3.0 * same.std_error);
    CHECK(same.std_error > 0.0);
    CHECK(same.n_samples == 200000);
    const KernelEstimate ortho = relu_kernel_mc(e1, planar(std::numbers::pi / 2), s, 200000, 5);
    CHECK(std::abs(ortho.value - 1.0 / (2.0 * std::numbers::pi)) <= 3.0 * ortho.std_error);
    CHECK(ortho.alpha == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("Monte-Carlo kernel matches the closed form across angles") {
    const Sampler s = Sampler::gaussian(3);
    for (double a : {0.0, std::numbers::pi / 4, std::numbers::pi / 2, 3 * std::numbers::pi / 4}) {
        const KernelEstimate k = relu_kernel_mc(planar(0.0, 3), planar(a, 3), s, 100000, 17);
        CHECK(std::abs(k.value - arccos_kernel(a)) <= 3.0 * k.std_error);
    }
}

TEST_CASE("kernel estimate is symmetric and thread-count invariant") {
    std::mt19937_64 rng(8);
    const Vector a = random_unit(4, rng);
    const Vector b = random_unit(4, rng);
    const Sampler s = Sampler::uniform_sphere(4, 2.0);
    const KernelEstimate k1 = relu_kernel_mc(a, b, s, 50000, 9);
    const KernelEstimate k2 = relu_kernel_mc(b, a, s, 50000, 9);
    CHECK(k1.value == k2.value);
    CHECK(k1.std_error == k2.std_error);
    const int before = omp_get_max_threads();
    omp_set_num_threads(1);
    const KernelEstimate serial = relu_kernel_mc(a, b, s, 50000, 9);
    omp_set_num_threads(4);
    const KernelEstimate par = relu_kernel_mc(a, b, s, 50000, 9);
    omp_set_num_threads(before);
    CHECK(serial.value == par.value);
    CHECK(serial.std_error == par.std_error);
}

TEST_CASE("kernel estimate contracts") {
    const Sampler s = Sampler::gaussian(2);
    CHECK_THROWS_AS((void)relu_kernel_mc(Vector::Ones(2), planar(0.0), s, 1000, 1), ContractViolation);
    CHECK_THROWS_AS((void)relu_kernel_mc(planar(0.0), planar(1.0), s, 99, 1), ContractViolation);
    CHECK_THROWS_AS((void)relu_kernel_mc(planar(0.0, 3), planar(1.0), s, 1000, 1), ShapeError);
}

TEST_CASE("bisector examples") {
    const Vector e1 = planar(0.0, 3);
    const Vector e2 = planar(std::numbers::pi / 2, 3);
    CHECK((bisector(e1, e1) - e1).norm() <= 1e-15);
    Vector expect = Vector::Zero(3);
    expect[0] = expect[1] = 1.0 / std::sqrt(2.0);
    CHECK((bisector(e1, e2) - expect).norm() <= 1e-15);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        CHECK(std::abs(bisector(random_unit(5, rng), random_unit(5, rng)).norm() - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS((void)bisector(e1, -e1), ContractViolation);
}

TEST_CASE("bounds are tight at alpha = 0") {
    std::mt19937_64 rng(3);
    const Vector w = random_unit(3, rng);
    const BoundPair b = prop3_bounds(w, w, Sampler::gaussian(3), 20000, 4);
    CHECK(b.lower == b.upper);
    CHECK(b.upper == b.wm_norm_z_sq);
    CHECK(b.kernel.value == doctest::Approx(b.wm_norm_z_sq).epsilon(1e-12));
}

TEST_CASE("bounds contain the kernel for random pairs under several samplers") {
    std::mt19937_64 rng(5);
    for (const Sampler& s : {Sampler::gaussian(3), Sampler::uniform_sphere(3, 1.5), Sampler::mixture(3, 1.0, 0.3)}) {
        for (int i = 0; i < 30; ++i) {
            const Vector a = random_unit(3, rng);
            const Vector b = random_unit(3, rng);
            for (BoundMode mode : {BoundMode::spectral, BoundMode::projected}) {
                const BoundPair bp = prop3_bounds(a, b, s, 20000, 100 + static_cast<std::uint64_t>(i), mode);
                CHECK(bp.lower <= bp.upper);
                CHECK(bp.kernel.value >= bp.lower - 3.0 * bp.kernel.std_error);
                CHECK(bp.kernel.value <= bp.upper + 3.0 * bp.kernel.std_error);
            }
        }
    }
}

TEST_CASE("bound gap follows the small-angle expansion") {
    const double alpha = 0.1;
    const BoundPair b = prop3_bounds(planar(0.0, 3), planar(alpha, 3), Sampler::gaussian(3), 50000, 6);
    const double gap = b.upper - b.lower;
    CHECK(gap <= 2.0 * b.sigma_norm * (alpha * alpha / 4.0 + alpha * alpha) + 1e-4);
    CHECK(gap >= 2.0 * b.sigma_norm * (alpha * alpha / 4.0 + alpha * alpha) - 1e-3);
}

TEST_CASE("spectral norm of the second moment is estimated from the draws") {
    const BoundPair b = prop3_bounds(planar(0.0, 4), planar(0.5, 4), Sampler::gaussian(4, 2.0), 100000, 7);
    CHECK(b.sigma_norm == doctest::Approx(4.0).epsilon(0.05));
    CHECK(b.projected_energy == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("covering nets respect the bound and separation") {
    for (int n : {2, 3}) {
        std::size_t prev = 0;
        for (double eps : {0.5, 0.25, 0.1}) {
            const EpsNet net = build_eps_net(n, eps, 11);
            CHECK(static_cast<double>(net.centers.size()) <= net.bound());
            CHECK(net.bound() == doctest::Approx(std::pow(1.0 + 2.0 / eps, n)));
            CHECK(net.centers.size() >= prev);
            prev = net.centers.size();
            for (std::size_t i = 0; i < net.centers.size(); ++i) {
                CHECK(std::abs(net.centers[i].norm() - 1.0) <= 1e-12);
                for (std::size_t j = 0; j < i; ++j) CHECK((net.centers[i] - net.centers[j]).norm() > eps);
            }
        }
    }
    CHECK(build_eps_net(2, 0.5, 1).centers.size() <= 25);
    CHECK(build_eps_net(3, 2.5, 1).centers.size() == 1);
}

TEST_CASE("covered columns lie within epsilon of their center") {
    EpsNet net = build_eps_net(3, 0.3, 12);
    const Matrix w = unit_columns(3, 200, 13);
    cover_columns(net, w);
    REQUIRE(net.assignments.size() == 200);
    for (int j = 0; j < 200; ++j) {
        CHECK((w.col(j) - net.centers[static_cast<std::size_t>(net.assignments[static_cast<std::size_t>(j)])]).norm() <=
              0.3 + 1e-12);
    }
}

TEST_CASE("pigeonhole clusters") {
    Matrix same(3, 10);
    for (int j = 0; j < 10; ++j) same.col(j) = planar(0.4, 3);
    CHECK(cluster_pigeonhole(same, 0.2, 1).members.size() == 10);

    const Matrix w = unit_columns(3, 64, 14);
    const Cluster c = cluster_pigeonhole(w, 0.3, 15);
    const auto u = static_cast<double>(c.net.centers.size());
    CHECK(static_cast<double>(c.members.size()) >= std::ceil(64.0 / u));
    for (int i : c.members) {
        for (int j : c.members) CHECK(angle_between(w.col(i), w.col(j)) <= 2.0 * 0.3 + 1e-12);
    }
    CHECK(std::is_sorted(c.members.begin(), c.members.end()));
    CHECK_THROWS_AS((void)cluster_pigeonhole(Matrix::Ones(3, 4), 0.3, 1), ContractViolation);
}

TEST_CASE("second-layer fit: realizable, zero threshold and duplicates") {
    const Dataset base = gaussian_task(3, 300, 20);
    const Matrix w = unit_columns(3, 6, 21);
    const Vector truth = (Vector(6) << 1.0, -0.5, 0.25, 0.0, 0.7, -1.2).finished();
    Dataset real = base;
    real.targets = relu_features(w, base.inputs) * truth;
    const SecondLayerFit exact = fit_second_layer(w, real, 0.0);
    CHECK(exact.objective <= 1e-8);
    CHECK((exact.gamma - truth).norm() <= 1e-4);
    CHECK(exact.stationarity <= kFitTolerance);

    // Oracle: kappa = 0 objective equals the normal-equations residual.
    const SecondLayerFit ls = fit_second_layer(w, base, 0.0);
    const Matrix z = relu_features(w, base.inputs);
    const Vector y = base.targets.col(0);
    const Vector beta = (z.transpose() * z).ldlt().solve(z.transpose() * y);
    CHECK(ls.objective == doctest::Approx((y - z * beta).squaredNorm() / 300.0).epsilon(1e-8));

    const double threshold = 2.0 * (z.transpose() * y).cwiseAbs().maxCoeff() / 300.0;
    const SecondLayerFit zero = fit_second_layer(w, base, threshold);
    CHECK(zero.gamma.isZero(0.0));
    CHECK(zero.support_size == 0);
    CHECK(fit_second_layer(w, base, 0.9 * threshold).support_size > 0);

    Matrix dup(3, 4);
    dup.leftCols(3) = w.leftCols(3);
    dup.col(3) = w.col(0);
    const SecondLayerFit d = fit_second_layer(dup, base, 0.01);
    const SecondLayerFit ref = fit_second_layer(w.leftCols(3), base, 0.01);
    CHECK(d.objective == doctest::Approx(ref.objective).epsilon(1e-8));
    Vector split = d.gamma;
    const double mass = split[0] + split[3];
    split[0] = split[3] = 0.5 * mass;
    CHECK(second_layer_objective(dup, base, 0.01, split) == doctest::Approx(d.objective).epsilon(1e-10));
}

TEST_CASE("prune-merge on exact duplicates costs nothing") {
    const Dataset data = gaussian_task(3, 400, 22);
    Matrix w = unit_columns(3, 8, 23);
    w.col(5) = w.col(1);
    w.col(7) = w.col(1);
    const SecondLayerFit fit = fit_second_layer(w, data, 0.01);
    const PruneReport r = prune_merge(w, fit.gamma, {1, 5, 7}, data, 0.01);
    REQUIRE(r.steps.size() == 2);
    for (const PruneStep& s : r.steps) {
        CHECK(std::abs(s.increase) <= 1e-10);
        CHECK(s.objective <= s.merged_objective + 1e-12);
    }
    CHECK(r.surviving.size() == 6);
    CHECK(r.merged_coeffs.size() == 6);
    CHECK(prune_merge(w, fit.gamma, {2}, data, 0.01).steps.empty());
}

TEST_CASE("prune-merge on an angular cluster") {
    const Dataset data = gaussian_task(3, 400, 24);
    Matrix w = unit_columns(3, 24, 25);
    const Cluster c = cluster_pigeonhole(w, 0.4, 26);
    REQUIRE(c.members.size() >= 2);
    const SecondLayerFit fit = fit_second_layer(w, data, 0.005);
    const PruneReport r = prune_merge(w, fit.gamma, c.members, data, 0.005);
    CHECK(r.steps.size() == c.members.size() - 1);
    double total = 0.0;
    for (const PruneStep& s : r.steps) {
        CHECK(s.increase >= -1e-10);
        CHECK(s.objective <= s.merged_objective + 1e-12);
        total += s.increase;
    }
    CHECK(r.total_increase == doctest::Approx(total));
}

TEST_CASE("oracle risk: zero units, monotone profile, interpolation") {
    const Dataset quad = tasks::with_bias_column(tasks::gen_poly(2, 64, 3));
    const OracleRiskProfile prof = oracle_risk_profile(8, quad, 0.0, 2, 4);
    REQUIRE(prof.enforced.size() == 9);
    CHECK(prof.raw[0] == doctest::Approx(quad.targets.squaredNorm() / 64.0).epsilon(1e-14));
    for (std::size_t l = 1; l < prof.enforced.size(); ++l) {
        CHECK(prof.enforced[l] <= prof.enforced[l - 1]);
        CHECK(prof.enforced[l] <= prof.raw[l]);
    }
    for (int l : {1, 2, 4, 8}) CHECK(prof.raw[static_cast<std::size_t>(l)] <= prof.raw[0]);

    const Dataset tiny = tasks::gen_relu_teacher(3, 4, 6, 5);
    CHECK(estimate_oracle_risk(8, tiny, 0.0, 2, 6) <= 1e-6);
    CHECK(estimate_oracle_risk(0, tiny, 0.0, 2, 6) == doctest::Approx(tiny.targets.squaredNorm() / 6.0));
}

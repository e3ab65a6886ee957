#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "levelset/netcore.hpp"
#include "levelset/serial.hpp"
#include "levelset/tasks.hpp"

using namespace levelset;

namespace {

Dataset random_dataset(int n, int p, long rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset d;
    d.inputs.resize(rows, n);
    d.targets.resize(rows, p);
    for (long i = 0; i < rows; ++i) {
        for (int j = 0; j < n; ++j) d.inputs(i, j) = g(rng);
        for (int j = 0; j < p; ++j) d.targets(i, j) = g(rng);
    }
    return d;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_CASE("parameter count and flat index bijection") {
    const ArchSpec a = ArchSpec::uniform({2, 3, 2}, Activation::relu, true);
    CHECK(a.param_count() == 17);
    const ArchSpec b = ArchSpec::uniform({2, 3, 2}, Activation::relu, false);
    CHECK(b.param_count() == 12);
    const ArchSpec c = ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true);
    for (std::size_t i = 0; i < c.param_count(); ++i) {
        const auto loc = c.locate(i);
        const std::size_t back = loc.col < 0 ? c.bias_index(loc.layer, loc.row) : c.weight_index(loc.layer, loc.row, loc.col);
        CHECK(back == i);
    }
}

TEST_CASE("arch validation") {
    CHECK_THROWS_AS(ArchSpec::uniform({3}, Activation::relu, true).validate(), ContractViolation);
    CHECK_THROWS_AS(ArchSpec::uniform({3, 0, 1}, Activation::relu, true).validate(), ContractViolation);
}

TEST_CASE("init_params determinism and seed sensitivity") {
    const ArchSpec a = ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true);
    CHECK(init_params(a, 7) == init_params(a, 7));
    CHECK_FALSE(init_params(a, 7) == init_params(a, 8));
    const ParamVector p = init_params(a, 3);
    for (int k = 0; k < a.depth(); ++k) {
        const double lim = 1.0 / std::sqrt(static_cast<double>(a.fan_in(k)));
        CHECK(p.weight(k).cwiseAbs().maxCoeff() <= lim);
    }
}

TEST_CASE("forward basics") {
    const ArchSpec a = ArchSpec::uniform({2, 3, 2}, Activation::relu, false);
    ParamVector zero(a);
    const std::vector<double> x{0.3, -1.2};
    CHECK(forward(zero, x).norm() == 0.0);
    CHECK_THROWS_AS((void)forward(zero, std::vector<double>{1.0}), ShapeError);

    ParamVector id(ArchSpec::uniform({2, 2, 2}, Activation::identity, false));
    id.weight(0) << 2.0, 0.0, 0.0, 4.0;
    id.weight(1) << 0.5, 0.0, 0.0, 0.25;
    const Vector y = forward(id, std::vector<double>{1.0, 2.0});
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("forward matches the straight-line implementation") {
    const ArchSpec a = ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true);
    const ParamVector p = init_params(a, 11);
    const std::vector<double> x{0.5};
    const double fast = forward(p, x)[0];
    const double slow = serial::forward(p, x)[0];
    CHECK(std::abs(fast - slow) <= 1e-14);
}

TEST_CASE("loss examples") {
    const ArchSpec a = ArchSpec::uniform({1, 1}, Activation::identity, false);
    Dataset d;
    d.inputs = RowMatrix::Ones(4, 1);
    d.targets = RowMatrix::Ones(4, 1);
    CHECK(loss(ParamVector(a), d, {}) == 1.0);
    ParamVector exact(a);
    exact.values()[0] = 1.0;
    CHECK(loss(exact, d, {}) == 0.0);
    Dataset empty;
    CHECK_THROWS_AS((void)loss(exact, empty, {}), ContractViolation);
}

TEST_CASE("chunked loss agrees with naive summation") {
    const Dataset d = tasks::gen_poly(2, 5000, 4);
    const ParamVector p = init_params(ArchSpec::uniform({1, 4, 4, 1}, Activation::relu, true), 5);
    const LossSpec spec{0.01, RegKind::l2_all};
    CHECK(rel_err(loss(p, d, spec), serial::loss(p, d, spec)) <= 1e-12);
    const auto g = grad(p, d, spec);
    const auto gs = serial::grad(p, d, spec);
    for (std::size_t i = 0; i < gs.size(); ++i) CHECK(rel_err(g.values()[static_cast<Eigen::Index>(i)], gs[i]) <= 1e-12);
}

TEST_CASE("loss is bit-stable across thread counts") {
    const Dataset d = random_dataset(3, 2, 4000, 9);
    const ParamVector p = init_params(ArchSpec::uniform({3, 8, 2}, Activation::relu, true), 1);
    set_max_threads(1);
    const LossGrad one = loss_and_grad(p, d, {});
    set_max_threads(4);
    const LossGrad four = loss_and_grad(p, d, {});
    set_max_threads(0);
    CHECK(one.loss == four.loss);
    CHECK(one.grad.values() == four.grad.values());
}

TEST_CASE("gradient check against central differences (sigmoid)") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> width(1, 4);
    std::uniform_int_distribution<int> depth(1, 3);
    const RegKind regs[] = {RegKind::none, RegKind::l2_all, RegKind::l2_first_l1_second};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> sizes{width(rng)};
        const int k = depth(rng);
        for (int i = 0; i < k; ++i) sizes.push_back(width(rng));
        const ArchSpec a = ArchSpec::uniform(sizes, Activation::sigmoid, trial % 2 == 0);
        const Dataset d = random_dataset(a.input_dim(), a.output_dim(), 7, rng());
        ParamVector p = init_params(a, rng());
        // keep l1 terms away from their kink
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (std::abs(p.values()[i]) < 1e-3) p.values()[i] = 0.1;
        }
        const LossSpec spec{0.05, regs[trial % 3]};
        const Vector g = grad(p, d, spec).values();
        constexpr double h = 1e-5;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            ParamVector up = p;
            ParamVector dn = p;
            up.values()[i] += h;
            dn.values()[i] -= h;
            const double fd = (loss(up, d, spec) - loss(dn, d, spec)) / (2.0 * h);
            worst = std::max(worst, rel_err(g[i], fd));
        }
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("gradient vanishes at the least-squares minimum of a linear model") {
    const Dataset d = random_dataset(3, 2, 50, 31);
    const ArchSpec a = ArchSpec::uniform({3, 2}, Activation::identity, false);
    const Matrix x = d.inputs;
    const Matrix y = d.targets;
    const Matrix w = (x.transpose() * x).ldlt().solve(x.transpose() * y).transpose();
    ParamVector p(a);
    p.weight(0) = w;
    CHECK(grad(p, d, {}).values().norm() <= 1e-8);
}

TEST_CASE("l2_all adds exactly 2 kappa theta") {
    const Dataset d = random_dataset(2, 1, 20, 8);
    const ParamVector p = init_params(ArchSpec::uniform({2, 3, 1}, Activation::relu, true), 2);
    const Vector g0 = grad(p, d, {}).values();
    const Vector g1 = grad(p, d, {0.3, RegKind::l2_all}).values();
    CHECK(((g1 - g0) - 0.6 * p.values()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("kappa zero disables the regularizer") {
    const ParamVector p = init_params(ArchSpec::uniform({2, 3, 1}, Activation::relu, true), 2);
    CHECK(regularizer(p, {0.0, RegKind::l2_all}) == 0.0);
    CHECK(regularizer(p, {1.0, RegKind::none}) == 0.0);
    CHECK(regularizer(p, {1.0, RegKind::l1_second_layer}) == doctest::Approx(p.weight(1).cwiseAbs().sum()));
}

TEST_CASE("relu rescaling leaves outputs unchanged") {
    const ArchSpec a = ArchSpec::uniform({3, 5, 2}, Activation::relu, false);
    const ParamVector p = init_params(a, 17);
    ParamVector q = p;
    const double ts[] = {0.5, 2.0, 3.7, 0.1, 9.0};
    for (int i = 0; i < 5; ++i) {
        q.weight(0).row(i) *= ts[i];
        q.weight(1).col(i) /= ts[i];
    }
    const Dataset d = random_dataset(3, 2, 200, 3);
    const RowMatrix a1 = forward_batch(p, d.inputs);
    const RowMatrix a2 = forward_batch(q, d.inputs);
    CHECK((a1 - a2).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("train_to with infinite target returns immediately") {
    const Dataset d = tasks::gen_poly(2, 64, 1);
    const ParamVector p = init_params(ArchSpec::uniform({1, 4, 1}, Activation::relu, true), 1);
    TrainConfig cfg;
    cfg.target_loss = std::numeric_limits<double>::infinity();
    const TrainResult r = train_to(p, d, cfg, {});
    CHECK(r.converged);
    CHECK(r.steps == 0);
    CHECK(r.params == p);
}

TEST_CASE("sgd solves realizable linear regression") {
    Dataset d = random_dataset(3, 1, 100, 5);
    const Vector w_true = (Vector(3) << 0.5, -1.0, 2.0).finished();
    d.targets.col(0) = d.inputs * w_true;
    const ArchSpec a = ArchSpec::uniform({3, 1}, Activation::identity, false);
    TrainConfig cfg;
    cfg.optimizer = OptimizerKind::sgd;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 10;
    cfg.max_steps = 20000;
    cfg.target_loss = 1e-10;
    const TrainResult r = train_to(ParamVector(a), d, cfg, {});
    CHECK(r.converged);
    CHECK(r.final_loss <= 1e-10);
    CHECK(r.final_loss == loss(r.params, d, {}));
}

TEST_CASE("training is reproducible and detects divergence") {
    const Dataset d = tasks::gen_poly(2, 64, 1);
    const ParamVector p = init_params(ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true), 3);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.max_steps = 300;
    cfg.seed = 42;
    const TrainResult a = train_to(p, d, cfg, {});
    const TrainResult b = train_to(p, d, cfg, {});
    CHECK(a.params == b.params);
    CHECK(a.final_loss == b.final_loss);

    TrainConfig bad = cfg;
    bad.optimizer = OptimizerKind::sgd;
    bad.learning_rate = 1e6;
    const ParamVector lin = init_params(ArchSpec::uniform({1, 8, 8, 1}, Activation::identity, true), 3);
    CHECK_THROWS_AS((void)train_to(lin, d, bad, {}), TrainingDiverged);
}

TEST_CASE("sigmoid 1-4-4-1 reaches 0.01 on the quadratic task for most seeds") {
    const Dataset d = tasks::gen_poly(2, 128, 10);
    const ArchSpec a = ArchSpec::uniform({1, 4, 4, 1}, Activation::sigmoid, true);
    int converged = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TrainConfig cfg;
        cfg.learning_rate = 0.02;
        cfg.batch_size = 32;
        cfg.max_steps = 40000;
        cfg.target_loss = 0.01;
        cfg.seed = seed;
        converged += train_to(init_params(a, seed), d, cfg, {}).converged ? 1 : 0;
    }
    CHECK(converged >= 9);
}

TEST_CASE("checkpoint round trip") {
    const ParamVector p = init_params(ArchSpec::uniform({2, 3, 2}, Activation::relu, true), 4);
    const auto path = (std::filesystem::temp_directory_path() / "levelset_ckpt_test.json").string();
    save_checkpoint(path, p, {4, 0.125, "now"});
    const Checkpoint c = load_checkpoint(path);
    CHECK(c.params == p);
    CHECK(c.meta.seed == 4);
    CHECK(c.meta.final_loss == 0.125);
    std::filesystem::remove(path);
}

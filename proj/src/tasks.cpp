#include "levelset/tasks.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <vector>

namespace levelset {

void Dataset::validate() const {
    if (inputs.rows() < 1) throw ContractViolation("dataset is empty");
    if (inputs.rows() != targets.rows()) throw ContractViolation("inputs and targets have different row counts");
}

namespace tasks {

double quadratic_target(double x) { return 4.0 * (x - 0.5) * (x - 0.5); }

double cubic_target(double x) { return 0.5 + 6.0 * (x - 0.2) * (x - 0.5) * (x - 0.8); }

Dataset gen_poly(int degree, long samples, std::uint64_t seed) {
    if (degree != 2 && degree != 3) throw ContractViolation("polynomial degree must be 2 or 3");
    if (samples < 2) throw ContractViolation("polynomial task needs at least 2 samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset d;
    d.name = degree == 2 ? "poly2" : "poly3";
    d.inputs.resize(samples, 1);
    d.targets.resize(samples, 1);
    for (long i = 0; i < samples; ++i) {
        const double x = u(rng);
        d.inputs(i, 0) = x;
        d.targets(i, 0) = degree == 2 ? quadratic_target(x) : cubic_target(x);
    }
    return d;
}

void MixtureSpec::validate() const {
    if (!(mu > 0.0)) throw ContractViolation("mixture mu must be positive");
    if (!(sigma >= 0.0)) throw ContractViolation("mixture sigma must be nonnegative");
    if (!(pi >= 0.0 && pi <= 1.0)) throw ContractViolation("mixture pi must lie in [0, 1]");
    if (samples < 1) throw ContractViolation("mixture needs at least one sample");
}

Dataset gen_mixture(const MixtureSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::bernoulli_distribution component(0.5);
    std::bernoulli_distribution primary(spec.pi);
    Dataset d;
    d.name = "mixture";
    d.inputs.resize(spec.samples, 2);
    d.targets.resize(spec.samples, 2);
    for (long i = 0; i < spec.samples; ++i) {
        const double z = component(rng) ? 1.0 : -1.0;
        const double e0 = spec.sigma * noise(rng);
        const double e1 = spec.sigma * noise(rng);
        const double sign = primary(rng) ? 1.0 : -1.0;
        // X - mu_Z = (e0, e1) exactly, so the target is formed from the noise
        // directly rather than by cancelling the mean.
        d.inputs(i, 0) = z * spec.mu + e0;
        d.inputs(i, 1) = e1;
        d.targets(i, 0) = sign * z * e0;
        d.targets(i, 1) = sign * z * e1;
    }
    return d;
}

ParamVector mixture_bisector_net(double mu, bool swapped) {
    ParamVector p(ArchSpec::uniform({2, 2, 2}, Activation::relu, true));
    auto w0 = p.weight(0);
    w0.setZero();
    w0(swapped ? 1 : 0, 0) = 1.0;
    w0(swapped ? 0 : 1, 0) = -1.0;
    p.bias(0).setZero();
    auto w1 = p.weight(1);
    w1.setZero();
    w1(0, 0) = 1.0;
    w1(0, 1) = 1.0;
    p.bias(1) << -mu, 0.0;
    return p;
}

Dataset gen_permutation() {
    Dataset d;
    d.name = "permutation";
    d.inputs.resize(3, 2);
    d.inputs << 1.0, 0.0, -0.5, 0.87, -0.5, -0.87;
    d.targets.resize(3, 2);
    for (Eigen::Index i = 0; i < 3; ++i) d.targets.row(i) = d.inputs.row((i + 1) % 3);
    return d;
}

Dataset gen_relu_teacher(int dim, int units, long samples, std::uint64_t seed) {
    if (dim < 1 || units < 1 || samples < 1) throw ContractViolation("teacher task needs positive sizes");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix u(dim, units);
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) u(i, j) = g(rng);
        u.col(j).normalize();
    }
    Vector a(units);
    for (Eigen::Index j = 0; j < a.size(); ++j) a[j] = g(rng);
    Dataset d;
    d.name = "relu_teacher";
    d.inputs.resize(samples, dim);
    d.targets.resize(samples, 1);
    for (long i = 0; i < samples; ++i) {
        for (int j = 0; j < dim; ++j) d.inputs(i, j) = g(rng);
    }
    d.targets.col(0) = (d.inputs * u).cwiseMax(0.0) * a;
    return d;
}

Dataset with_bias_column(const Dataset& data) {
    data.validate();
    Dataset d = data;
    d.inputs.conservativeResize(Eigen::NoChange, data.input_dim() + 1);
    d.inputs.col(data.input_dim()).setOnes();
    return d;
}

void save_csv(const Dataset& data, const std::string& path) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (Eigen::Index j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << 'x' << j;
    for (Eigen::Index j = 0; j < data.output_dim(); ++j) out << ',' << 'y' << j;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << data.inputs(i, j);
        for (Eigen::Index j = 0; j < data.output_dim(); ++j) out << ',' << data.targets(i, j);
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(std::string cell, std::size_t line) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = cell.find_first_not_of(' ');
    if (start == std::string::npos) throw ParseError("empty cell", line);
    double v = 0.0;
    const char* b = cell.data() + start;
    const char* e = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ParseError("invalid number '" + cell + "'", line);
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    for (const auto& h : header) {
        if (!h.empty() && h[0] == 'x' && p == 0) {
            ++n;
        } else if (!h.empty() && h[0] == 'y') {
            ++p;
        } else {
            throw ParseError("unexpected header column '" + h + "'", 1);
        }
    }
    if (n == 0 || p == 0) throw ParseError("header needs x and y columns", 1);

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (static_cast<Eigen::Index>(cells.size()) != n + p) {
            throw ParseError("expected " + std::to_string(n + p) + " columns, found " + std::to_string(cells.size()),
                             lineno);
        }
        std::vector<double> r;
        r.reserve(cells.size());
        for (const auto& c : cells) r.push_back(parse_number(c, lineno));
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ParseError("no data rows", lineno);

    Dataset d;
    d.name = path;
    d.inputs.resize(static_cast<Eigen::Index>(rows.size()), n);
    d.targets.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < n; ++j) d.inputs(r, j) = rows[i][static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j < p; ++j) d.targets(r, j) = rows[i][static_cast<std::size_t>(n + j)];
    }
    return d;
}

}  // namespace tasks
}  // namespace levelset

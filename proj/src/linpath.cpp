#include "levelset/linpath.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace levelset::linpath {

namespace {

constexpr double kRankTolerance = 1e-10;

void require_linear(const ArchSpec& arch) {
    arch.validate();
    if (arch.use_bias) throw UnsupportedArchitecture("linear paths are defined for bias-free networks");
    for (Activation a : arch.activations) {
        if (a != Activation::identity) throw UnsupportedArchitecture("linear paths need identity activations");
    }
}

std::vector<Matrix> layers_of(const ParamVector& p) {
    std::vector<Matrix> out;
    for (int k = 0; k < p.arch().depth(); ++k) out.emplace_back(p.weight(k));
    return out;
}

ParamVector params_of(const ArchSpec& arch, const std::vector<Matrix>& layers) {
    ParamVector p(arch);
    for (int k = 0; k < arch.depth(); ++k) p.weight(k) = layers[static_cast<std::size_t>(k)];
    return p;
}

int numerical_rank(const Vector& sv) {
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    return static_cast<int>((sv.array() > kRankTolerance * sv[0]).count());
}

struct SchurAngles {
    Matrix q;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> planes;
    std::vector<double> angles;
};

SchurAngles schur_angles(const Matrix& r) {
    if (r.rows() != r.cols()) throw ShapeError("rotation must be square");
    const Eigen::RealSchur<Matrix> schur(r);
    const Matrix& t = schur.matrixT();
    SchurAngles out;
    out.q = schur.matrixU();
    std::vector<Eigen::Index> negative;
    const Eigen::Index n = t.rows();
    for (Eigen::Index i = 0; i < n;) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            out.planes.emplace_back(i, i + 1);
            out.angles.push_back(std::atan2(0.5 * (t(i + 1, i) - t(i, i + 1)), 0.5 * (t(i, i) + t(i + 1, i + 1))));
            i += 2;
        } else {
            if (t(i, i) < 0.0) negative.push_back(i);
            ++i;
        }
    }
    if (negative.size() % 2 != 0) throw ContractViolation("matrix is not special orthogonal");
    for (std::size_t k = 0; k < negative.size(); k += 2) {
        out.planes.emplace_back(negative[k], negative[k + 1]);
        out.angles.push_back(std::numbers::pi);
    }
    return out;
}

}  // namespace

// ------------------------------------------------------------------ SO(n)

SoGeodesic::SoGeodesic(const Matrix& a, const Matrix& b) : a_(a), b_(b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("geodesic endpoints differ in size");
    SchurAngles s = schur_angles(a.transpose() * b);
    q_ = std::move(s.q);
    planes_ = std::move(s.planes);
    angles_ = std::move(s.angles);
}

Matrix SoGeodesic::at(double t) const {
    if (t == 0.0) return a_;
    if (t == 1.0) return b_;
    Matrix rot = Matrix::Identity(q_.rows(), q_.cols());
    for (std::size_t k = 0; k < planes_.size(); ++k) {
        const auto [i, j] = planes_[k];
        const double c = std::cos(t * angles_[k]);
        const double s = std::sin(t * angles_[k]);
        rot(i, i) = c;
        rot(j, j) = c;
        rot(i, j) = -s;
        rot(j, i) = s;
    }
    return a_ * q_ * rot * q_.transpose();
}

Matrix so_log(const Matrix& r) {
    const SchurAngles s = schur_angles(r);
    Matrix l = Matrix::Zero(r.rows(), r.cols());
    for (std::size_t k = 0; k < s.planes.size(); ++k) {
        const auto [i, j] = s.planes[k];
        l(i, j) = -s.angles[k];
        l(j, i) = s.angles[k];
    }
    return s.q * l * s.q.transpose();
}

Matrix complete_special_orthogonal(const Matrix& u) {
    const Eigen::Index h = u.rows();
    const Eigen::Index r = u.cols();
    if (r > h) throw ShapeError("more columns than rows");
    Matrix out(h, h);
    out.leftCols(r) = u;
    if (r < h) {
        const Eigen::HouseholderQR<Matrix> qr(u);
        const Matrix q = qr.householderQ();
        out.rightCols(h - r) = q.rightCols(h - r);
    }
    if (out.determinant() < 0.0) {
        if (r == h) throw ContractViolation("square frame with determinant -1 cannot be completed");
        out.col(h - 1) *= -1.0;
    }
    return out;
}

// ----------------------------------------------------------- global minimum

namespace {

std::vector<Matrix> balanced_split(const Matrix& m, const std::vector<int>& sizes) {
    const std::size_t depth = sizes.size() - 1;
    if (depth == 1) return {m};
    const int width = *std::min_element(sizes.begin(), sizes.end());
    const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index r = std::min<Eigen::Index>(width, svd.singularValues().size());
    const Vector root = svd.singularValues().head(r).cwiseSqrt();

    std::vector<Matrix> out;
    Matrix first = Matrix::Zero(sizes[1], sizes[0]);
    first.topRows(r) = root.asDiagonal() * svd.matrixV().leftCols(r).transpose();
    out.push_back(first);
    for (std::size_t k = 1; k + 1 < depth; ++k) {
        Matrix mid = Matrix::Zero(sizes[k + 1], sizes[k]);
        mid.topLeftCorner(r, r).setIdentity();
        out.push_back(mid);
    }
    Matrix last = Matrix::Zero(sizes[depth], sizes[depth - 1]);
    last.leftCols(r) = svd.matrixU().leftCols(r) * root.asDiagonal();
    out.push_back(last);
    return out;
}

}  // namespace

GlobalMin global_min_linear(const ArchSpec& arch, const Dataset& data) {
    require_linear(arch);
    data.validate();
    if (data.input_dim() != arch.input_dim() || data.output_dim() != arch.output_dim()) {
        throw ShapeError("dataset does not match the architecture");
    }
    const Matrix x = data.inputs;
    const Matrix y = data.targets;
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x);
    GlobalMin out;
    out.singular_covariance = cod.rank() < x.cols();
    Matrix m = cod.solve(y).transpose();  // p×n

    const int width = *std::min_element(arch.layer_sizes.begin(), arch.layer_sizes.end());
    if (width < std::min(m.rows(), m.cols())) {
        const Eigen::JacobiSVD<Matrix> fitted(x * m.transpose(), Eigen::ComputeThinV);
        const Matrix vr = fitted.matrixV().leftCols(width);
        m = vr * (vr.transpose() * m);
    }
    const Eigen::JacobiSVD<Matrix> msvd(m);
    out.rank = numerical_rank(msvd.singularValues());
    out.params = params_of(arch, balanced_split(m, arch.layer_sizes));
    out.loss = loss(out.params, data, {});
    return out;
}

// -------------------------------------------------------------- SVD lifting

struct LinearPath::Node {
    virtual ~Node() = default;
    virtual std::vector<Matrix> eval(double t, LinearDiagnostics* diag) const = 0;
};

namespace {

void note(LinearDiagnostics* d, double det_v, double det_u, double min_s, double residual) {
    if (d == nullptr) return;
    if (std::abs(det_v - 1.0) > std::abs(d->det_v - 1.0)) d->det_v = det_v;
    if (std::abs(det_u - 1.0) > std::abs(d->det_u - 1.0)) d->det_u = det_u;
    d->min_singular = std::min(d->min_singular, min_s);
    d->product_residual = std::max(d->product_residual, residual);
}

struct BaseNode final : LinearPath::Node {
    Matrix a;
    Matrix b;
    std::vector<Matrix> eval(double t, LinearDiagnostics*) const override {
        if (t == 0.0) return {a};
        if (t == 1.0) return {b};
        return {(1.0 - t) * a + t * b};
    }
};

// One endpoint of a lifted pair: the original factors, the rank-repair
// targets, and the SVD of the repaired F.
struct Side {
    Matrix f0;
    Matrix g0;
    Matrix g1;  // g0 restricted to range(f0)
    Matrix f1;  // f0 inflated to full column rank
    bool repaired = false;
    Matrix ubar;  // h×h, det +1, first n columns the left singular vectors of f1
    Matrix v;     // n×n, det +1
    Vector s;
};

Side make_side(const Matrix& f, const Matrix& g) {
    Side side;
    side.f0 = f;
    side.g0 = g;
    const Eigen::Index h = f.rows();
    const Eigen::Index n = f.cols();
    const Eigen::JacobiSVD<Matrix> full(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const int r = numerical_rank(full.singularValues());
    if (r < n) {
        side.repaired = true;
        const Matrix ur = full.matrixU().leftCols(r);
        side.g1 = g * ur * ur.transpose();
        const double rho = r > 0 ? full.singularValues()[0] : 1.0;
        side.f1 = f + rho * full.matrixU().middleCols(r, n - r) * full.matrixV().rightCols(n - r).transpose();
    } else {
        side.g1 = g;
        side.f1 = f;
    }
    const Eigen::JacobiSVD<Matrix> svd(side.f1, Eigen::ComputeThinU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    side.v = svd.matrixV();
    side.s = svd.singularValues();
    if (side.v.determinant() < 0.0) {
        side.v.col(n - 1) *= -1.0;
        u.col(n - 1) *= -1.0;
    }
    (void)h;
    side.ubar = complete_special_orthogonal(u);
    return side;
}

struct LiftNode final : LinearPath::Node {
    std::shared_ptr<const LinearPath::Node> child;
    bool right = false;  // merged the last two layers (factors transposed)
    bool staged = false;
    Side a;
    Side b;
    SoGeodesic ugeo;
    SoGeodesic vgeo;

    std::vector<Matrix> eval(double t, LinearDiagnostics* diag) const override {
        enum { prep_a, main_stage, prep_b } stage = main_stage;
        double u = t;
        if (staged) {
            if (t < 0.25) {
                stage = prep_a;
            } else if (t > 0.75) {
                stage = prep_b;
            } else {
                u = (t - 0.25) / 0.5;
            }
        }
        const double tau = stage == prep_a ? 0.0 : stage == prep_b ? 1.0 : u;
        std::vector<Matrix> inner = child->eval(tau, diag);
        const Matrix target = right ? Matrix(inner.back().transpose()) : inner.front();

        Matrix f;
        Matrix g;
        if (stage == main_stage) {
            const Eigen::Index n = a.f0.cols();
            const Matrix ubar = ugeo.at(u);
            const Matrix v = vgeo.at(u);
            const Vector s = (1.0 - u) * a.s + u * b.s;
            const auto uu = ubar.leftCols(n);
            f = uu * s.asDiagonal() * v.transpose();
            const Matrix pinv = v * s.cwiseInverse().asDiagonal() * uu.transpose();
            const Matrix nmix = (1.0 - u) * a.g1 + u * b.g1;
            g = target * pinv + nmix - (nmix * uu) * uu.transpose();
            note(diag, v.determinant(), ubar.determinant(), s.minCoeff(), (g * f - target).norm());
        } else {
            const Side& side = stage == prep_a ? a : b;
            const double s = stage == prep_a ? t / 0.25 : (1.0 - t) / 0.25;
            if (s < 0.5) {
                g = side.g0 + 2.0 * s * (side.g1 - side.g0);
                f = side.f0;
            } else {
                g = side.g1;
                f = side.f0 + (2.0 * s - 1.0) * (side.f1 - side.f0);
            }
            const Eigen::JacobiSVD<Matrix> fsv(f);
            note(diag, side.v.determinant(), side.ubar.determinant(), fsv.singularValues().minCoeff(),
                 (g * f - target).norm());
        }

        std::vector<Matrix> out;
        if (right) {
            out.assign(inner.begin(), inner.end() - 1);
            out.emplace_back(g.transpose());
            out.emplace_back(f.transpose());
        } else {
            out.push_back(f);
            out.push_back(g);
            out.insert(out.end(), inner.begin() + 1, inner.end());
        }
        return out;
    }
};

std::shared_ptr<const LinearPath::Node> build_node(const std::vector<Matrix>& la, const std::vector<Matrix>& lb,
                                                   const std::vector<int>& sizes) {
    const std::size_t depth = la.size();
    if (depth == 1) {
        auto node = std::make_shared<BaseNode>();
        node->a = la[0];
        node->b = lb[0];
        return node;
    }
    auto node = std::make_shared<LiftNode>();
    node->right = sizes.front() > sizes.back();
    std::vector<Matrix> ca;
    std::vector<Matrix> cb;
    std::vector<int> csizes = sizes;
    Matrix fa;
    Matrix ga;
    Matrix fb;
    Matrix gb;
    if (!node->right) {
        fa = la[0];
        ga = la[1];
        fb = lb[0];
        gb = lb[1];
        ca.push_back(ga * fa);
        cb.push_back(gb * fb);
        ca.insert(ca.end(), la.begin() + 2, la.end());
        cb.insert(cb.end(), lb.begin() + 2, lb.end());
        csizes.erase(csizes.begin() + 1);
    } else {
        fa = la[depth - 1].transpose();
        ga = la[depth - 2].transpose();
        fb = lb[depth - 1].transpose();
        gb = lb[depth - 2].transpose();
        ca.assign(la.begin(), la.end() - 2);
        cb.assign(lb.begin(), lb.end() - 2);
        ca.push_back(la[depth - 1] * la[depth - 2]);
        cb.push_back(lb[depth - 1] * lb[depth - 2]);
        csizes.erase(csizes.end() - 2);
    }
    node->child = build_node(ca, cb, csizes);
    node->a = make_side(fa, ga);
    node->b = make_side(fb, gb);
    node->staged = node->a.repaired || node->b.repaired;
    node->ugeo = SoGeodesic(node->a.ubar, node->b.ubar);
    node->vgeo = SoGeodesic(node->a.v, node->b.v);
    return node;
}

}  // namespace

LinearPath::LinearPath(ArchSpec arch, ParamVector a, ParamVector b, std::shared_ptr<const Node> root)
    : arch_(std::move(arch)), a_(std::move(a)), b_(std::move(b)), root_(std::move(root)) {
    if (arch_.depth() >= 2) pivot_ = arch_.input_dim() <= arch_.output_dim() ? 1 : arch_.depth() - 1;
}

ParamVector LinearPath::at(double t) const {
    if (t == 0.0) return a_;
    if (t == 1.0) return b_;
    return params_of(arch_, root_->eval(t, nullptr));
}

LinearDiagnostics LinearPath::diagnostics(double t) const {
    LinearDiagnostics d;
    d.min_singular = std::numeric_limits<double>::infinity();
    (void)root_->eval(t, &d);
    return d;
}

LinearPath build_linear_path(const ParamVector& a, const ParamVector& b) {
    if (!(a.arch() == b.arch())) throw ContractViolation("endpoints have different architectures");
    const ArchSpec& arch = a.arch();
    require_linear(arch);
    const int edge = std::min(arch.input_dim(), arch.output_dim());
    for (std::size_t k = 1; k + 1 < arch.layer_sizes.size(); ++k) {
        if (arch.layer_sizes[k] <= edge) {
            throw UnsupportedArchitecture("hidden width " + std::to_string(arch.layer_sizes[k]) +
                                          " must exceed min(input, output) = " + std::to_string(edge));
        }
    }
    return LinearPath(arch, a, b, build_node(layers_of(a), layers_of(b), arch.layer_sizes));
}

// ------------------------------------------------------------- ridge path

std::pair<Matrix, Matrix> balanced_factors(const Matrix& product, int hidden) {
    const Eigen::Index p = product.rows();
    const Eigen::Index n = product.cols();
    const Eigen::Index k = std::min(n, p);
    if (hidden < k) throw UnsupportedArchitecture("hidden width below min(input, output)");
    const Eigen::JacobiSVD<Matrix> svd(product, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector root = svd.singularValues().cwiseSqrt();
    const Matrix e = Matrix::Identity(hidden, k);
    const Matrix& u = svd.matrixU();
    const Matrix& v = svd.matrixV();
    if (n <= p) {
        return {e * (v * root.asDiagonal() * v.transpose()), (u * root.asDiagonal() * v.transpose()) * e.transpose()};
    }
    return {e * (u * root.asDiagonal() * v.transpose()), (u * root.asDiagonal() * u.transpose()) * e.transpose()};
}

namespace {

Matrix row_space_projector(const Matrix& m) {
    const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const int r = numerical_rank(svd.singularValues());
    const Matrix v = svd.matrixV().leftCols(r);
    return v * v.transpose();
}

Matrix range_basis(const Matrix& m) {
    const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(numerical_rank(svd.singularValues()));
}

Matrix spd_power(const Eigen::SelfAdjointEigenSolver<Matrix>& es, double power) {
    const Vector ev = es.eigenvalues().cwiseMax(0.0).array().pow(power).matrix();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Product-preserving move of one endpoint onto balanced_factors(W2 W1).
struct Rebalance {
    Matrix w1_0, w2_0;  // endpoint
    Matrix w2_1;        // W2 restricted to range(W1)
    Matrix w1_2;        // W1 restricted to the row space of w2_1
    Matrix q;           // h×r basis of the shared subspace
    Eigen::SelfAdjointEigenSolver<Matrix> pstar;  // eigensystem of the optimal metric P*
    Matrix w1_3, w2_3;  // after the metric stage
    SoGeodesic rot;     // identity -> R
    int rank = 0;

    // s in [0, 1]; four equal sub-stages.
    std::pair<Matrix, Matrix> at(double s) const {
        if (s <= 0.25) {
            const double x = s / 0.25;
            return {w1_0, w2_0 + x * (w2_1 - w2_0)};
        }
        if (s <= 0.5) {
            const double x = (s - 0.25) / 0.25;
            return {w1_0 + x * (w1_2 - w1_0), w2_1};
        }
        if (s <= 0.75) {
            const double x = (s - 0.5) / 0.25;
            if (rank == 0) return {w1_2, w2_1};
            const Matrix m = spd_power(pstar, 0.5 * x);
            const Matrix minv = spd_power(pstar, -0.5 * x);
            return {q * m * q.transpose() * w1_2, w2_1 * q * minv * q.transpose()};
        }
        const double x = (s - 0.75) / 0.25;
        const Matrix r = rot.at(x);
        return {r * w1_3, w2_3 * r.transpose()};
    }
};

Rebalance make_rebalance(const Matrix& w1, const Matrix& w2) {
    Rebalance rb;
    const Eigen::Index h = w1.rows();
    rb.w1_0 = w1;
    rb.w2_0 = w2;
    const Matrix range1 = range_basis(w1);
    rb.w2_1 = w2 * range1 * range1.transpose();
    rb.w1_2 = row_space_projector(rb.w2_1) * w1;
    rb.q = range_basis(rb.w1_2);
    rb.rank = static_cast<int>(rb.q.cols());
    if (rb.rank == 0) {
        rb.w1_3 = rb.w1_2;
        rb.w2_3 = rb.w2_1;
        rb.rot = SoGeodesic(Matrix::Identity(h, h), Matrix::Identity(h, h));
        return rb;
    }
    const Matrix a = rb.q.transpose() * rb.w1_2;  // r×n
    const Matrix b = rb.w2_1 * rb.q;              // p×r
    const Eigen::SelfAdjointEigenSolver<Matrix> xs(a * a.transpose());
    const Matrix xh = spd_power(xs, 0.5);
    const Matrix xih = spd_power(xs, -0.5);
    const Eigen::SelfAdjointEigenSolver<Matrix> mid(xh * (b.transpose() * b) * xh);
    Matrix pstar = xih * spd_power(mid, 0.5) * xih;
    pstar = 0.5 * (pstar + pstar.transpose());
    rb.pstar.compute(pstar);
    rb.w1_3 = rb.q * spd_power(rb.pstar, 0.5) * a;
    rb.w2_3 = b * spd_power(rb.pstar, -0.5) * rb.q.transpose();

    // Frame of the balanced pair versus the frame of balanced_factors.
    const Matrix product = rb.w2_3 * rb.w1_3;
    const Eigen::Index n = w1.cols();
    const Eigen::Index p = w2.rows();
    const Eigen::JacobiSVD<Matrix> svd(product, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index r = rb.rank;
    const Vector sr = svd.singularValues().head(r);
    const Matrix vr = svd.matrixV().leftCols(r);
    const Matrix e = Matrix::Identity(h, std::min(n, p));
    const Matrix target = n <= p ? Matrix(e * vr) : Matrix(e * svd.matrixU().leftCols(r));
    const Matrix raw = rb.w1_3 * vr * sr.cwiseSqrt().cwiseInverse().asDiagonal();  // h×r, orthonormal up to rounding
    const Eigen::JacobiSVD<Matrix> polar(raw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix current = polar.matrixU() * polar.matrixV().transpose();
    const Matrix rmat = complete_special_orthogonal(target) * complete_special_orthogonal(current).transpose();
    rb.rot = SoGeodesic(Matrix::Identity(h, h), rmat);
    return rb;
}

}  // namespace

struct RidgePath::Impl {
    ArchSpec arch;
    ParamVector a;
    ParamVector b;
    Rebalance ra;
    Rebalance rb;
    Matrix wa;  // products at the balanced ends
    Matrix wb;
    int hidden = 0;

    std::pair<Matrix, Matrix> factors(double t, RidgeStage& stage) const {
        if (t < 1.0 / 3.0) {
            stage = RidgeStage::rebalance_a;
            return ra.at(3.0 * t);
        }
        if (t > 2.0 / 3.0) {
            stage = RidgeStage::rebalance_b;
            return rb.at(3.0 * (1.0 - t));
        }
        stage = RidgeStage::main;
        const double u = 3.0 * t - 1.0;
        return balanced_factors((1.0 - u) * wa + u * wb, hidden);
    }
};

RidgePath::RidgePath(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

ParamVector RidgePath::at(double t) const { return sample(t).params; }

RidgeSample RidgePath::sample(double t) const {
    RidgeSample s;
    Matrix w1;
    Matrix w2;
    if (t == 0.0 || t == 1.0) {
        s.params = t == 0.0 ? impl_->a : impl_->b;
        s.stage = t == 0.0 ? RidgeStage::rebalance_a : RidgeStage::rebalance_b;
        w1 = s.params.weight(0);
        w2 = s.params.weight(1);
    } else {
        std::tie(w1, w2) = impl_->factors(t, s.stage);
        s.params = params_of(impl_->arch, {w1, w2});
    }
    s.factor_norm_sq = w1.squaredNorm() + w2.squaredNorm();
    s.nuclear_norm = Eigen::JacobiSVD<Matrix>(w2 * w1).singularValues().sum();
    return s;
}

double RidgePath::rebalance_length(int samples) const {
    double total = 0.0;
    Vector prev = at(0.0).values();
    for (int j = 1; j < samples; ++j) {
        const double t = (1.0 / 3.0) * static_cast<double>(j) / static_cast<double>(samples - 1);
        const Vector cur = at(t).values();
        total += (cur - prev).norm();
        prev = cur;
    }
    return total;
}

RidgePath build_ridge_path(const ParamVector& a, const ParamVector& b) {
    if (!(a.arch() == b.arch())) throw ContractViolation("endpoints have different architectures");
    const ArchSpec& arch = a.arch();
    require_linear(arch);
    if (arch.depth() != 2) throw UnsupportedArchitecture("the ridge path is defined for two-layer networks");
    const int hidden = arch.layer_sizes[1];
    if (hidden <= std::min(arch.input_dim(), arch.output_dim())) {
        throw UnsupportedArchitecture("hidden width must exceed min(input, output)");
    }
    auto impl = std::make_shared<RidgePath::Impl>();
    impl->arch = arch;
    impl->a = a;
    impl->b = b;
    impl->hidden = hidden;
    impl->ra = make_rebalance(a.weight(0), a.weight(1));
    impl->rb = make_rebalance(b.weight(0), b.weight(1));
    impl->wa = impl->ra.w2_3 * impl->ra.w1_3;
    impl->wb = impl->rb.w2_3 * impl->rb.w1_3;
    return RidgePath(impl);
}

// ---------------------------------------------------------- verification

PathVerification verify_path(const std::function<ParamVector(double)>& path, const Dataset& data,
                             const LossSpec& spec, int samples) {
    if (samples < 2) throw ContractViolation("verify_path needs at least two samples");
    PathVerification v;
    for (int j = 0; j < samples; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(samples - 1);
        const double l = loss(path(t), data, spec);
        if (j > 0 && l > v.profile.back().second + kMonotoneTolerance) v.monotone = false;
        v.max_loss = j == 0 ? l : std::max(v.max_loss, l);
        v.profile.emplace_back(t, l);
    }
    return v;
}

std::vector<ProfileRow> linear_profile(const LinearPath& path, const Dataset& data, int samples) {
    if (samples < 2) throw ContractViolation("linear_profile needs at least two samples");
    std::vector<ProfileRow> rows;
    for (int j = 0; j < samples; ++j) {
        ProfileRow r;
        r.t = static_cast<double>(j) / static_cast<double>(samples - 1);
        r.loss = loss(path.at(r.t), data, {});
        r.diag = path.diagnostics(r.t);
        rows.push_back(r);
    }
    return rows;
}

void save_profile_csv(const std::string& path, const std::vector<ProfileRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "t,loss,det_V,min_singular,product_residual\n" << std::setprecision(17);
    for (const auto& r : rows) {
        out << r.t << ',' << r.loss << ',' << r.diag.det_v << ',' << r.diag.min_singular << ','
            << r.diag.product_residual << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace levelset::linpath

#include "levelset/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace levelset::geometry {

LengthReport path_length(const std::vector<ParamVector>& beads) {
    if (beads.size() < 2) throw ContractViolation("path_length needs at least two beads");
    LengthReport r;
    for (std::size_t i = 0; i + 1 < beads.size(); ++i) {
        r.per_segment.push_back((beads[i + 1].values() - beads[i].values()).norm());
    }
    r.polyline_length = pairwise_sum(r.per_segment);
    r.endpoint_distance = (beads.back().values() - beads.front().values()).norm();
    if (beads.size() == 2 || r.endpoint_distance == 0.0) {
        r.degenerate_endpoints = r.endpoint_distance == 0.0;
        r.normalized_length = 1.0;
    } else {
        r.normalized_length = r.polyline_length / r.endpoint_distance;
    }
    return r;
}

std::vector<SweepRecord> threshold_sweep(const ArchSpec& arch, const Dataset& data, const LossSpec& spec,
                                         const std::vector<double>& thresholds, int pairs, std::uint64_t base_seed,
                                         const strings::DssConfig& dss) {
    if (thresholds.empty()) throw ContractViolation("sweep needs at least one threshold");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] < thresholds[i - 1])) throw ContractViolation("sweep thresholds must be strictly decreasing");
    }
    if (pairs < 1) throw ContractViolation("sweep needs at least one pair");

    std::vector<SweepRecord> out;
    for (double L0 : thresholds) {
        strings::DssConfig cfg = dss;
        cfg.L0 = L0;
        cfg.validate();
        std::vector<strings::PathResult> results(static_cast<std::size_t>(pairs));
        std::vector<char> ok(static_cast<std::size_t>(pairs), 0);

#pragma omp parallel for schedule(dynamic)
        for (int p = 0; p < pairs; ++p) {
            const std::uint64_t pair_seed = derive_seed(base_seed, static_cast<std::uint64_t>(p));
            ParamVector ends[2];
            bool trained = true;
            for (int e = 0; e < 2 && trained; ++e) {
                TrainConfig tc = dss.train;
                tc.target_loss = L0;
                tc.seed = derive_seed(pair_seed, 100 + static_cast<std::uint64_t>(e));
                try {
                    const TrainResult tr = train_to(init_params(arch, derive_seed(pair_seed, e)), data, tc, spec);
                    trained = tr.converged;
                    ends[e] = tr.params;
                } catch (const TrainingDiverged&) {
                    trained = false;
                }
            }
            if (!trained) continue;
            strings::DssConfig pc = cfg;
            pc.train.seed = derive_seed(pair_seed, 200);
            const strings::Connection c = strings::find_connection(ends[0], ends[1], data, spec, pc);
            results[static_cast<std::size_t>(p)] = c.result;
            ok[static_cast<std::size_t>(p)] = c.result.converged ? 1 : 0;
        }

        SweepRecord rec;
        rec.L0 = L0;
        rec.n_pairs = pairs;
        std::vector<double> lengths;
        std::vector<double> counts;
        for (std::size_t p = 0; p < results.size(); ++p) {
            if (!ok[p]) continue;
            lengths.push_back(results[p].normalized_length);
            counts.push_back(results[p].bead_count);
        }
        rec.n_converged = static_cast<int>(lengths.size());
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.mean_normalized_length = lengths.empty() ? nan : pairwise_sum(lengths) / lengths.size();
        rec.mean_bead_count = counts.empty() ? nan : pairwise_sum(counts) / counts.size();
        out.push_back(rec);
    }
    return out;
}

void save_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "L0,mean_normalized_length,mean_bead_count,n_converged\n" << std::setprecision(17);
    for (const auto& r : records) {
        out << r.L0 << ',' << r.mean_normalized_length << ',' << r.mean_bead_count << ',' << r.n_converged << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

Projection pca_project(const std::vector<ParamVector>& beads, int k) {
    if (beads.size() < 2) throw ContractViolation("pca_project needs at least two beads");
    const Eigen::Index dim = beads.front().size();
    if (k < 1 || k > static_cast<int>(std::min<Eigen::Index>(static_cast<Eigen::Index>(beads.size()), dim))) {
        throw ContractViolation("pca_project: k must lie in [1, min(beads, parameters)]");
    }
    Matrix x(static_cast<Eigen::Index>(beads.size()), dim);
    for (std::size_t i = 0; i < beads.size(); ++i) {
        if (beads[i].size() != dim) throw ShapeError("beads have different parameter counts");
        x.row(static_cast<Eigen::Index>(i)) = beads[i].values().transpose();
    }
    Projection p;
    p.mean = x.colwise().mean().transpose();
    x.rowwise() -= p.mean.transpose();

    const Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    const double total = sv.squaredNorm();
    p.components = svd.matrixV().leftCols(k);
    // Fix the sign of each direction: largest-magnitude entry positive.
    for (int c = 0; c < k; ++c) {
        Eigen::Index idx = 0;
        p.components.col(c).cwiseAbs().maxCoeff(&idx);
        if (p.components(idx, c) < 0.0) p.components.col(c) *= -1.0;
    }
    p.coords = x * p.components;
    for (int c = 0; c < k; ++c) {
        p.explained.push_back(total > 0.0 && c < sv.size() ? sv[c] * sv[c] / total : 0.0);
    }
    return p;
}

void save_projection_csv(const std::string& path, const Projection& proj, const std::vector<double>& losses) {
    if (static_cast<Eigen::Index>(losses.size()) != proj.coords.rows()) {
        throw ShapeError("one loss per projected bead is required");
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "bead_index";
    for (Eigen::Index c = 0; c < proj.coords.cols(); ++c) out << ",c" << c + 1;
    out << ",loss\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < proj.coords.rows(); ++i) {
        out << i;
        for (Eigen::Index c = 0; c < proj.coords.cols(); ++c) out << ',' << proj.coords(i, c);
        out << ',' << losses[static_cast<std::size_t>(i)] << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace levelset::geometry

#include "levelset/strings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json_io.hpp"
#include "levelset/geometry.hpp"

namespace levelset::strings {

std::string_view to_string(TStarMode m) { return m == TStarMode::half ? "half" : "local_max"; }

TStarMode parse_tstar_mode(std::string_view s) {
    if (s == "local_max") return TStarMode::local_max;
    if (s == "half") return TStarMode::half;
    throw ContractViolation("unknown tstar_mode '" + std::string(s) + "'");
}

std::string_view to_string(AbortReason r) {
    switch (r) {
        case AbortReason::max_depth: return "max_depth";
        case AbortReason::diverged: return "diverged";
        case AbortReason::budget: return "budget";
    }
    return "budget";
}

AbortReason parse_abort_reason(std::string_view s) {
    if (s == "max_depth") return AbortReason::max_depth;
    if (s == "diverged") return AbortReason::diverged;
    if (s == "budget") return AbortReason::budget;
    throw ContractViolation("unknown abort reason '" + std::string(s) + "'");
}

std::string_view to_string(InsertRule r) { return r == InsertRule::halfway ? "halfway" : "at_max"; }

InsertRule parse_insert_rule(std::string_view s) {
    if (s == "at_max") return InsertRule::at_max;
    if (s == "halfway") return InsertRule::halfway;
    throw ContractViolation("unknown insert_rule '" + std::string(s) + "'");
}

void DssConfig::validate() const {
    if (!(L0 > 0.0)) throw ContractViolation("dss.L0 must be positive");
    if (!(alpha_train > 0.0 && alpha_train <= 1.0)) throw ContractViolation("dss.alpha_train must lie in (0, 1]");
    if (interp_samples < 3) throw ContractViolation("dss.interp_samples must be >= 3");
    if (max_depth < 1) throw ContractViolation("dss.max_depth must be >= 1");
    train.validate();
}

void CdssConfig::validate() const {
    if (zeta < 0.0 || kappa_h < 0.0) throw ContractViolation("cdss weights must be nonnegative");
    if (steps_per_round < 1) throw ContractViolation("cdss.steps_per_round must be positive");
    if (schedule.empty()) throw ContractViolation("cdss.schedule is empty");
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (!(schedule[i] < schedule[i - 1])) throw ContractViolation("cdss.schedule must be strictly decreasing");
    }
    if (!(schedule.back() > 0.0)) throw ContractViolation("cdss.schedule entries must be positive");
    if (interp_samples < 3) throw ContractViolation("cdss.interp_samples must be >= 3");
    if (max_rounds < 1 || max_beads < 2) throw ContractViolation("cdss budget must allow progress");
    if (!(learning_rate > 0.0) || batch_size < 1) throw ContractViolation("cdss optimizer settings invalid");
}

ParamVector interpolate(const ParamVector& p1, const ParamVector& p2, double t) {
    if (!(p1.arch() == p2.arch())) throw ContractViolation("cannot interpolate between different architectures");
    return ParamVector(p1.arch(), t * p1.values() + (1.0 - t) * p2.values());
}

SegmentProfile segment_profile(const ParamVector& p1, const ParamVector& p2, const Dataset& data,
                               const LossSpec& spec, int samples, TStarMode mode) {
    if (samples < 3) throw ContractViolation("segment_profile needs at least 3 samples");
    SegmentProfile prof;
    prof.curve.reserve(static_cast<std::size_t>(samples));
    double interior_best = -1.0;
    for (int j = 0; j < samples; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(samples - 1);
        const double l = loss(interpolate(p1, p2, t), data, spec);
        prof.curve.emplace_back(t, l);
        prof.max_loss = j == 0 ? l : std::max(prof.max_loss, l);
        if (j > 0 && j + 1 < samples && l > interior_best) {
            interior_best = l;
            prof.t_star = t;
        }
    }
    if (mode == TStarMode::half) prof.t_star = 0.5;
    return prof;
}

namespace {

void finish(Connection& c, const Dataset& data, const LossSpec& spec) {
    auto& bl = c.beads;
    bl.losses.clear();
    for (const auto& b : bl.beads) bl.losses.push_back(loss(b, data, spec));
    c.result.bead_count = static_cast<int>(bl.beads.size());
    c.result.max_interp_loss = 0.0;
    for (const auto& s : bl.segment_max) c.result.max_interp_loss = std::max(c.result.max_interp_loss, s.max_loss);
    c.result.normalized_length = geometry::path_length(bl.beads).normalized_length;
}

class GreedySampler {
public:
    GreedySampler(const Dataset& data, const LossSpec& spec, const DssConfig& cfg)
        : data_(data), spec_(spec), cfg_(cfg) {}

    Connection run(const ParamVector& p1, const ParamVector& p2) {
        out_.beads.beads.push_back(p1);
        out_.beads.depth_log.push_back(0);
        const bool ok = process(p1, p2, 0);
        out_.beads.beads.push_back(p2);
        out_.beads.depth_log.push_back(0);
        out_.result.converged = ok;
        return std::move(out_);
    }

private:
    void record(const SegmentProfile& prof) { out_.beads.segment_max.push_back({prof.t_star, prof.max_loss}); }

    void fail(AbortReason r) {
        if (!out_.result.abort_reason) out_.result.abort_reason = r;
    }

    // Beads strictly between a and b are appended; b itself is left to the caller.
    bool process(const ParamVector& a, const ParamVector& b, int depth) {
        out_.result.depth_reached = std::max(out_.result.depth_reached, depth);
        const SegmentProfile prof = segment_profile(a, b, data_, spec_, cfg_.interp_samples, cfg_.tstar_mode);
        if (prof.max_loss <= cfg_.L0) {
            record(prof);
            return true;
        }
        if (depth >= cfg_.max_depth) {
            record(prof);
            fail(AbortReason::max_depth);
            return false;
        }

        TrainConfig tc = cfg_.train;
        tc.target_loss = cfg_.alpha_train * cfg_.L0;
        tc.seed = derive_seed(cfg_.train.seed, trained_++);
        TrainResult tr;
        try {
            tr = train_to(interpolate(a, b, prof.t_star), data_, tc, spec_);
        } catch (const TrainingDiverged&) {
            record(prof);
            fail(AbortReason::diverged);
            return false;
        }
        if (!tr.converged) {
            record(prof);
            fail(AbortReason::budget);
            return false;
        }

        const ParamVector& bead = tr.params;
        const bool left = process(a, bead, depth + 1);
        out_.beads.beads.push_back(bead);
        out_.beads.depth_log.push_back(depth + 1);
        if (!left) {
            record(segment_profile(bead, b, data_, spec_, cfg_.interp_samples, cfg_.tstar_mode));
            return false;
        }
        return process(bead, b, depth + 1);
    }

    const Dataset& data_;
    const LossSpec& spec_;
    const DssConfig& cfg_;
    Connection out_;
    std::uint64_t trained_ = 0;
};

}  // namespace

Connection find_connection(const ParamVector& p1, const ParamVector& p2, const Dataset& data, const LossSpec& spec,
                           const DssConfig& cfg) {
    cfg.validate();
    data.validate();
    if (!(p1.arch() == p2.arch())) throw ContractViolation("endpoints have different architectures");
    for (const ParamVector* p : {&p1, &p2}) {
        const double l = loss(*p, data, spec);
        if (!(l <= cfg.L0)) throw EndpointAboveThreshold(l, cfg.L0);
    }
    Connection c = GreedySampler(data, spec, cfg).run(p1, p2);
    finish(c, data, spec);
    return c;
}

// --------------------------------------------------------------- constrained

namespace {

struct Neighbourhood {
    const Vector& prev;
    const Vector& cur;
    const Vector& next;
};

Neighbourhood neighbourhood(const std::vector<ParamVector>& beads, std::size_t i) {
    if (i == 0 || i + 1 >= beads.size()) throw ContractViolation("augmented loss is defined for interior beads only");
    return {beads[i - 1].values(), beads[i].values(), beads[i + 1].values()};
}

// Spring and hyperplane terms; adds their gradient into `grad` when non-null.
double string_terms(const Neighbourhood& nb, const CdssConfig& cfg, Vector* grad) {
    double value = 0.0;
    if (cfg.zeta != 0.0) {
        for (const Vector* other : {&nb.prev, &nb.next}) {
            const Vector d = nb.cur - *other;
            const double n = d.norm();
            value += cfg.zeta * n;
            if (grad != nullptr && n > 0.0) *grad += cfg.zeta * d / n;
        }
    }
    if (cfg.kappa_h != 0.0) {
        const Vector chord = nb.prev - nb.next;
        const Vector dev = nb.cur - 0.5 * (nb.prev + nb.next);
        const double cn = chord.norm();
        const double dn = dev.norm();
        if (dn >= 1e-12 && cn > 0.0) {
            const double cosine = chord.dot(dev) / (cn * dn);
            value += cfg.kappa_h * std::abs(cosine);
            if (grad != nullptr && cosine != 0.0) {
                const double sign = cosine > 0.0 ? 1.0 : -1.0;
                *grad += cfg.kappa_h * sign * (chord / cn - cosine * dev / dn) / dn;
            }
        }
    }
    return value;
}

struct BeadState {
    std::uint64_t id;
    Optimizer opt;
    std::mt19937_64 rng;
    std::vector<Eigen::Index> order;
    std::size_t cursor;
};

BeadState make_state(std::uint64_t id, const CdssConfig& cfg, Eigen::Index params, Eigen::Index rows) {
    BeadState s{id, Optimizer(cfg.optimizer, cfg.learning_rate, params), std::mt19937_64(derive_seed(cfg.seed, id)),
                std::vector<Eigen::Index>(static_cast<std::size_t>(rows)), 0};
    std::iota(s.order.begin(), s.order.end(), Eigen::Index{0});
    s.cursor = s.order.size();
    return s;
}

std::span<const Eigen::Index> next_batch(BeadState& s, int batch) {
    if (s.cursor >= s.order.size()) {
        std::shuffle(s.order.begin(), s.order.end(), s.rng);
        s.cursor = 0;
    }
    const std::size_t len = std::min(static_cast<std::size_t>(batch), s.order.size() - s.cursor);
    const auto span = std::span<const Eigen::Index>(s.order).subspan(s.cursor, len);
    s.cursor += len;
    return span;
}

}  // namespace

double cdss_augmented_loss(const std::vector<ParamVector>& beads, std::size_t i, const Dataset& data,
                           const LossSpec& spec, const CdssConfig& cfg) {
    const Neighbourhood nb = neighbourhood(beads, i);
    return loss(beads[i], data, spec) + string_terms(nb, cfg, nullptr);
}

LossGrad cdss_augmented_loss_grad(const std::vector<ParamVector>& beads, std::size_t i, const Dataset& data,
                                  const LossSpec& spec, const CdssConfig& cfg, std::span<const Eigen::Index> rows) {
    const Neighbourhood nb = neighbourhood(beads, i);
    LossGrad lg = loss_and_grad(beads[i], data, spec, rows);
    lg.loss += string_terms(nb, cfg, &lg.grad.values());
    return lg;
}

Connection cdss_evolve(const ParamVector& a, const ParamVector& b, const Dataset& data, const LossSpec& spec,
                       const CdssConfig& cfg) {
    cfg.validate();
    data.validate();
    if (!(a.arch() == b.arch())) throw ContractViolation("endpoints have different architectures");
    for (const ParamVector* p : {&a, &b}) {
        const double l = loss(*p, data, spec);
        if (!(l <= cfg.schedule.front())) throw EndpointAboveThreshold(l, cfg.schedule.front());
    }

    const Eigen::Index dim = a.size();
    std::vector<ParamVector> beads{a, b};
    std::vector<int> born{0, 0};
    std::vector<BeadState> states;
    states.push_back(make_state(0, cfg, dim, data.size()));
    states.push_back(make_state(1, cfg, dim, data.size()));
    std::uint64_t next_id = 2;

    Connection c;
    std::vector<SegmentProfile> profiles;
    std::size_t stage = 0;
    int round = 0;
    bool diverged = false;

    auto profile_all = [&] {
        profiles.assign(beads.size() - 1, {});
        const auto segments = static_cast<std::ptrdiff_t>(beads.size()) - 1;
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t s = 0; s < segments; ++s) {
            profiles[static_cast<std::size_t>(s)] = segment_profile(beads[static_cast<std::size_t>(s)], beads[static_cast<std::size_t>(s) + 1], data,
                                                                    spec, cfg.interp_samples);
        }
    };

    while (stage < cfg.schedule.size() && round < cfg.max_rounds && !diverged) {
        const double level = cfg.schedule[stage];
        ++round;

        // Endpoints move only when they sit above the current threshold.
        for (std::size_t e : {std::size_t{0}, beads.size() - 1}) {
            if (loss(beads[e], data, spec) <= level) continue;
            TrainConfig tc;
            tc.optimizer = cfg.optimizer;
            tc.learning_rate = cfg.learning_rate;
            tc.batch_size = cfg.batch_size;
            tc.max_steps = cfg.steps_per_round;
            tc.target_loss = level;
            tc.seed = derive_seed(cfg.seed, states[e].id + 0x5eedULL * static_cast<std::uint64_t>(round));
            try {
                beads[e] = train_to(beads[e], data, tc, spec).params;
            } catch (const TrainingDiverged&) {
                diverged = true;
            }
        }

        for (int step = 0; step < cfg.steps_per_round && !diverged; ++step) {
            const std::vector<ParamVector> snapshot = beads;
            const auto last = static_cast<std::ptrdiff_t>(snapshot.size()) - 1;
            int bad = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : bad)
            for (std::ptrdiff_t k = 1; k < last; ++k) {
                const auto i = static_cast<std::size_t>(k);
                const auto rows = next_batch(states[i], cfg.batch_size);
                const LossGrad lg = cdss_augmented_loss_grad(snapshot, i, data, spec, cfg, rows);
                if (!std::isfinite(lg.loss) || lg.loss > 1e12) {
                    ++bad;
                    continue;
                }
                states[i].opt.step(beads[i].values(), lg.grad.values());
            }
            if (bad > 0) diverged = true;
        }
        if (diverged) break;

        profile_all();
        std::vector<double> bead_loss(beads.size());
        for (std::size_t i = 0; i < beads.size(); ++i) bead_loss[i] = loss(beads[i], data, spec);

        bool clean = std::all_of(bead_loss.begin(), bead_loss.end(), [&](double l) { return l <= level; });
        std::vector<ParamVector> grown{beads.front()};
        std::vector<int> grown_born{born.front()};
        std::vector<BeadState> grown_states;
        grown_states.push_back(std::move(states.front()));
        for (std::size_t s = 0; s + 1 < beads.size(); ++s) {
            const bool over = profiles[s].max_loss > level;
            clean = clean && !over;
            // A segment whose own beads are still above the level is left to training.
            if (over && bead_loss[s] <= level && bead_loss[s + 1] <= level) {
                const double t = cfg.insert_rule == InsertRule::halfway ? 0.5 : profiles[s].t_star;
                grown.push_back(interpolate(beads[s], beads[s + 1], t));
                grown_born.push_back(round);
                grown_states.push_back(make_state(next_id++, cfg, dim, data.size()));
            }
            grown.push_back(beads[s + 1]);
            grown_born.push_back(born[s + 1]);
            grown_states.push_back(std::move(states[s + 1]));
        }
        if (!clean && static_cast<int>(grown.size()) > cfg.max_beads) break;
        beads = std::move(grown);
        born = std::move(grown_born);
        states = std::move(grown_states);
        if (clean) ++stage;
    }

    if (profiles.size() + 1 != beads.size()) profile_all();
    c.beads.beads = beads;
    c.beads.depth_log = born;
    for (const auto& p : profiles) c.beads.segment_max.push_back({p.t_star, p.max_loss});
    c.result.converged = stage == cfg.schedule.size();
    c.result.depth_reached = round;
    if (!c.result.converged) c.result.abort_reason = diverged ? AbortReason::diverged : AbortReason::budget;
    finish(c, data, spec);
    return c;
}

// ----------------------------------------------------------------------- I/O

void save_beadlist(const std::string& path, const Connection& c, double L0) {
    using detail::json;
    if (c.beads.beads.empty()) throw ContractViolation("empty bead list");
    json beads = json::array();
    for (const auto& b : c.beads.beads) beads.push_back(detail::vector_to_json(b.values()));
    json segs = json::array();
    for (const auto& s : c.beads.segment_max) segs.push_back({{"t_star", s.t_star}, {"max_loss", s.max_loss}});
    const auto& r = c.result;
    json result = {{"converged", r.converged},
                   {"normalized_length", r.normalized_length},
                   {"bead_count", r.bead_count},
                   {"max_interp_loss", r.max_interp_loss},
                   {"depth_reached", r.depth_reached},
                   {"abort_reason", r.abort_reason ? json(std::string(to_string(*r.abort_reason))) : json(nullptr)}};
    const json j = {{"arch", detail::arch_to_json(c.beads.beads.front().arch())},
                    {"L0", L0},
                    {"beads", beads},
                    {"losses", c.beads.losses},
                    {"segment_max", segs},
                    {"depth_log", c.beads.depth_log},
                    {"result", result}};
    detail::write_json(path, j);
}

Connection load_beadlist(const std::string& path, double* L0) {
    const detail::json j = detail::read_json(path);
    try {
        Connection c;
        const ArchSpec arch = detail::arch_from_json(j.at("arch"));
        for (const auto& b : j.at("beads")) c.beads.beads.emplace_back(arch, detail::vector_from_json(b));
        c.beads.losses = j.at("losses").get<std::vector<double>>();
        for (const auto& s : j.at("segment_max")) {
            c.beads.segment_max.push_back({s.at("t_star").get<double>(), s.at("max_loss").get<double>()});
        }
        c.beads.depth_log = j.at("depth_log").get<std::vector<int>>();
        const auto& r = j.at("result");
        c.result.converged = r.at("converged").get<bool>();
        c.result.normalized_length = r.at("normalized_length").get<double>();
        c.result.bead_count = r.at("bead_count").get<int>();
        c.result.max_interp_loss = r.at("max_interp_loss").get<double>();
        c.result.depth_reached = r.at("depth_reached").get<int>();
        if (!r.at("abort_reason").is_null()) c.result.abort_reason = parse_abort_reason(r.at("abort_reason").get<std::string>());
        if (c.beads.beads.size() < 2 || c.beads.losses.size() != c.beads.beads.size() ||
            c.beads.segment_max.size() + 1 != c.beads.beads.size() || c.beads.depth_log.size() != c.beads.beads.size()) {
            throw Error("inconsistent bead list in '" + path + "'");
        }
        if (L0 != nullptr) *L0 = j.at("L0").get<double>();
        return c;
    } catch (const detail::json::exception& e) {
        throw Error("bad bead list '" + path + "': " + e.what());
    }
}

}  // namespace levelset::strings

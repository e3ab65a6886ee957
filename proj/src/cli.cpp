#include "levelset/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json_io.hpp"
#include "levelset/geometry.hpp"
#include "levelset/tasks.hpp"
#include "levelset/verify.hpp"

namespace levelset::cli {

namespace {

using detail::json;
namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string_view to_string(TaskKind k) {
    switch (k) {
        case TaskKind::poly2: return "poly2";
        case TaskKind::poly3: return "poly3";
        case TaskKind::mixture: return "mixture";
        case TaskKind::permutation: return "permutation";
        case TaskKind::relu_teacher: return "relu_teacher";
        case TaskKind::csv: return "csv";
    }
    return "?";
}

TaskKind parse_task_kind(std::string_view s) {
    for (TaskKind k : {TaskKind::poly2, TaskKind::poly3, TaskKind::mixture, TaskKind::permutation,
                       TaskKind::relu_teacher, TaskKind::csv}) {
        if (s == to_string(k)) return k;
    }
    throw ContractViolation("unknown task kind '" + std::string(s) + "'");
}

std::string_view to_string(ConnectMethod m) { return m == ConnectMethod::greedy ? "greedy" : "cdss"; }

ConnectMethod parse_method(std::string_view s) {
    if (s == "greedy") return ConnectMethod::greedy;
    if (s == "cdss") return ConnectMethod::cdss;
    throw ContractViolation("unknown method '" + std::string(s) + "'");
}

template <class T>
T parse_number(std::string_view s) {
    T v{};
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ContractViolation("not a number: '" + std::string(s) + "'");
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T parse_value(std::string_view s) {
    if constexpr (std::is_same_v<T, bool>) {
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw ContractViolation("not a boolean: '" + std::string(s) + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        return std::string(s);
    } else if constexpr (std::is_arithmetic_v<T>) {
        return parse_number<T>(s);
    } else if constexpr (std::is_same_v<T, Activation>) {
        return parse_activation(s);
    } else if constexpr (std::is_same_v<T, RegKind>) {
        return parse_reg_kind(s);
    } else if constexpr (std::is_same_v<T, OptimizerKind>) {
        return parse_optimizer(s);
    } else if constexpr (std::is_same_v<T, strings::TStarMode>) {
        return strings::parse_tstar_mode(s);
    } else if constexpr (std::is_same_v<T, strings::InsertRule>) {
        return strings::parse_insert_rule(s);
    } else if constexpr (std::is_same_v<T, TaskKind>) {
        return parse_task_kind(s);
    } else if constexpr (std::is_same_v<T, ConnectMethod>) {
        return parse_method(s);
    } else {
        // comma-separated list
        T out;
        if (trim(s).empty()) return out;
        std::size_t start = 0;
        while (true) {
            const auto comma = s.find(',', start);
            const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
            out.push_back(parse_number<typename T::value_type>(item));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return out;
    }
}

template <class T>
std::string format_value(const T& v) {
    if constexpr (std::is_same_v<T, bool>) {
        return v ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
        return v;
    } else if constexpr (std::is_floating_point_v<T>) {
        return format_double(v);
    } else if constexpr (std::is_arithmetic_v<T>) {
        return std::to_string(v);
    } else if constexpr (std::is_enum_v<T>) {
        using levelset::to_string;
        using strings::to_string;
        using cli::to_string;
        return std::string(to_string(v));
    } else {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            out += format_value(v[i]);
        }
        return out;
    }
}

struct Key {
    const char* name;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Key field(const char* name, T ExperimentConfig::*member) {
    return {name, [member](ExperimentConfig& c, std::string_view v) { c.*member = parse_value<T>(v); },
            [member](const ExperimentConfig& c) { return format_value(c.*member); }};
}

const std::vector<Key>& key_table() {
    using C = ExperimentConfig;
    static const std::vector<Key> keys{
        field("task.kind", &C::task_kind),
        field("task.samples", &C::task_samples),
        field("task.seed", &C::task_seed),
        field("task.mu", &C::task_mu),
        field("task.sigma", &C::task_sigma),
        field("task.pi", &C::task_pi),
        field("task.dim", &C::task_dim),
        field("task.units", &C::task_units),
        field("task.path", &C::task_path),
        field("task.bias_column", &C::task_bias_column),
        field("arch.sizes", &C::arch_sizes),
        field("arch.activation", &C::arch_activation),
        field("arch.bias", &C::arch_bias),
        field("loss.kappa", &C::loss_kappa),
        field("loss.reg", &C::loss_reg),
        field("train.optimizer", &C::train_optimizer),
        field("train.learning_rate", &C::train_learning_rate),
        field("train.batch_size", &C::train_batch_size),
        field("train.max_steps", &C::train_max_steps),
        field("train.target_loss", &C::train_target_loss),
        field("dss.method", &C::dss_method),
        field("dss.L0", &C::dss_L0),
        field("dss.alpha_train", &C::dss_alpha_train),
        field("dss.tstar_mode", &C::dss_tstar_mode),
        field("dss.interp_samples", &C::dss_interp_samples),
        field("dss.max_depth", &C::dss_max_depth),
        field("cdss.zeta", &C::cdss_zeta),
        field("cdss.kappa_h", &C::cdss_kappa_h),
        field("cdss.steps_per_round", &C::cdss_steps_per_round),
        field("cdss.insert_rule", &C::cdss_insert_rule),
        field("cdss.schedule", &C::cdss_schedule),
        field("cdss.max_rounds", &C::cdss_max_rounds),
        field("cdss.max_beads", &C::cdss_max_beads),
        field("sweep.thresholds", &C::sweep_thresholds),
        field("sweep.pairs", &C::sweep_pairs),
        field("output_dir", &C::output_dir),
        field("seed", &C::seed),
    };
    return keys;
}

const Key& find_key(std::string_view key) {
    for (const Key& k : key_table()) {
        if (key == k.name) return k;
    }
    throw ConfigError(std::string(key), "unknown config key '" + std::string(key) + "'");
}

void apply_assignment(ExperimentConfig& cfg, std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", "expected key=value, got '" + std::string(line) + "'");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

// Fails early (exit 1) instead of after a long run. Leaves no file behind.
void ensure_writable(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    const bool existed = fs::exists(p);
    {
        std::ofstream probe(path, std::ios::app);
        if (!probe) throw Error("cannot write '" + path + "'");
    }
    if (!existed) fs::remove(p);
}

std::string in_output_dir(const ExperimentConfig& cfg, const std::string& explicit_path, const char* name) {
    if (!explicit_path.empty()) return explicit_path;
    return (fs::path(cfg.output_dir) / name).string();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

int cmd_train(const ExperimentConfig& cfg, const std::string& ckpt_opt, std::ostream& out, std::ostream& err) {
    const Dataset data = make_dataset(cfg);
    const ArchSpec arch = arch_of(cfg);
    if (arch.input_dim() != data.input_dim() || arch.output_dim() != data.output_dim()) {
        throw ConfigError("arch.sizes", "arch.sizes does not match the task dimensions");
    }
    const std::string path = in_output_dir(cfg, ckpt_opt, "checkpoint.json");
    ensure_writable(path);
    TrainConfig tc = train_of(cfg);
    tc.seed = derive_seed(cfg.seed, 1);
    TrainResult r;
    try {
        r = train_to(init_params(arch, derive_seed(cfg.seed, 0)), data, tc, loss_of(cfg));
    } catch (const TrainingDiverged& e) {
        err << e.what() << '\n';
        emit(out, {{"command", "train"}, {"converged", false}, {"diverged_at", e.step()}});
        return kExitNotConverged;
    }
    save_checkpoint(path, r.params, {cfg.seed, r.final_loss, ""});
    out << "final loss " << format_double(r.final_loss) << " after " << r.steps << " steps\n";
    emit(out, {{"command", "train"},
               {"converged", r.converged},
               {"final_loss", r.final_loss},
               {"steps", r.steps},
               {"checkpoint", path}});
    return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_connect(const ExperimentConfig& cfg, const std::string& a_path, const std::string& b_path,
                const std::string& beads_opt, std::ostream& out) {
    const Checkpoint a = load_checkpoint(a_path);
    const Checkpoint b = load_checkpoint(b_path);
    if (!(a.params.arch() == b.params.arch())) throw ShapeError("checkpoints have different architectures");
    const Dataset data = make_dataset(cfg);
    const std::string path = in_output_dir(cfg, beads_opt, "beads.json");
    ensure_writable(path);
    strings::Connection conn;
    double L0 = cfg.dss_L0;
    if (cfg.dss_method == ConnectMethod::greedy) {
        conn = strings::find_connection(a.params, b.params, data, loss_of(cfg), dss_of(cfg));
    } else {
        const strings::CdssConfig cc = cdss_of(cfg);
        L0 = cc.schedule.back();
        conn = strings::cdss_evolve(a.params, b.params, data, loss_of(cfg), cc);
    }
    strings::save_beadlist(path, conn, L0);
    const strings::PathResult& r = conn.result;
    emit(out, {{"command", "connect"},
               {"converged", r.converged},
               {"normalized_length", r.normalized_length},
               {"bead_count", r.bead_count},
               {"max_interp_loss", r.max_interp_loss},
               {"depth_reached", r.depth_reached},
               {"abort_reason", r.abort_reason ? json(std::string(strings::to_string(*r.abort_reason))) : json()},
               {"beads", path}});
    return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& csv_opt, std::ostream& out, std::ostream& err) {
    if (cfg.sweep_thresholds.empty()) throw ConfigError("sweep.thresholds", "sweep.thresholds is empty");
    const Dataset data = make_dataset(cfg);
    const std::string path = in_output_dir(cfg, csv_opt, "sweep.csv");
    ensure_writable(path);
    const auto records = geometry::threshold_sweep(arch_of(cfg), data, loss_of(cfg), cfg.sweep_thresholds,
                                                   cfg.sweep_pairs, cfg.seed, dss_of(cfg));
    geometry::save_sweep_csv(path, records);
    json rows = json::array();
    for (const auto& r : records) {
        if (r.n_converged < r.n_pairs) {
            err << "L0=" << format_double(r.L0) << ": " << r.n_pairs - r.n_converged << " of " << r.n_pairs
                << " pairs did not connect\n";
        }
        rows.push_back({{"L0", r.L0},
                        {"mean_normalized_length", finite_or_null(r.mean_normalized_length)},
                        {"mean_bead_count", finite_or_null(r.mean_bead_count)},
                        {"n_converged", r.n_converged}});
    }
    emit(out, {{"command", "sweep"}, {"records", rows}, {"csv", path}});
    return kExitOk;
}

int cmd_project(const ExperimentConfig& cfg, const std::string& beads_path, int k, const std::string& csv_opt,
                std::ostream& out) {
    const strings::Connection conn = strings::load_beadlist(beads_path);
    const std::string path = in_output_dir(cfg, csv_opt, "projection.csv");
    ensure_writable(path);
    const geometry::Projection p = geometry::pca_project(conn.beads.beads, k);
    geometry::save_projection_csv(path, p, conn.beads.losses);
    emit(out, {{"command", "project"},
               {"beads", conn.beads.beads.size()},
               {"explained", p.explained},
               {"csv", path}});
    return kExitOk;
}

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& csv_opt, std::ostream& out) {
    const Dataset data = make_dataset(cfg);
    const std::string path = in_output_dir(cfg, csv_opt, "data.csv");
    ensure_writable(path);
    tasks::save_csv(data, path);
    emit(out, {{"command", "gen-data"},
               {"samples", data.size()},
               {"input_dim", data.input_dim()},
               {"output_dim", data.output_dim()},
               {"csv", path}});
    return kExitOk;
}

struct VerifyOptions {
    std::string kind;
    int pairs = -1;
    long samples = 100000;
    int depth = 3;
    double kappa = 0.1;
    std::vector<int> dims{2, 3};
    std::vector<double> epsilons{0.5, 0.25, 0.1};
    std::string csv;
};

int cmd_verify(const ExperimentConfig& cfg, const VerifyOptions& o, std::ostream& out, std::ostream& err) {
    const std::string path = in_output_dir(cfg, o.csv, ("verify_" + o.kind + ".csv").c_str());
    ensure_writable(path);
    verify::Report r;
    if (o.kind == "prop3") {
        r = verify::prop3_scan(o.pairs < 0 ? 1000 : o.pairs, o.samples, cfg.seed);
    } else if (o.kind == "linpath") {
        r = verify::linpath_suite(o.depth, o.pairs < 0 ? 10 : o.pairs, cfg.seed);
    } else if (o.kind == "ridge") {
        r = verify::ridge_suite(o.pairs < 0 ? 10 : o.pairs, o.kappa, cfg.seed);
    } else if (o.kind == "covering") {
        r = verify::covering_suite(o.dims, o.epsilons, cfg.seed);
    } else {
        r = verify::prune_suite(cfg.seed);
    }
    verify::save_report_csv(path, r);
    json summary = json::object();
    for (const auto& [name, value] : r.summary) summary[name] = finite_or_null(value);
    if (!r.pass) err << "verification failed: " << r.failure << '\n';
    emit(out, {{"command", "verify"},
               {"kind", r.kind},
               {"pass", r.pass},
               {"failure", r.pass ? json() : json(r.failure)},
               {"summary", summary},
               {"csv", path}});
    return r.pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const Key& k : key_table()) out.emplace_back(k.name);
    return out;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    const Key& k = find_key(key);
    try {
        k.set(cfg, value);
    } catch (const std::exception& e) {
        throw ConfigError(std::string(key), "bad value for '" + std::string(key) + "': " + e.what());
    }
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) { return find_key(key).get(cfg); }

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) {
            try {
                apply_assignment(cfg, line);
            } catch (const ConfigError& e) {
                throw ConfigError(e.key(), std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
            }
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const Key& k : key_table()) {
        out += k.name;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << format_config(cfg);
    if (!out) throw Error("cannot write '" + path + "'");
}

Dataset make_dataset(const ExperimentConfig& cfg) {
    Dataset d;
    switch (cfg.task_kind) {
        case TaskKind::poly2: d = tasks::gen_poly(2, cfg.task_samples, cfg.task_seed); break;
        case TaskKind::poly3: d = tasks::gen_poly(3, cfg.task_samples, cfg.task_seed); break;
        case TaskKind::mixture:
            d = tasks::gen_mixture({cfg.task_mu, cfg.task_sigma, cfg.task_pi, cfg.task_samples, cfg.task_seed});
            break;
        case TaskKind::permutation: d = tasks::gen_permutation(); break;
        case TaskKind::relu_teacher:
            d = tasks::gen_relu_teacher(cfg.task_dim, cfg.task_units, cfg.task_samples, cfg.task_seed);
            break;
        case TaskKind::csv:
            if (cfg.task_path.empty()) throw ConfigError("task.path", "task.kind=csv needs task.path");
            d = tasks::load_csv(cfg.task_path);
            break;
    }
    return cfg.task_bias_column ? tasks::with_bias_column(d) : d;
}

ArchSpec arch_of(const ExperimentConfig& cfg) {
    ArchSpec arch = ArchSpec::uniform(cfg.arch_sizes, cfg.arch_activation, cfg.arch_bias);
    arch.validate();
    return arch;
}

LossSpec loss_of(const ExperimentConfig& cfg) { return {cfg.loss_kappa, cfg.loss_reg}; }

TrainConfig train_of(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.optimizer = cfg.train_optimizer;
    tc.learning_rate = cfg.train_learning_rate;
    tc.batch_size = cfg.train_batch_size;
    tc.max_steps = cfg.train_max_steps;
    tc.target_loss = cfg.train_target_loss;
    tc.seed = cfg.seed;
    tc.validate();
    return tc;
}

strings::DssConfig dss_of(const ExperimentConfig& cfg) {
    strings::DssConfig d;
    d.L0 = cfg.dss_L0;
    d.alpha_train = cfg.dss_alpha_train;
    d.tstar_mode = cfg.dss_tstar_mode;
    d.interp_samples = cfg.dss_interp_samples;
    d.max_depth = cfg.dss_max_depth;
    d.train = train_of(cfg);
    d.train.seed = derive_seed(cfg.seed, 2);
    d.validate();
    return d;
}

strings::CdssConfig cdss_of(const ExperimentConfig& cfg) {
    strings::CdssConfig c;
    c.zeta = cfg.cdss_zeta;
    c.kappa_h = cfg.cdss_kappa_h;
    c.steps_per_round = cfg.cdss_steps_per_round;
    c.insert_rule = cfg.cdss_insert_rule;
    c.schedule = cfg.cdss_schedule.empty() ? std::vector<double>{cfg.dss_L0} : cfg.cdss_schedule;
    c.interp_samples = cfg.dss_interp_samples;
    c.max_rounds = cfg.cdss_max_rounds;
    c.max_beads = cfg.cdss_max_beads;
    c.optimizer = cfg.train_optimizer;
    c.learning_rate = cfg.train_learning_rate;
    c.batch_size = cfg.train_batch_size;
    c.seed = derive_seed(cfg.seed, 3);
    c.validate();
    return c;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Level-set connectivity experiments for small neural networks", "levelset"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> sets;
    int threads = 0;
    std::string out_dir;
    app.add_option("--config", config_path, "Config file (dotted key = value lines)");
    app.add_option("--set", sets, "Override one key, key=value (repeatable)")->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory (overrides output_dir)");

    std::string file_opt;
    auto* train = app.add_subcommand("train", "Train one model and write a checkpoint");
    train->add_option("--checkpoint", file_opt, "Checkpoint path (default <output_dir>/checkpoint.json)");

    std::string ckpt_a, ckpt_b;
    auto* connect = app.add_subcommand("connect", "Connect two checkpoints with a bead string");
    connect->add_option("a", ckpt_a, "First checkpoint")->required();
    connect->add_option("b", ckpt_b, "Second checkpoint")->required();
    connect->add_option("--beads", file_opt, "Bead list path (default <output_dir>/beads.json)");

    auto* sweep = app.add_subcommand("sweep", "Threshold sweep of normalized length and bead count");
    sweep->add_option("--csv", file_opt, "CSV path (default <output_dir>/sweep.csv)");

    std::string beads_in;
    int k = 2;
    auto* project = app.add_subcommand("project", "PCA projection of a bead list");
    project->add_option("beads", beads_in, "Bead list file")->required();
    project->add_option("-k", k, "Number of components")->check(CLI::PositiveNumber);
    project->add_option("--csv", file_opt, "CSV path (default <output_dir>/projection.csv)");

    auto* gen = app.add_subcommand("gen-data", "Write the configured task as CSV");
    gen->add_option("--csv", file_opt, "CSV path (default <output_dir>/data.csv)");

    VerifyOptions vo;
    auto* ver = app.add_subcommand("verify", "Run an invariant suite");
    ver->add_option("kind", vo.kind, "prop3 | linpath | ridge | covering | prune")
        ->required()
        ->check(CLI::IsMember({"prop3", "linpath", "ridge", "covering", "prune"}));
    ver->add_option("--pairs", vo.pairs, "Number of random pairs")->check(CLI::PositiveNumber);
    ver->add_option("--samples", vo.samples, "Monte-Carlo samples per pair (prop3)")->check(CLI::PositiveNumber);
    ver->add_option("--depth", vo.depth, "Number of layers (linpath)");
    ver->add_option("--kappa", vo.kappa, "Penalty weight (ridge)");
    ver->add_option("--dims", vo.dims, "Sphere dimensions (covering)");
    ver->add_option("--eps", vo.epsilons, "Net radii (covering)");
    ver->add_option("--csv", vo.csv, "Report path (default <output_dir>/verify_<kind>.csv)");

    const auto fail = [&](const std::string& msg) {
        err << "error: " << msg << '\n';
        emit(out, {{"error", msg}, {"exit_code", kExitUsage}});
        return kExitUsage;
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return fail(e.what());
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const std::string& s : sets) apply_assignment(cfg, s);
        if (const char* env = std::getenv("LEVELSET_SEED"); env != nullptr && *env != '\0') {
            set_config_value(cfg, "seed", env);
        }
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (threads > 0) set_max_threads(threads);

        if (*train) return cmd_train(cfg, file_opt, out, err);
        if (*connect) return cmd_connect(cfg, ckpt_a, ckpt_b, file_opt, out);
        if (*sweep) return cmd_sweep(cfg, file_opt, out, err);
        if (*project) return cmd_project(cfg, beads_in, k, file_opt, out);
        if (*gen) return cmd_gen_data(cfg, file_opt, out);
        return cmd_verify(cfg, vo, out, err);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

}  // namespace levelset::cli

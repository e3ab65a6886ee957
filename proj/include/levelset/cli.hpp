#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "levelset/dataset.hpp"
#include "levelset/netcore.hpp"
#include "levelset/strings.hpp"

namespace levelset::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitVerifyFailed = 3;

/// Bad configuration key or value. The message names the key.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class TaskKind { poly2, poly3, mixture, permutation, relu_teacher, csv };
enum class ConnectMethod { greedy, cdss };

/// Everything a subcommand needs. Serialized as flat `dotted.key = value`
/// lines; lists are comma separated, doubles use 17 significant digits.
struct ExperimentConfig {
    TaskKind task_kind = TaskKind::poly2;
    long task_samples = 128;
    std::uint64_t task_seed = 1;
    double task_mu = 1.0;
    double task_sigma = 0.1;
    double task_pi = 1.0;
    int task_dim = 3;
    int task_units = 4;
    std::string task_path;
    bool task_bias_column = false;

    std::vector<int> arch_sizes{1, 4, 4, 1};
    Activation arch_activation = Activation::sigmoid;
    bool arch_bias = true;

    double loss_kappa = 0.0;
    RegKind loss_reg = RegKind::none;

    OptimizerKind train_optimizer = OptimizerKind::adam;
    double train_learning_rate = 0.02;
    int train_batch_size = 32;
    long train_max_steps = 100000;
    double train_target_loss = 0.01;

    ConnectMethod dss_method = ConnectMethod::greedy;
    double dss_L0 = 0.01;
    double dss_alpha_train = 0.8;
    strings::TStarMode dss_tstar_mode = strings::TStarMode::local_max;
    int dss_interp_samples = 33;
    int dss_max_depth = 10;

    double cdss_zeta = 0.0;
    double cdss_kappa_h = 0.0;
    int cdss_steps_per_round = 50;
    strings::InsertRule cdss_insert_rule = strings::InsertRule::at_max;
    std::vector<double> cdss_schedule;
    int cdss_max_rounds = 200;
    int cdss_max_beads = 64;

    std::vector<double> sweep_thresholds;
    int sweep_pairs = 5;

    std::string output_dir = ".";
    std::uint64_t seed = 0;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Every key in file order.
[[nodiscard]] std::vector<std::string> config_keys();

/// Throws ConfigError for an unknown key or an unparsable value.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
[[nodiscard]] std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);

/// '#' starts a comment; blank lines are ignored; later keys override earlier ones.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text);
[[nodiscard]] std::string format_config(const ExperimentConfig& cfg);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

[[nodiscard]] Dataset make_dataset(const ExperimentConfig& cfg);
[[nodiscard]] ArchSpec arch_of(const ExperimentConfig& cfg);
[[nodiscard]] LossSpec loss_of(const ExperimentConfig& cfg);
[[nodiscard]] TrainConfig train_of(const ExperimentConfig& cfg);
[[nodiscard]] strings::DssConfig dss_of(const ExperimentConfig& cfg);
[[nodiscard]] strings::CdssConfig cdss_of(const ExperimentConfig& cfg);

/// Entry point of the `levelset` tool; args excludes the program name.
/// Returns the process exit code. The last line written to `out` is a JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace levelset::cli

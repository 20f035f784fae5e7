#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eocl/learners.hpp"
#include "eocl/pooling.hpp"
#include "eocl/protocol.hpp"

namespace eocl {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

enum class ReportFormat { Csv, Json };

/// The resolved form of a `run` config document.
struct ExperimentConfig {
  std::filesystem::path manifest;
  std::vector<PoolerConfig> poolers;
  std::vector<LearnerConfig> learners;
  StreamKind stream = StreamKind::ClassIid;
  std::size_t num_orderings = 5;
  std::uint64_t seed = 0;
  std::string train_split = "train";
  std::string eval_split = "test";
  /// Empty writes the report to stdout.
  std::filesystem::path output;
  ReportFormat format = ReportFormat::Csv;
  std::size_t jobs = 1;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Unknown keys and unknown pooler or learner names throw ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir = {});
/// Canonical JSON of a resolved config; parse_experiment_config round-trips it.
std::string experiment_config_to_json(const ExperimentConfig& config);

/// Pooler and learner entries may be a bare name ("TAP") or an object with a
/// "kind" field plus parameter overrides.
PoolerConfig parse_pooler_config(const std::string& json_text);
LearnerConfig parse_learner_config(const std::string& json_text);

/// Renders the report of a finished suite, provenance included.
std::string render_report(const ExperimentConfig& config, const SuiteReport& report);

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

/// Entry point shared by the executable and the tests; `args` excludes the
/// program name. Returns an ExitCode. An empty `env` reads the process
/// environment.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = {});

}  // namespace eocl

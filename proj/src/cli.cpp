#include "eocl/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "eocl/error.hpp"
#include "eocl/featio.hpp"
#include "eocl/metrics.hpp"
#include "eocl/synthetic.hpp"

namespace eocl {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& into) {
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      into = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
  }
}

PoolerConfig pooler_from(const json& j) {
  PoolerConfig c;
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object()) {
    reject_unknown_keys(j,
                        {"kind", "order", "p", "alpha", "k_frac", "window", "newton_iters",
                         "sigma_floor", "rng_seed", "t_cap"},
                        "pooler config");
    if (!j.contains("kind")) throw ConfigError("pooler config needs a 'kind'");
    read_field(j, "kind", name);
    read_field(j, "order", c.order);
    read_field(j, "p", c.p);
    read_field(j, "alpha", c.alpha);
    read_field(j, "k_frac", c.k_frac);
    read_field(j, "window", c.window);
    read_field(j, "newton_iters", c.newton_iters);
    read_field(j, "sigma_floor", c.sigma_floor);
    read_field(j, "rng_seed", c.rng_seed);
    read_field(j, "t_cap", c.t_cap);
  } else {
    throw ConfigError("pooler entry must be a name or an object");
  }
  const auto kind = pooler_kind_from_string(name);
  if (!kind) throw ConfigError("unknown pooler '" + name + "'");
  c.kind = *kind;
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("pooler ") + c.tag() + ": " + e.what());
  }
  return c;
}

LearnerConfig learner_from(const json& j) {
  LearnerConfig c;
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object()) {
    reject_unknown_keys(j,
                        {"kind", "shrinkage", "learning_rate", "buffer_capacity", "cbcl_distance",
                         "variance_floor", "seed"},
                        "learner config");
    if (!j.contains("kind")) throw ConfigError("learner config needs a 'kind'");
    read_field(j, "kind", name);
    read_field(j, "shrinkage", c.shrinkage);
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "buffer_capacity", c.buffer_capacity);
    if (auto it = j.find("cbcl_distance"); it != j.end()) {
      if (it->is_string() && (*it == "inf" || *it == "infinity")) {
        c.cbcl_distance = std::numeric_limits<double>::infinity();
      } else if (it->is_number()) {
        c.cbcl_distance = it->get<double>();
      } else {
        throw ConfigError("field 'cbcl_distance' must be a number or \"inf\"");
      }
    }
    read_field(j, "variance_floor", c.variance_floor);
    read_field(j, "seed", c.seed);
  } else {
    throw ConfigError("learner entry must be a name or an object");
  }
  const auto kind = learner_kind_from_string(name);
  if (!kind || *kind == LearnerKind::External) throw ConfigError("unknown learner '" + name + "'");
  c.kind = *kind;
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("learner " + c.tag() + ": " + e.what());
  }
  return c;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

ordered_json pooler_json(const PoolerConfig& c) {
  return ordered_json{{"kind", std::string(to_string(c.kind))},
                      {"order", c.order},
                      {"p", c.p},
                      {"alpha", c.alpha},
                      {"k_frac", c.k_frac},
                      {"window", c.window},
                      {"newton_iters", c.newton_iters},
                      {"sigma_floor", c.sigma_floor},
                      {"rng_seed", c.rng_seed},
                      {"t_cap", c.t_cap}};
}

ordered_json learner_json(const LearnerConfig& c) {
  ordered_json j{{"kind", std::string(to_string(c.kind))},
                 {"shrinkage", c.shrinkage},
                 {"learning_rate", c.learning_rate},
                 {"buffer_capacity", c.buffer_capacity}};
  if (std::isinf(c.cbcl_distance)) {
    j["cbcl_distance"] = "inf";
  } else {
    j["cbcl_distance"] = c.cbcl_distance;
  }
  j["variance_floor"] = c.variance_floor;
  j["seed"] = c.seed;
  return j;
}

std::optional<StreamKind> stream_from_string(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "class_iid") return StreamKind::ClassIid;
  if (s == "iid") return StreamKind::Iid;
  return std::nullopt;
}

std::optional<ReportFormat> format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!text.empty() && text.front() != '-') v = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw ConfigError(source + " must be an unsigned integer, got '" + text + "'");
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const fs::path& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string with_csv_provenance(const ordered_json& provenance, const std::string& body) {
  std::string s = "# eocl " + std::string(kVersion) + "\n";
  s += "# provenance: " + provenance.dump() + "\n";
  return s + body;
}

// Shared state of one CLI invocation.
struct Context {
  std::ostream& out;
  std::ostream& err;
  EnvLookup env;

  std::optional<std::uint64_t> env_seed() const {
    auto v = env("EOCL_SEED");
    if (!v || v->empty()) return std::nullopt;
    return parse_seed(*v, "EOCL_SEED");
  }
};

// gen-synth -----------------------------------------------------------------

struct GenSynthArgs {
  SyntheticSpec spec;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "synthetic";
};

int cmd_gen_synth(const Context& ctx, GenSynthArgs& a) {
  if (!a.seed) {
    if (auto s = ctx.env_seed()) a.seed = s;
  }
  if (a.seed) a.spec.seed = *a.seed;
  try {
    validate(a.spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto manifest = write_synthetic(a.spec, a.out_dir);
  ctx.out << manifest.string() << "\n";
  return kExitOk;
}

// run -----------------------------------------------------------------------

struct RunArgs {
  std::string config_path;
  std::optional<std::string> manifest;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<std::string> stream;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> num_orderings;
};

int cmd_run(const Context& ctx, const RunArgs& a) {
  const fs::path config_path(a.config_path);
  ExperimentConfig cfg =
      parse_experiment_config(read_text(config_path), config_path.parent_path());
  if (auto s = ctx.env_seed()) cfg.seed = *s;
  if (a.seed) cfg.seed = *a.seed;
  if (a.manifest) cfg.manifest = *a.manifest;
  if (a.output) cfg.output = *a.output;
  if (a.format) {
    auto f = format_from_string(*a.format);
    if (!f) throw ConfigError("unknown report format '" + *a.format + "'");
    cfg.format = *f;
  }
  if (a.stream) {
    auto s = stream_from_string(*a.stream);
    if (!s) throw ConfigError("unknown stream kind '" + *a.stream + "'");
    cfg.stream = *s;
  }
  if (a.jobs) cfg.jobs = *a.jobs;
  if (a.num_orderings) cfg.num_orderings = *a.num_orderings;
  if (cfg.num_orderings < 1) throw ConfigError("num_orderings must be >= 1");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");

  auto dataset = std::make_shared<const Dataset>(load_dataset(cfg.manifest));

  std::vector<RunPlan> plans;
  for (const auto& pooler : cfg.poolers) {
    for (const auto& learner : cfg.learners) {
      RunPlan plan;
      plan.dataset = dataset;
      plan.pooler = pooler;
      plan.learner = learner;
      plan.order = make_order(cfg.stream, dataset->num_classes(), cfg.seed);
      plan.train_split = cfg.train_split;
      plan.eval_split = cfg.eval_split;
      plan.num_orderings = cfg.num_orderings;
      validate(plan);
      plans.push_back(std::move(plan));
    }
  }

  const SuiteReport report = run_suite(plans, cfg.jobs);
  write_output(cfg.output, render_report(cfg, report), ctx.out);
  for (const auto& f : report.failures) {
    const auto& p = plans[f.plan_index];
    ctx.err << "run failed: " << p.learner.tag() << " / " << p.pooler.tag() << " ordering "
            << f.ordering << ": " << f.message << "\n";
  }
  return report.failures.empty() ? kExitOk : kExitRuntime;
}

// inspect -------------------------------------------------------------------

struct InspectArgs {
  std::string path;
  std::size_t bins = 10;
  bool as_json = false;
};

int cmd_inspect(const Context& ctx, const InspectArgs& a) {
  if (!fs::exists(a.path)) throw ConfigError("no such file " + a.path);
  if (a.bins < 1) throw ConfigError("--bins must be >= 1");
  const auto bytes = read_file_bytes(a.path);
  const auto header = read_container_header(bytes);
  const auto records = decode_container(bytes);

  std::size_t t_min = 0;
  std::size_t t_max = 0;
  std::map<Label, std::size_t> labels;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t t = records[i].sequence.frames();
    t_min = i == 0 ? t : std::min(t_min, t);
    t_max = i == 0 ? t : std::max(t_max, t);
    ++labels[records[i].label];
  }
  // Equal-width integer bins over [t_min, t_max].
  const std::size_t span = t_max - t_min + 1;
  const std::size_t width = (span + a.bins - 1) / a.bins;
  const std::size_t bins = records.empty() ? 0 : (span + width - 1) / width;
  std::vector<std::size_t> hist(bins, 0);
  for (const auto& r : records) ++hist[(r.sequence.frames() - t_min) / width];

  if (a.as_json) {
    ordered_json j;
    j["version"] = kVersion;
    j["path"] = a.path;
    j["records"] = records.size();
    j["d"] = header.d;
    ordered_json th = ordered_json::array();
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t lo = t_min + b * width;
      th.push_back({{"t_lo", lo}, {"t_hi", std::min(t_max, lo + width - 1)}, {"count", hist[b]}});
    }
    j["t_histogram"] = th;
    ordered_json lh = ordered_json::array();
    for (const auto& [label, n] : labels) lh.push_back({{"label", label}, {"count", n}});
    j["label_histogram"] = lh;
    ctx.out << j.dump(2) << "\n";
    return kExitOk;
  }
  ctx.out << "records: " << records.size() << "\n";
  ctx.out << "d: " << header.d << "\n";
  if (!records.empty()) ctx.out << "t range: " << t_min << ".." << t_max << "\n";
  ctx.out << "t histogram:\n";
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = t_min + b * width;
    ctx.out << "  " << lo << ".." << std::min(t_max, lo + width - 1) << ": " << hist[b] << "\n";
  }
  ctx.out << "label histogram:\n";
  for (const auto& [label, n] : labels) ctx.out << "  " << label << ": " << n << "\n";
  return kExitOk;
}

// analyze-moments -----------------------------------------------------------

struct MomentArgs {
  std::string manifest;
  std::string split = "test";
  int order = 5;
  double sigma_floor = 1e-6;
  std::string output;
  std::string format = "csv";
};

int cmd_analyze_moments(const Context& ctx, const MomentArgs& a) {
  auto fmt = format_from_string(a.format);
  if (!fmt) throw ConfigError("unknown report format '" + a.format + "'");
  if (a.order < 1) throw ConfigError("--order must be >= 1");
  const Dataset ds = load_dataset(a.manifest);
  if (ds.split(a.split).empty()) throw ConfigError("split '" + a.split + "' has no records");
  std::map<Label, std::vector<Eigen::VectorXd>> features;
  for (const auto& r : ds.split(a.split))
    features[r.label].push_back(tap_pool(r.sequence, a.order, a.sigma_floor));
  const auto sep = moment_separation(features, ds.manifest.d, a.order);

  ordered_json provenance{{"version", kVersion},
                          {"command", "analyze-moments"},
                          {"manifest", a.manifest},
                          {"split", a.split},
                          {"order", a.order},
                          {"sigma_floor", a.sigma_floor}};
  std::string text;
  if (*fmt == ReportFormat::Json) {
    ordered_json j{{"provenance", provenance}, {"orders", ordered_json::array()}};
    for (const auto& o : sep.orders)
      j["orders"].push_back(
          {{"order", o.order}, {"mean_w1", o.mean}, {"std_w1", o.stddev}, {"pairs", o.pairs}});
    text = j.dump(2) + "\n";
  } else {
    std::ostringstream ss;
    ss << "order,mean_w1,std_w1,pairs\n";
    ss << std::fixed << std::setprecision(6);
    for (const auto& o : sep.orders)
      ss << o.order << "," << o.mean << "," << o.stddev << "," << o.pairs << "\n";
    text = with_csv_provenance(provenance, ss.str());
  }
  write_output(a.output, text, ctx.out);
  return kExitOk;
}

}  // namespace

// Config ----------------------------------------------------------------------

PoolerConfig parse_pooler_config(const std::string& json_text) {
  return pooler_from(parse_json(json_text, "pooler config"));
}

LearnerConfig parse_learner_config(const std::string& json_text) {
  return learner_from(parse_json(json_text, "learner config"));
}

ExperimentConfig parse_experiment_config(const std::string& json_text, const fs::path& base_dir) {
  const json j = parse_json(json_text, "config");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(j,
                      {"manifest", "poolers", "learners", "stream", "num_orderings", "seed",
                       "train_split", "eval_split", "output", "format", "jobs"},
                      "config");
  ExperimentConfig c;
  std::string manifest;
  if (!j.contains("manifest")) throw ConfigError("config needs a 'manifest'");
  read_field(j, "manifest", manifest);
  c.manifest = fs::path(manifest).is_absolute() ? fs::path(manifest) : base_dir / manifest;

  for (const char* key : {"poolers", "learners"}) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty())
      throw ConfigError(std::string("config needs a non-empty '") + key + "' list");
  }
  for (const auto& p : j["poolers"]) c.poolers.push_back(pooler_from(p));
  for (const auto& l : j["learners"]) c.learners.push_back(learner_from(l));

  if (j.contains("stream")) {
    std::string s;
    read_field(j, "stream", s);
    auto kind = stream_from_string(s);
    if (!kind) throw ConfigError("unknown stream kind '" + s + "'");
    c.stream = *kind;
  }
  read_field(j, "num_orderings", c.num_orderings);
  if (c.num_orderings < 1) throw ConfigError("num_orderings must be >= 1");
  read_field(j, "seed", c.seed);
  read_field(j, "train_split", c.train_split);
  read_field(j, "eval_split", c.eval_split);
  if (j.contains("output")) {
    std::string out;
    read_field(j, "output", out);
    c.output = out.empty() || fs::path(out).is_absolute() ? fs::path(out) : base_dir / out;
  }
  if (j.contains("format")) {
    std::string f;
    read_field(j, "format", f);
    auto fmt = format_from_string(f);
    if (!fmt) throw ConfigError("unknown report format '" + f + "'");
    c.format = *fmt;
  }
  read_field(j, "jobs", c.jobs);
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["manifest"] = c.manifest.string();
  j["poolers"] = ordered_json::array();
  for (const auto& p : c.poolers) j["poolers"].push_back(pooler_json(p));
  j["learners"] = ordered_json::array();
  for (const auto& l : c.learners) j["learners"].push_back(learner_json(l));
  j["stream"] = std::string(to_string(c.stream));
  j["num_orderings"] = c.num_orderings;
  j["seed"] = c.seed;
  j["train_split"] = c.train_split;
  j["eval_split"] = c.eval_split;
  j["output"] = c.output.string();
  j["format"] = c.format == ReportFormat::Csv ? "csv" : "json";
  j["jobs"] = c.jobs;
  return j.dump();
}

std::string render_report(const ExperimentConfig& config, const SuiteReport& report) {
  // jobs does not change the rows, so it stays out of the provenance.
  ordered_json cfg = ordered_json::parse(experiment_config_to_json(config));
  cfg.erase("jobs");
  ordered_json provenance{{"version", kVersion}, {"command", "run"}, {"config", cfg}};
  if (config.format == ReportFormat::Json)
    return rows_to_json(report.rows, report.aggregates, provenance.dump()) + "\n";
  return with_csv_provenance(provenance, rows_to_csv(report.rows, report.aggregates));
}

// Entry point -----------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env) {
  Context ctx{out, err, env};
  if (!ctx.env) {
    ctx.env = [](const std::string& name) -> std::optional<std::string> {
      const char* v = std::getenv(name.c_str());
      return v ? std::optional<std::string>(v) : std::nullopt;
    };
  }

  CLI::App app{"Online continual learning over pooled frame features", "eocl"};
  app.set_version_flag("--version", std::string("eocl ") + kVersion);
  app.require_subcommand(1);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Write a synthetic dataset (manifest + containers)");
  gen_cmd->add_option("--classes", gen.spec.num_classes, "Number of classes")->required();
  gen_cmd->add_option("--d", gen.spec.d, "Feature dimension")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed (overrides EOCL_SEED)");
  gen_cmd->add_option("--t-min", gen.spec.t_min, "Shortest sequence")->capture_default_str();
  gen_cmd->add_option("--t-max", gen.spec.t_max, "Longest sequence")->capture_default_str();
  gen_cmd->add_option("--train-per-class", gen.spec.train_per_class)->capture_default_str();
  gen_cmd->add_option("--dev-per-class", gen.spec.dev_per_class)->capture_default_str();
  gen_cmd->add_option("--test-per-class", gen.spec.test_per_class)->capture_default_str();
  gen_cmd->add_option("--moment-contrast", gen.spec.moment_contrast,
                      "0: classes differ in mean only, 1: in higher moments only")
      ->capture_default_str();
  gen_cmd->add_option("--mean-separation", gen.spec.mean_separation)->capture_default_str();
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->capture_default_str();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a pooler x learner x ordering grid");
  run_cmd->add_option("config", run.config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--manifest", run.manifest, "Override the config's manifest");
  run_cmd->add_option("--output", run.output, "Report path; '' writes to stdout");
  run_cmd->add_option("--format", run.format, "csv or json");
  run_cmd->add_option("--stream", run.stream, "class_iid or iid");
  run_cmd->add_option("--seed", run.seed, "Base seed (overrides EOCL_SEED)");
  run_cmd->add_option("--jobs", run.jobs, "Parallel grid cells");
  run_cmd->add_option("--num-orderings", run.num_orderings, "Orderings per grid cell");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize an EOF1 container");
  inspect_cmd->add_option("path", inspect.path, "Container file")->required();
  inspect_cmd->add_option("--bins", inspect.bins, "Sequence-length histogram bins")
      ->capture_default_str();
  inspect_cmd->add_flag("--json", inspect.as_json, "Emit JSON");

  MomentArgs moments;
  auto* moments_cmd =
      app.add_subcommand("analyze-moments", "Pairwise W1 between classes per TAP moment order");
  moments_cmd->add_option("--manifest", moments.manifest, "Dataset manifest")->required();
  moments_cmd->add_option("--split", moments.split)->capture_default_str();
  moments_cmd->add_option("--order", moments.order, "Number of moments R")->capture_default_str();
  moments_cmd->add_option("--sigma-floor", moments.sigma_floor)->capture_default_str();
  moments_cmd->add_option("--output", moments.output, "Report path; empty writes to stdout");
  moments_cmd->add_option("--format", moments.format, "csv or json")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_synth(ctx, gen);
    if (run_cmd->parsed()) return cmd_run(ctx, run);
    if (inspect_cmd->parsed()) return cmd_inspect(ctx, inspect);
    if (moments_cmd->parsed()) return cmd_analyze_moments(ctx, moments);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace eocl

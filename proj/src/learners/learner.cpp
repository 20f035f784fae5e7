#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "eocl/error.hpp"
#include "eocl/learners.hpp"
#include "serial.hpp"

namespace eocl {

namespace {

constexpr std::pair<LearnerKind, std::string_view> kNames[] = {
    {LearnerKind::Ft, "FT"},       {LearnerKind::Prcp, "PRCP"}, {LearnerKind::Ncm, "NCM"},
    {LearnerKind::Cbcl, "CBCL"},   {LearnerKind::Sovr, "SOVR"}, {LearnerKind::Snb, "SNB"},
    {LearnerKind::Slda, "SLDA"},   {LearnerKind::Sqda, "SQDA"}, {LearnerKind::Icarl, "ICARL"},
    {LearnerKind::External, "EXTERNAL"},
};

constexpr char kMagic[4] = {'E', 'O', 'L', 'S'};
constexpr std::uint16_t kStateVersion = 1;

}  // namespace

std::string_view to_string(LearnerKind kind) {
  for (const auto& [k, n] : kNames)
    if (k == kind) return n;
  return "UNKNOWN";
}

std::optional<LearnerKind> learner_kind_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto& [k, n] : kNames)
    if (n == upper && k != LearnerKind::External) return k;
  return std::nullopt;
}

void validate(const LearnerConfig& c) {
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(std::string(to_string(c.kind)) + ": " + msg);
  };
  if (!(c.shrinkage > 0.0 && c.shrinkage < 1.0)) fail("shrinkage must lie in (0, 1)");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
    fail("learning_rate must be finite and >= 0");
  if (c.kind == LearnerKind::Icarl && c.buffer_capacity < 1) fail("buffer_capacity must be >= 1");
  if (!(c.cbcl_distance >= 0.0)) fail("cbcl_distance must be >= 0");
  if (!(c.variance_floor > 0.0)) fail("variance_floor must be > 0");
}

Learner::Learner(LearnerConfig config, std::size_t dim) : config_(std::move(config)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("learner dimension must be >= 1");
  validate(config_);
}

std::optional<std::size_t> Learner::find_slot(Label y) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), y);
  if (it == classes_.end() || *it != y) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

void Learner::fit_one(const Eigen::VectorXd& x, Label y) {
  if (static_cast<std::size_t>(x.size()) != dim_)
    throw std::invalid_argument("fit_one: input has dim " + std::to_string(x.size()) +
                                ", learner expects " + std::to_string(dim_));
  if (!x.allFinite()) throw std::invalid_argument("fit_one: non-finite input");
  auto it = std::lower_bound(classes_.begin(), classes_.end(), y);
  const auto slot = static_cast<std::size_t>(it - classes_.begin());
  const bool is_new = it == classes_.end() || *it != y;
  if (is_new) classes_.insert(it, y);
  do_fit(x, slot, is_new);
  ++samples_seen_;
}

Eigen::VectorXd Learner::scores(const Eigen::VectorXd& x) const {
  if (classes_.empty()) throw std::logic_error("predict: no classes seen");
  if (static_cast<std::size_t>(x.size()) != dim_)
    throw std::invalid_argument("predict: input has dim " + std::to_string(x.size()) +
                                ", learner expects " + std::to_string(dim_));
  return do_scores(x);
}

Label Learner::predict(const Eigen::VectorXd& x) const { return classes_[argmax(scores(x))]; }

std::size_t argmax(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

void running_mean_update(Eigen::VectorXd& mean, std::uint64_t count, const Eigen::VectorXd& x) {
  const double c = static_cast<double>(count);
  mean = (c * mean + x) / (c + 1.0);
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& config, std::size_t dim) {
  switch (config.kind) {
    case LearnerKind::Ft: return std::make_unique<LinearHeadLearner>(config, dim);
    case LearnerKind::Prcp: return std::make_unique<PerceptronLearner>(config, dim);
    case LearnerKind::Ncm: return std::make_unique<NcmLearner>(config, dim);
    case LearnerKind::Cbcl: return std::make_unique<CbclLearner>(config, dim);
    case LearnerKind::Sovr: return std::make_unique<SovrLearner>(config, dim);
    case LearnerKind::Snb: return std::make_unique<SnbLearner>(config, dim);
    case LearnerKind::Slda: return std::make_unique<SldaLearner>(config, dim);
    case LearnerKind::Sqda: return std::make_unique<SqdaLearner>(config, dim);
    case LearnerKind::Icarl: return std::make_unique<IcarlLearner>(config, dim);
    case LearnerKind::External: break;
  }
  throw std::invalid_argument("make_learner: external learners cannot be constructed by kind");
}

std::vector<std::uint8_t> serialize_learner(const Learner& learner) {
  if (learner.kind() == LearnerKind::External)
    throw std::invalid_argument("serialize_learner: external learner kind");
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kStateVersion);
  w.u8(static_cast<std::uint8_t>(learner.kind()));
  const auto& c = learner.config();
  w.f64(c.shrinkage);
  w.f64(c.learning_rate);
  w.u64(c.buffer_capacity);
  w.f64(c.cbcl_distance);
  w.f64(c.variance_floor);
  w.u64(c.seed);
  w.u64(learner.dim());
  w.u64(learner.samples_seen());
  w.u64(learner.classes().size());
  for (Label y : learner.classes()) w.u32(y);
  learner.write_state(w);
  return std::move(w).take();
}

std::unique_ptr<Learner> deserialize_learner(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad learner state magic", 0);
  ByteReader r(bytes.subspan(4));
  const auto version = r.u16();
  if (version != kStateVersion)
    throw FormatError("learner state version " + std::to_string(version) + " is not supported", 4);
  const auto kind_raw = r.u8();
  if (kind_raw >= static_cast<std::uint8_t>(LearnerKind::External))
    throw FormatError("unknown learner kind " + std::to_string(kind_raw), 6);
  LearnerConfig c;
  c.kind = static_cast<LearnerKind>(kind_raw);
  c.shrinkage = r.f64();
  c.learning_rate = r.f64();
  c.buffer_capacity = r.u64();
  c.cbcl_distance = r.f64();
  c.variance_floor = r.f64();
  c.seed = r.u64();
  const std::uint64_t dim = r.u64();
  const std::uint64_t n = r.u64();
  const std::uint64_t k = r.u64();
  if (dim == 0 || dim > (std::uint64_t{1} << 24)) throw FormatError("implausible dimension", 4 + r.offset());
  r.require(k * 4);
  std::vector<Label> classes(k);
  for (auto& y : classes) y = r.u32();
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end())
    throw FormatError("class labels are not strictly ascending", 4 + r.offset());

  std::unique_ptr<Learner> learner;
  try {
    learner = make_learner(c, dim);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid stored config: ") + e.what(), 4 + r.offset());
  }
  learner->classes_ = std::move(classes);
  learner->samples_seen_ = n;
  try {
    learner->read_state(r);
  } catch (const FormatError& e) {
    throw FormatError(std::string("corrupt learner payload: ") + e.what(), 4 + r.offset());
  }
  if (!r.at_end()) throw FormatError("trailing bytes after learner state", 4 + r.offset());
  return learner;
}

}  // namespace eocl

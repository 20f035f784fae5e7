#include "eocl/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "eocl/rng.hpp"

namespace eocl {

namespace fs = std::filesystem;

namespace {

double signed_power(double v, double exponent) {
  return std::copysign(std::pow(std::abs(v), exponent), v);
}

struct ClassSignature {
  Eigen::VectorXd mean;
  Eigen::VectorXd exponent;
};

struct Generator {
  const SyntheticSpec& spec;
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
  std::vector<ClassSignature> classes;
  // Per class and dim: standardization of the innovation transform.
  std::vector<std::vector<ShapeMoments>> shapes;

  explicit Generator(const SyntheticSpec& s) : spec(s) {
    Rng global(derive_seed(s.seed, 0xD5u));
    offset.resize(s.d);
    scale.resize(s.d);
    const double log_lo = std::log(s.noise_scale_min);
    const double log_hi = std::log(s.noise_scale_max);
    for (std::uint32_t j = 0; j < s.d; ++j) {
      offset[j] = s.common_offset * global.uniform(0.5, 1.5);
      scale[j] = std::exp(global.uniform(log_lo, log_hi));
    }
    for (std::uint32_t c = 0; c < s.num_classes; ++c) {
      Rng rng(derive_seed(s.seed, 0xC1A55u, c));
      ClassSignature sig{Eigen::VectorXd(s.d), Eigen::VectorXd(s.d)};
      std::vector<ShapeMoments> sm;
      for (std::uint32_t j = 0; j < s.d; ++j) {
        sig.mean[j] = s.mean_separation * rng.normal();
        const double full = rng.uniform(s.shape_exponent_min, s.shape_exponent_max);
        sig.exponent[j] = 1.0 + s.moment_contrast * (full - 1.0);
        sm.push_back(signed_power_moments(sig.exponent[j], s.shape_offset));
      }
      classes.push_back(std::move(sig));
      shapes.push_back(std::move(sm));
    }
  }

  FeatureSequence utterance(std::uint32_t c, Rng& rng) const {
    const auto t = static_cast<Eigen::Index>(spec.t_min + rng.index(spec.t_max - spec.t_min + 1));
    const double rho = spec.ar_coeff;
    const double innov = std::sqrt(1.0 - rho * rho);
    const auto& sig = classes[c];
    Eigen::MatrixXd m(t, spec.d);
    for (std::uint32_t j = 0; j < spec.d; ++j) {
      const double u = spec.utterance_jitter * rng.normal();
      const double level = offset[j] + (1.0 - spec.moment_contrast) * sig.mean[j];
      const auto& sh = shapes[c][j];
      double a = 0.0;
      for (Eigen::Index i = 0; i < t; ++i) {
        const double e =
            (signed_power(rng.normal() + spec.shape_offset, sig.exponent[j]) - sh.mean) / sh.stddev;
        a = i == 0 ? e : rho * a + innov * e;
        const double v = level + scale[j] * (u + a);
        m(i, j) = static_cast<double>(static_cast<float>(v));
      }
    }
    return FeatureSequence(std::move(m));
  }
};

}  // namespace

ShapeMoments signed_power_moments(double exponent, double offset) {
  // Composite Simpson over [-12, 12] against the standard normal density.
  constexpr int n = 24000;
  constexpr double lo = -12.0;
  constexpr double hi = 12.0;
  const double h = (hi - lo) / n;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + h * i;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double pdf = norm * std::exp(-0.5 * z * z);
    const double v = signed_power(z + offset, exponent);
    m1 += w * pdf * v;
    m2 += w * pdf * v * v;
  }
  m1 *= h / 3.0;
  m2 *= h / 3.0;
  return {m1, std::sqrt(std::max(m2 - m1 * m1, 0.0))};
}

void validate(const SyntheticSpec& s) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synthetic spec: " + msg); };
  if (s.num_classes < 1) fail("num_classes must be >= 1");
  if (s.d < 1) fail("d must be >= 1");
  if (s.t_min < 1 || s.t_max < s.t_min) fail("t range must satisfy 1 <= t_min <= t_max");
  if (!(s.moment_contrast >= 0.0 && s.moment_contrast <= 1.0))
    fail("moment_contrast must lie in [0, 1]");
  if (!(s.ar_coeff > -1.0 && s.ar_coeff < 1.0)) fail("ar_coeff must lie in (-1, 1)");
  if (!(s.noise_scale_min > 0.0 && s.noise_scale_max >= s.noise_scale_min))
    fail("noise scales must satisfy 0 < min <= max");
  if (!(s.shape_exponent_min > 0.0 && s.shape_exponent_max >= s.shape_exponent_min))
    fail("shape exponents must satisfy 0 < min <= max");
  if (!(s.utterance_jitter >= 0.0)) fail("utterance_jitter must be >= 0");
  if (!std::isfinite(s.mean_separation) || !std::isfinite(s.common_offset) ||
      !std::isfinite(s.shape_offset))
    fail("non-finite parameter");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const Generator gen(spec);

  Dataset ds;
  ds.name = "synthetic";
  ds.manifest.d = spec.d;
  ds.manifest.backbone_tag = "synthetic";
  ds.manifest.backbone_param_count = 0;
  for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
    std::string name = std::to_string(c);
    name.insert(0, name.size() < 2 ? 2 - name.size() : 0, '0');
    ds.manifest.class_names.push_back("class_" + name);
  }

  const std::pair<const char*, std::uint32_t> splits[] = {
      {"train", spec.train_per_class}, {"dev", spec.dev_per_class}, {"test", spec.test_per_class}};
  std::uint64_t split_id = 0;
  for (const auto& [name, per_class] : splits) {
    auto& records = ds.splits[name];
    records.reserve(std::size_t{per_class} * spec.num_classes);
    for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
      for (std::uint32_t i = 0; i < per_class; ++i) {
        // Each (split, class, index) owns a disjoint random substream.
        Rng rng(derive_seed(spec.seed, split_id + 1, c, i));
        records.push_back(Record{gen.utterance(c, rng), c});
      }
    }
    ds.manifest.splits[name] = {std::string(name) + ".eof1"};
    ++split_id;
  }
  return ds;
}

fs::path write_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
  const Dataset ds = generate_synthetic(spec);
  fs::create_directories(out_dir);
  for (const auto& [name, records] : ds.splits)
    write_container(records, out_dir / (name + ".eof1"), spec.d);
  const fs::path manifest = out_dir / "manifest.json";
  save_manifest(ds.manifest, manifest);
  return manifest;
}

}  // namespace eocl

#pragma once

#include <cstdint>
#include <filesystem>

#include "eocl/featio.hpp"

namespace eocl {

/// Parameters of the synthetic feature-stream generator.
///
/// Frames of class c, dim j follow
///   x[t] = offset_j + (1 - contrast) * mean_cj + scale_j * (u_j + a[t]),
///   a[t] = rho * a[t-1] + sqrt(1 - rho^2) * e[t],
/// with u_j a per-utterance offset and e[t] standardized innovations
/// sign(z + b) |z + b|^g (z standard normal) whose exponent
/// g = 1 + contrast * (g_cj - 1) is class-specific. At contrast 0 the
/// innovations are Gaussian for every class and classes differ only in mean;
/// at contrast 1 class means coincide and only the innovation shape differs.
struct SyntheticSpec {
  std::uint32_t num_classes = 5;
  std::uint32_t d = 16;
  std::uint32_t t_min = 50;
  std::uint32_t t_max = 100;
  std::uint32_t train_per_class = 200;
  std::uint32_t dev_per_class = 0;
  std::uint32_t test_per_class = 50;
  std::uint64_t seed = 0;
  double moment_contrast = 0.5;

  double mean_separation = 0.4;
  double common_offset = 3.0;
  double utterance_jitter = 0.5;
  double ar_coeff = 0.5;
  double noise_scale_min = 0.25;
  double noise_scale_max = 4.0;
  double shape_exponent_min = 0.5;
  double shape_exponent_max = 2.0;
  double shape_offset = 1.0;
};

/// Throws std::invalid_argument when a field is out of range.
void validate(const SyntheticSpec& spec);

/// Generates the dataset in memory. Values are already quantized to float32 so
/// that the in-memory and on-disk datasets are identical. Splits are named
/// "train", "dev" and "test". Pure function of `spec`.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Generates and writes manifest.json plus one container per split into
/// `out_dir` (created if needed). Returns the path of the manifest.
std::filesystem::path write_synthetic(const SyntheticSpec& spec,
                                      const std::filesystem::path& out_dir);

/// Mean and standard deviation of sign(z + b)|z + b|^g for z ~ N(0, 1).
struct ShapeMoments {
  double mean;
  double stddev;
};
ShapeMoments signed_power_moments(double exponent, double offset);

}  // namespace eocl

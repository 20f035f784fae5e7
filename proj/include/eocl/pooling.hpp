#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "eocl/featio.hpp"

namespace eocl {

enum class PoolerKind {
  Avg,
  Max,
  Mix,
  Stoch,
  Lp,
  Rap,
  AvgMax,
  Tsdp,
  Tstp,
  MaxW,
  Flat,
  IsqrtCov,
  Tap,
};

std::string_view to_string(PoolerKind kind);
std::optional<PoolerKind> pooler_kind_from_string(std::string_view name);

struct PoolerConfig {
  PoolerKind kind = PoolerKind::Tap;
  int order = 5;          // TAP: number of moments R
  int p = 2;              // LP
  double alpha = 0.5;     // MIX weight on MAX
  double k_frac = 0.1;    // RAP fraction of t_cap kept per dim
  int window = 2;         // MAXW half-width l
  int newton_iters = 5;   // ISQRT_COV
  double sigma_floor = 1e-6;
  std::uint64_t rng_seed = 0;  // STOCH
  int t_cap = 100;        // RAP / MAXW / FLAT

  /// Short identifier used in reports, e.g. "TAP(R=5)", "MIX(0.5)".
  std::string tag() const;
};

/// Throws std::invalid_argument for out-of-range parameters of the selected kind.
void validate(const PoolerConfig& config);

struct PooledVector {
  Eigen::VectorXd values;
  PoolerKind source;
};

// Individual operators. Outputs are laid out dim-block-wise unless noted.

/// [mean | std | standardized moments 3..R], each block of size d.
/// Dims whose population std is below `sigma_floor` emit 0 in blocks 2..R.
Eigen::VectorXd tap_pool(const FeatureSequence& g, int order, double sigma_floor = 1e-6);
Eigen::VectorXd avg_pool(const FeatureSequence& g);
Eigen::VectorXd max_pool(const FeatureSequence& g);
Eigen::VectorXd mix_pool(const FeatureSequence& g, double alpha);
/// Per dim, draws one frame from the min-shifted activation distribution.
Eigen::VectorXd stoch_pool(const FeatureSequence& g, std::uint64_t seed);
Eigen::VectorXd lp_pool(const FeatureSequence& g, int p);
/// Per dim, top ceil(k_frac * t_cap) activations in descending order, padded
/// with the dim's minimum when t is short.
Eigen::VectorXd rap_pool(const FeatureSequence& g, double k_frac, int t_cap);
Eigen::VectorXd avgmax_pool(const FeatureSequence& g);
Eigen::VectorXd tsdp_pool(const FeatureSequence& g, double sigma_floor = 1e-6);
Eigen::VectorXd tstp_pool(const FeatureSequence& g, double sigma_floor = 1e-6);
/// Per dim, the 2l+1 frames centred on the first argmax, edge-replicated.
Eigen::VectorXd maxw_pool(const FeatureSequence& g, int window);
/// Time-major flatten of the first t_cap frames, zero-padded.
Eigen::VectorXd flat_pool(const FeatureSequence& g, int t_cap);
/// Upper triangle (row-major) of the Newton-Schulz square root of the
/// trace-normalized temporal covariance, rescaled by sqrt(trace).
Eigen::VectorXd isqrt_cov_pool(const FeatureSequence& g, int newton_iters);

/// Approximates C^(1/2) for symmetric PSD C with coupled Newton-Schulz
/// iterations on C / tr(C).
Eigen::MatrixXd newton_schulz_sqrt(const Eigen::MatrixXd& c, int iters);

/// Dispatches on `config.kind`. `sample_key` decorrelates STOCH draws across
/// samples while keeping them reproducible.
PooledVector pool(const PoolerConfig& config, const FeatureSequence& g,
                  std::uint64_t sample_key = 0);

/// Exact output dimension for input dimension d.
std::size_t pooled_dim(const PoolerConfig& config, std::size_t d);

/// Number of activations RAP keeps per dim.
int rap_kept(double k_frac, int t_cap);

}  // namespace eocl

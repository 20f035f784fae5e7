#pragma once

// Independent reference computations for the tests. Everything here
// accumulates in 113-bit binary floating point and shares no code with the
// library beyond its public types.

#include <Eigen/Core>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eocl/featio.hpp"
#include "eocl/rng.hpp"

namespace eocl::testing {

using Quad = boost::multiprecision::cpp_bin_float_quad;

/// Uniform entries in [lo, hi).
Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -3.0,
                              double hi = 3.0);
Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo = -3.0, double hi = 3.0);

/// Two-pass TAP: mean, then central moments about it.
std::vector<double> tap_two_pass(const Eigen::MatrixXd& g, int order, double sigma_floor = 1e-6);

/// Replays the shared-covariance recurrence over (x, y) pairs.
Eigen::MatrixXd slda_covariance_replay(std::span<const Eigen::VectorXd> xs,
                                       std::span<const Label> ys);

/// Unbiased two-pass covariance / per-dim variance of a sample set.
Eigen::MatrixXd batch_covariance(std::span<const Eigen::VectorXd> xs);
Eigen::VectorXd batch_variance(std::span<const Eigen::VectorXd> xs);
Eigen::VectorXd batch_mean(std::span<const Eigen::VectorXd> xs);

/// W1 as the integral over q in (0, 1) of |F_u^-1(q) - F_v^-1(q)|.
double wasserstein_quantile(std::vector<double> u, std::vector<double> v);

/// Largest absolute entrywise difference.
double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// A fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

}  // namespace eocl::testing

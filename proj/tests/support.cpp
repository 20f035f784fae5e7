#include "support.hpp"

#include <algorithm>
#include <map>
#include <unistd.h>

namespace eocl::testing {

namespace {

using QVec = std::vector<Quad>;

QVec to_quad(const Eigen::VectorXd& x) {
  QVec q(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) q[static_cast<std::size_t>(i)] = Quad(x[i]);
  return q;
}

Eigen::VectorXd sample_mean_quad(std::span<const Eigen::VectorXd> xs, QVec& mean) {
  const auto m = static_cast<std::size_t>(xs.front().size());
  mean.assign(m, Quad(0));
  for (const auto& x : xs)
    for (std::size_t j = 0; j < m; ++j) mean[j] += Quad(x[static_cast<Eigen::Index>(j)]);
  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    mean[j] /= Quad(xs.size());
    out[static_cast<Eigen::Index>(j)] = static_cast<double>(mean[j]);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo,
                              double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo, double hi) {
  return random_matrix(rng, n, 1, lo, hi).col(0);
}

std::vector<double> tap_two_pass(const Eigen::MatrixXd& g, int order, double sigma_floor) {
  const Eigen::Index t = g.rows();
  const Eigen::Index d = g.cols();
  std::vector<double> out(static_cast<std::size_t>(order * d), 0.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    Quad mu = 0;
    for (Eigen::Index i = 0; i < t; ++i) mu += Quad(g(i, j));
    mu /= Quad(t);
    Quad var = 0;
    for (Eigen::Index i = 0; i < t; ++i) {
      const Quad c = Quad(g(i, j)) - mu;
      var += c * c;
    }
    var /= Quad(t);
    const Quad sigma = sqrt(var);
    out[static_cast<std::size_t>(j)] = static_cast<double>(mu);
    if (order < 2 || sigma < Quad(sigma_floor)) continue;
    out[static_cast<std::size_t>(d + j)] = static_cast<double>(sigma);
    for (int r = 3; r <= order; ++r) {
      Quad acc = 0;
      for (Eigen::Index i = 0; i < t; ++i) acc += pow((Quad(g(i, j)) - mu) / sigma, r);
      out[static_cast<std::size_t>((r - 1) * d + j)] = static_cast<double>(acc / Quad(t));
    }
  }
  return out;
}

Eigen::MatrixXd slda_covariance_replay(std::span<const Eigen::VectorXd> xs,
                                       std::span<const Label> ys) {
  const auto m = static_cast<std::size_t>(xs.front().size());
  std::vector<Quad> cov(m * m, Quad(0));
  std::map<Label, std::pair<QVec, std::uint64_t>> means;
  Quad n = 0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const QVec x = to_quad(xs[s]);
    auto it = means.find(ys[s]);
    QVec diff(m, Quad(0));
    if (it != means.end())
      for (std::size_t j = 0; j < m; ++j) diff[j] = x[j] - it->second.first[j];
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        cov[a * m + b] = (n * cov[a * m + b] + n * diff[a] * diff[b] / (n + 1)) / (n + 1);
    if (it == means.end()) {
      means.emplace(ys[s], std::make_pair(x, std::uint64_t{1}));
    } else {
      auto& [mu, c] = it->second;
      const Quad cq(c);
      for (std::size_t j = 0; j < m; ++j) mu[j] = (cq * mu[j] + x[j]) / (cq + 1);
      ++c;
    }
    n += 1;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          static_cast<double>(cov[a * m + b]);
  return out;
}

Eigen::VectorXd batch_mean(std::span<const Eigen::VectorXd> xs) {
  QVec mean;
  return sample_mean_quad(xs, mean);
}

Eigen::MatrixXd batch_covariance(std::span<const Eigen::VectorXd> xs) {
  QVec mean;
  sample_mean_quad(xs, mean);
  const auto m = mean.size();
  std::vector<Quad> acc(m * m, Quad(0));
  for (const auto& x : xs) {
    QVec c = to_quad(x);
    for (std::size_t j = 0; j < m; ++j) c[j] -= mean[j];
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) acc[a * m + b] += c[a] * c[b];
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          static_cast<double>(acc[a * m + b] / Quad(xs.size() - 1));
  return out;
}

Eigen::VectorXd batch_variance(std::span<const Eigen::VectorXd> xs) {
  return batch_covariance(xs).diagonal();
}

double wasserstein_quantile(std::vector<double> u, std::vector<double> v) {
  std::sort(u.begin(), u.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = u.size();
  const std::size_t m = v.size();
  // Walk the merged breakpoints i/n and j/m of the two quantile functions.
  Quad total = 0;
  Quad q = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n && j < m) {
    const Quad next_u = Quad(i + 1) / Quad(n);
    const Quad next_v = Quad(j + 1) / Quad(m);
    const Quad next = next_u < next_v ? next_u : next_v;
    total += (next - q) * abs(Quad(u[i]) - Quad(v[j]));
    q = next;
    if (next_u == next) ++i;
    if (next_v == next) ++j;
  }
  return static_cast<double>(total);
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("eocl_" + tag + "_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base;
}

}  // namespace eocl::testing

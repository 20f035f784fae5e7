#include "eocl/pooling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "eocl/error.hpp"
#include "eocl/rng.hpp"

namespace eocl {

namespace {

constexpr std::pair<PoolerKind, std::string_view> kNames[] = {
    {PoolerKind::Avg, "AVG"},       {PoolerKind::Max, "MAX"},
    {PoolerKind::Mix, "MIX"},       {PoolerKind::Stoch, "STOCH"},
    {PoolerKind::Lp, "LP"},         {PoolerKind::Rap, "RAP"},
    {PoolerKind::AvgMax, "AVGMAX"}, {PoolerKind::Tsdp, "TSDP"},
    {PoolerKind::Tstp, "TSTP"},     {PoolerKind::MaxW, "MAXW"},
    {PoolerKind::Flat, "FLAT"},     {PoolerKind::IsqrtCov, "ISQRT_COV"},
    {PoolerKind::Tap, "TAP"},
};

Eigen::Index d_of(const FeatureSequence& g) { return g.dims(); }

}  // namespace

std::string_view to_string(PoolerKind kind) {
  for (const auto& [k, n] : kNames)
    if (k == kind) return n;
  return "UNKNOWN";
}

std::optional<PoolerKind> pooler_kind_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "STOCHASTIC") upper = "STOCH";
  if (upper == "ISQRT-COV" || upper == "ISQRTCOV") upper = "ISQRT_COV";
  for (const auto& [k, n] : kNames)
    if (n == upper) return k;
  return std::nullopt;
}

std::string PoolerConfig::tag() const {
  std::ostringstream os;
  switch (kind) {
    case PoolerKind::Tap: os << "TAP(R=" << order << ")"; break;
    case PoolerKind::Lp: os << "L" << p; break;
    case PoolerKind::Mix: os << "MIX(" << alpha << ")"; break;
    case PoolerKind::Rap: os << "RAP(" << k_frac * 100.0 << "%)"; break;
    case PoolerKind::MaxW: os << "MAXW_" << window; break;
    case PoolerKind::Flat: os << "FLAT(" << t_cap << ")"; break;
    case PoolerKind::IsqrtCov: os << "ISQRT_COV(" << newton_iters << ")"; break;
    default: os << to_string(kind);
  }
  return os.str();
}

void validate(const PoolerConfig& c) {
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(std::string(to_string(c.kind)) + ": " + msg);
  };
  if (!(c.sigma_floor > 0.0)) fail("sigma_floor must be > 0");
  switch (c.kind) {
    case PoolerKind::Tap:
      if (c.order < 1) fail("order R must be >= 1");
      break;
    case PoolerKind::Lp:
      if (c.p < 1) fail("p must be >= 1");
      break;
    case PoolerKind::Mix:
      if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) fail("alpha must lie in [0, 1]");
      break;
    case PoolerKind::Rap:
      if (!(c.k_frac > 0.0 && c.k_frac <= 1.0)) fail("k_frac must lie in (0, 1]");
      if (c.t_cap < 1) fail("t_cap must be >= 1");
      break;
    case PoolerKind::MaxW:
      if (c.window < 0) fail("window l must be >= 0");
      break;
    case PoolerKind::Flat:
      if (c.t_cap < 1) fail("t_cap must be >= 1");
      break;
    case PoolerKind::IsqrtCov:
      if (c.newton_iters < 1) fail("newton_iters must be >= 1");
      break;
    default:
      break;
  }
}

Eigen::VectorXd tap_pool(const FeatureSequence& g, int order, double sigma_floor) {
  if (order < 1) throw std::invalid_argument("tap_pool: order R must be >= 1");
  const auto& m = g.data();
  const Eigen::Index t = m.rows();
  const Eigen::Index d = m.cols();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(order * d);
  std::vector<double> z(static_cast<std::size_t>(t));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mu = m.col(j).sum() / static_cast<double>(t);
    out[j] = mu;
    if (order == 1) continue;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < t; ++i) {
      const double dev = m(i, j) - mu;
      ss += dev * dev;
    }
    const double sigma = std::sqrt(ss / static_cast<double>(t));
    if (sigma < sigma_floor) continue;
    out[d + j] = sigma;
    if (order == 2) continue;
    for (Eigen::Index i = 0; i < t; ++i) z[i] = (m(i, j) - mu) / sigma;
    for (int r = 3; r <= order; ++r) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < t; ++i) {
        double p = z[i] * z[i] * z[i];
        for (int k = 3; k < r; ++k) p *= z[i];
        acc += p;
      }
      out[(r - 1) * d + j] = acc / static_cast<double>(t);
    }
  }
  return out;
}

Eigen::VectorXd avg_pool(const FeatureSequence& g) {
  const auto& m = g.data();
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[j] = m.col(j).sum() / static_cast<double>(m.rows());
  return out;
}

Eigen::VectorXd max_pool(const FeatureSequence& g) { return g.data().colwise().maxCoeff().transpose(); }

Eigen::VectorXd mix_pool(const FeatureSequence& g, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mix_pool: alpha must lie in [0, 1]");
  return alpha * max_pool(g) + (1.0 - alpha) * avg_pool(g);
}

Eigen::VectorXd stoch_pool(const FeatureSequence& g, std::uint64_t seed) {
  const auto& m = g.data();
  const Eigen::Index t = m.rows();
  Eigen::VectorXd out(m.cols());
  Rng rng(seed);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double lo = m.col(j).minCoeff();
    double total = 0.0;
    for (Eigen::Index i = 0; i < t; ++i) total += m(i, j) - lo;
    Eigen::Index pick = t - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < t; ++i) {
        cum += m(i, j) - lo;
        if (u < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(t)));
    }
    out[j] = m(pick, j);
  }
  return out;
}

Eigen::VectorXd lp_pool(const FeatureSequence& g, int p) {
  if (p < 1) throw std::invalid_argument("lp_pool: p must be >= 1");
  const auto& m = g.data();
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    // Scaled by the column's max |g| so large p cannot overflow.
    const double scale = m.col(j).cwiseAbs().maxCoeff();
    if (scale == 0.0) {
      out[j] = 0.0;
      continue;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) acc += std::pow(std::abs(m(i, j)) / scale, p);
    out[j] = scale * std::pow(acc / static_cast<double>(m.rows()), 1.0 / p);
  }
  return out;
}

int rap_kept(double k_frac, int t_cap) {
  // Tolerance absorbs products like 0.07 * 100 = 7.000000000000001.
  return std::max(1, static_cast<int>(std::ceil(k_frac * t_cap - 1e-9)));
}

Eigen::VectorXd rap_pool(const FeatureSequence& g, double k_frac, int t_cap) {
  if (!(k_frac > 0.0 && k_frac <= 1.0)) throw std::invalid_argument("rap_pool: k_frac must lie in (0, 1]");
  if (t_cap < 1) throw std::invalid_argument("rap_pool: t_cap must be >= 1");
  const auto& m = g.data();
  const int keep = rap_kept(k_frac, t_cap);
  Eigen::VectorXd out(static_cast<Eigen::Index>(keep) * m.cols());
  std::vector<double> col(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) col[i] = m(i, j);
    std::sort(col.begin(), col.end(), std::greater<>());
    for (int k = 0; k < keep; ++k)
      out[j * keep + k] = k < static_cast<int>(col.size()) ? col[k] : col.back();
  }
  return out;
}

Eigen::VectorXd avgmax_pool(const FeatureSequence& g) {
  const auto d = d_of(g);
  Eigen::VectorXd out(2 * d);
  out << avg_pool(g), max_pool(g);
  return out;
}

Eigen::VectorXd tsdp_pool(const FeatureSequence& g, double sigma_floor) {
  return tap_pool(g, 2, sigma_floor).tail(d_of(g));
}

Eigen::VectorXd tstp_pool(const FeatureSequence& g, double sigma_floor) {
  return tap_pool(g, 2, sigma_floor);
}

Eigen::VectorXd maxw_pool(const FeatureSequence& g, int window) {
  if (window < 0) throw std::invalid_argument("maxw_pool: window l must be >= 0");
  const auto& m = g.data();
  const Eigen::Index t = m.rows();
  const Eigen::Index w = 2 * window + 1;
  Eigen::VectorXd out(w * m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index arg = 0;
    m.col(j).maxCoeff(&arg);
    for (Eigen::Index k = 0; k < w; ++k) {
      const Eigen::Index i = std::clamp<Eigen::Index>(arg - window + k, 0, t - 1);
      out[j * w + k] = m(i, j);
    }
  }
  return out;
}

Eigen::VectorXd flat_pool(const FeatureSequence& g, int t_cap) {
  if (t_cap < 1) throw std::invalid_argument("flat_pool: t_cap must be >= 1");
  const auto& m = g.data();
  const Eigen::Index d = m.cols();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t_cap) * d);
  const Eigen::Index rows = std::min<Eigen::Index>(t_cap, m.rows());
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out[i * d + j] = m(i, j);
  return out;
}

Eigen::MatrixXd newton_schulz_sqrt(const Eigen::MatrixXd& c, int iters) {
  const Eigen::Index d = c.rows();
  const double tr = c.trace();
  if (!(tr > 0.0)) return Eigen::MatrixXd::Zero(d, d);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd y = c / tr;
  Eigen::MatrixXd z = eye;
  for (int k = 0; k < iters; ++k) {
    const Eigen::MatrixXd step = 0.5 * (3.0 * eye - z * y);
    y = (y * step).eval();
    z = (step * z).eval();
  }
  if (!y.allFinite()) throw NumericalError("Newton-Schulz iteration diverged");
  return y * std::sqrt(tr);
}

Eigen::VectorXd isqrt_cov_pool(const FeatureSequence& g, int newton_iters) {
  if (newton_iters < 1) throw std::invalid_argument("isqrt_cov_pool: newton_iters must be >= 1");
  const auto& m = g.data();
  const Eigen::Index d = m.cols();
  const Eigen::RowVectorXd mu = m.colwise().mean();
  const Eigen::MatrixXd centered = m.rowwise() - mu;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(m.rows());
  const Eigen::MatrixXd root = newton_schulz_sqrt(cov, newton_iters);
  Eigen::VectorXd out(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) out[k++] = root(i, j);
  return out;
}

PooledVector pool(const PoolerConfig& c, const FeatureSequence& g, std::uint64_t sample_key) {
  Eigen::VectorXd v;
  switch (c.kind) {
    case PoolerKind::Avg: v = avg_pool(g); break;
    case PoolerKind::Max: v = max_pool(g); break;
    case PoolerKind::Mix: v = mix_pool(g, c.alpha); break;
    case PoolerKind::Stoch: v = stoch_pool(g, derive_seed(c.rng_seed, sample_key)); break;
    case PoolerKind::Lp: v = lp_pool(g, c.p); break;
    case PoolerKind::Rap: v = rap_pool(g, c.k_frac, c.t_cap); break;
    case PoolerKind::AvgMax: v = avgmax_pool(g); break;
    case PoolerKind::Tsdp: v = tsdp_pool(g, c.sigma_floor); break;
    case PoolerKind::Tstp: v = tstp_pool(g, c.sigma_floor); break;
    case PoolerKind::MaxW: v = maxw_pool(g, c.window); break;
    case PoolerKind::Flat: v = flat_pool(g, c.t_cap); break;
    case PoolerKind::IsqrtCov: v = isqrt_cov_pool(g, c.newton_iters); break;
    case PoolerKind::Tap: v = tap_pool(g, c.order, c.sigma_floor); break;
  }
  if (!v.allFinite()) throw NumericalError(c.tag() + " produced non-finite output");
  return PooledVector{std::move(v), c.kind};
}

std::size_t pooled_dim(const PoolerConfig& c, std::size_t d) {
  switch (c.kind) {
    case PoolerKind::Avg:
    case PoolerKind::Max:
    case PoolerKind::Mix:
    case PoolerKind::Stoch:
    case PoolerKind::Lp:
    case PoolerKind::Tsdp:
      return d;
    case PoolerKind::AvgMax:
    case PoolerKind::Tstp:
      return 2 * d;
    case PoolerKind::Rap: return static_cast<std::size_t>(rap_kept(c.k_frac, c.t_cap)) * d;
    case PoolerKind::MaxW: return static_cast<std::size_t>(2 * c.window + 1) * d;
    case PoolerKind::Flat: return static_cast<std::size_t>(c.t_cap) * d;
    case PoolerKind::IsqrtCov: return d * (d + 1) / 2;
    case PoolerKind::Tap: return static_cast<std::size_t>(c.order) * d;
  }
  return 0;
}

}  // namespace eocl

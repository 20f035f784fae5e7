// Gaussian generative learners: SLDA, SQDA, SNB.

#include <cmath>
#include <numbers>

#include "eocl/error.hpp"
#include "eocl/learners.hpp"
#include "serial.hpp"

namespace eocl {

namespace {

constexpr double kMaxShrinkage = 1e-2;

template <typename T>
void insert_at(std::vector<T>& v, std::size_t slot, T value) {
  v.insert(v.begin() + static_cast<std::ptrdiff_t>(slot), std::move(value));
}

}  // namespace

// SLDA ----------------------------------------------------------------------

SldaLearner::SldaLearner(LearnerConfig config, std::size_t dim)
    : Learner(std::move(config), dim),
      cov_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

SldaLearner::SldaLearner(const SldaLearner& other)
    : Learner(other), means_(other.means_), counts_(other.counts_), cov_(other.cov_) {
  std::lock_guard lock(other.cache_mutex_);
  dirty_ = other.dirty_;
  weights_ = other.weights_;
  bias_ = other.bias_;
  used_shrinkage_ = other.used_shrinkage_;
}

void SldaLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  const double n = static_cast<double>(samples_seen());
  if (is_new) {
    // The fresh class mean is x itself, so the covariance increment is zero.
    insert_at(means_, slot, Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())));
    insert_at(counts_, slot, std::uint64_t{0});
    cov_ *= n / (n + 1.0);
  } else {
    const Eigen::VectorXd diff = x - means_[slot];
    cov_ *= n / (n + 1.0);
    cov_.noalias() += (n / ((n + 1.0) * (n + 1.0))) * diff * diff.transpose();
  }
  running_mean_update(means_[slot], counts_[slot], x);
  ++counts_[slot];
  std::lock_guard lock(cache_mutex_);
  dirty_ = true;
}

void SldaLearner::refresh() const {
  std::lock_guard lock(cache_mutex_);
  if (!dirty_) return;
  const auto m = static_cast<Eigen::Index>(dim());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
  double eps = config().shrinkage;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (;;) {
    llt.compute((1.0 - eps) * cov_ + eps * eye);
    if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) break;
    eps *= 10.0;
    if (eps > kMaxShrinkage * (1.0 + 1e-12))
      throw NumericalError("SLDA: covariance is not positive definite even with shrinkage 1e-2");
  }
  Eigen::MatrixXd mu(m, static_cast<Eigen::Index>(means_.size()));
  for (std::size_t k = 0; k < means_.size(); ++k) mu.col(static_cast<Eigen::Index>(k)) = means_[k];
  weights_ = llt.solve(mu);
  bias_.resize(mu.cols());
  for (Eigen::Index k = 0; k < mu.cols(); ++k) bias_[k] = -0.5 * mu.col(k).dot(weights_.col(k));
  used_shrinkage_ = eps;
  dirty_ = false;
}

double SldaLearner::effective_shrinkage() const {
  refresh();
  return used_shrinkage_;
}

Eigen::VectorXd SldaLearner::do_scores(const Eigen::VectorXd& x) const {
  refresh();
  return weights_.transpose() * x + bias_;
}

std::size_t SldaLearner::param_count() const {
  return num_classes() * (dim() + 1) + dim() * dim();
}

void SldaLearner::write_state(ByteWriter& w) const {
  serial::put(w, means_);
  serial::put(w, counts_);
  serial::put(w, cov_);
}

void SldaLearner::read_state(ByteReader& r) {
  means_ = serial::get_vectors(r, num_classes(), dim());
  counts_ = serial::get_u64s(r, num_classes());
  cov_ = serial::get_matrix(r, dim(), dim());
  std::lock_guard lock(cache_mutex_);
  dirty_ = true;
}

// SQDA ----------------------------------------------------------------------

SqdaLearner::SqdaLearner(const SqdaLearner& other)
    : Learner(other), means_(other.means_), counts_(other.counts_), scatter_(other.scatter_) {
  std::lock_guard lock(other.cache_mutex_);
  dirty_ = other.dirty_;
  factors_ = other.factors_;
}

void SqdaLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  const auto m = static_cast<Eigen::Index>(dim());
  if (is_new) {
    insert_at(means_, slot, Eigen::VectorXd(Eigen::VectorXd::Zero(m)));
    insert_at(counts_, slot, std::uint64_t{0});
    insert_at(scatter_, slot, Eigen::MatrixXd(Eigen::MatrixXd::Zero(m, m)));
  }
  const double n = static_cast<double>(counts_[slot]);
  const Eigen::VectorXd delta = x - means_[slot];
  running_mean_update(means_[slot], counts_[slot], x);
  scatter_[slot].noalias() += (n / (n + 1.0)) * delta * delta.transpose();
  ++counts_[slot];
  std::lock_guard lock(cache_mutex_);
  dirty_ = true;
}

Eigen::MatrixXd SqdaLearner::covariance(std::size_t slot) const {
  const auto c = counts_.at(slot);
  if (c < 2) return Eigen::MatrixXd::Zero(scatter_[slot].rows(), scatter_[slot].cols());
  return scatter_[slot] / static_cast<double>(c - 1);
}

void SqdaLearner::refresh() const {
  std::lock_guard lock(cache_mutex_);
  if (!dirty_) return;
  const auto m = static_cast<Eigen::Index>(dim());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
  factors_.assign(means_.size(), Factor{});
  for (std::size_t k = 0; k < means_.size(); ++k) {
    Factor& f = factors_[k];
    double eps = config().shrinkage;
    if (counts_[k] < dim() + 1) {
      f.isotropic = true;
      f.shrinkage = eps;
      f.log_det = static_cast<double>(m) * std::log(eps);
      continue;
    }
    const Eigen::MatrixXd cov = covariance(k);
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
      llt.compute(cov + eps * eye);
      if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) break;
      eps *= 10.0;
      if (eps > kMaxShrinkage * (1.0 + 1e-12))
        throw NumericalError("SQDA: class covariance is not positive definite");
    }
    f.isotropic = false;
    f.shrinkage = eps;
    f.lower = llt.matrixL();
    f.log_det = 2.0 * f.lower.diagonal().array().log().sum();
  }
  dirty_ = false;
}

Eigen::VectorXd SqdaLearner::do_scores(const Eigen::VectorXd& x) const {
  refresh();
  const double n = static_cast<double>(samples_seen());
  Eigen::VectorXd s(static_cast<Eigen::Index>(means_.size()));
  for (std::size_t k = 0; k < means_.size(); ++k) {
    const Factor& f = factors_[k];
    const Eigen::VectorXd diff = x - means_[k];
    double maha = 0.0;
    if (f.isotropic) {
      maha = diff.squaredNorm() / f.shrinkage;
    } else {
      maha = f.lower.triangularView<Eigen::Lower>().solve(diff).squaredNorm();
    }
    s[static_cast<Eigen::Index>(k)] =
        std::log(static_cast<double>(counts_[k]) / n) - 0.5 * f.log_det - 0.5 * maha;
  }
  return s;
}

std::size_t SqdaLearner::param_count() const {
  return num_classes() * (dim() + 1 + dim() * dim());
}

void SqdaLearner::write_state(ByteWriter& w) const {
  serial::put(w, means_);
  serial::put(w, counts_);
  for (const auto& s : scatter_) serial::put(w, s);
}

void SqdaLearner::read_state(ByteReader& r) {
  means_ = serial::get_vectors(r, num_classes(), dim());
  counts_ = serial::get_u64s(r, num_classes());
  scatter_.clear();
  for (std::size_t k = 0; k < num_classes(); ++k) scatter_.push_back(serial::get_matrix(r, dim(), dim()));
  std::lock_guard lock(cache_mutex_);
  dirty_ = true;
}

// SNB -----------------------------------------------------------------------

void SnbLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) {
    insert_at(means_, slot, Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())));
    insert_at(m2_, slot, Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())));
    insert_at(counts_, slot, std::uint64_t{0});
  }
  const Eigen::VectorXd delta = x - means_[slot];
  running_mean_update(means_[slot], counts_[slot], x);
  m2_[slot].array() += delta.array() * (x - means_[slot]).array();
  ++counts_[slot];
}

Eigen::VectorXd SnbLearner::variance(std::size_t slot) const {
  const auto c = counts_.at(slot);
  if (c < 2) return Eigen::VectorXd::Zero(m2_[slot].size());
  return m2_[slot] / static_cast<double>(c - 1);
}

Eigen::VectorXd SnbLearner::do_scores(const Eigen::VectorXd& x) const {
  const double n = static_cast<double>(samples_seen());
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Eigen::VectorXd s(static_cast<Eigen::Index>(means_.size()));
  for (std::size_t k = 0; k < means_.size(); ++k) {
    const Eigen::ArrayXd v = variance(k).array().max(config().variance_floor);
    const Eigen::ArrayXd diff = x.array() - means_[k].array();
    const double ll = -0.5 * ((log_2pi + v.log()) + diff.square() / v).sum();
    s[static_cast<Eigen::Index>(k)] = std::log(static_cast<double>(counts_[k]) / n) + ll;
  }
  return s;
}

std::size_t SnbLearner::param_count() const { return num_classes() * (2 * dim() + 1); }

void SnbLearner::write_state(ByteWriter& w) const {
  serial::put(w, means_);
  serial::put(w, m2_);
  serial::put(w, counts_);
}

void SnbLearner::read_state(ByteReader& r) {
  means_ = serial::get_vectors(r, num_classes(), dim());
  m2_ = serial::get_vectors(r, num_classes(), dim());
  counts_ = serial::get_u64s(r, num_classes());
}

}  // namespace eocl

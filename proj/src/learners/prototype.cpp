// Prototype and perceptron learners: NCM, CBCL, SOvR, PRCP.

#include <limits>

#include "eocl/learners.hpp"
#include "serial.hpp"

namespace eocl {

namespace {

double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm(); }

template <typename T>
void insert_at(std::vector<T>& v, std::size_t slot, T value) {
  v.insert(v.begin() + static_cast<std::ptrdiff_t>(slot), std::move(value));
}

}  // namespace

// NCM -----------------------------------------------------------------------

void NcmLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) {
    insert_at(means_, slot, Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())));
    insert_at(counts_, slot, std::uint64_t{0});
  }
  running_mean_update(means_[slot], counts_[slot], x);
  ++counts_[slot];
}

Eigen::VectorXd NcmLearner::do_scores(const Eigen::VectorXd& x) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(means_.size()));
  for (std::size_t k = 0; k < means_.size(); ++k) s[static_cast<Eigen::Index>(k)] = -distance(x, means_[k]);
  return s;
}

std::size_t NcmLearner::param_count() const { return num_classes() * (dim() + 1); }

void NcmLearner::write_state(ByteWriter& w) const {
  serial::put(w, means_);
  serial::put(w, counts_);
}

void NcmLearner::read_state(ByteReader& r) {
  means_ = serial::get_vectors(r, num_classes(), dim());
  counts_ = serial::get_u64s(r, num_classes());
}

// CBCL ----------------------------------------------------------------------

void CbclLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) {
    insert_at(centroids_, slot, std::vector<Centroid>{});
    insert_at(totals_, slot, std::uint64_t{0});
  }
  auto& mine = centroids_[slot];
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    const double dist = distance(x, mine[i].center);
    if (dist < best) {
      best = dist;
      nearest = i;
    }
  }
  if (!mine.empty() && best <= config().cbcl_distance) {
    running_mean_update(mine[nearest].center, mine[nearest].count, x);
    ++mine[nearest].count;
  } else {
    // A fresh centroid is the running mean of one sample, computed through the
    // shared update so it stays bit-identical to NCM's first prototype.
    Eigen::VectorXd c = Eigen::VectorXd::Zero(x.size());
    running_mean_update(c, 0, x);
    mine.push_back(Centroid{std::move(c), 1});
  }
  ++totals_[slot];
}

Eigen::VectorXd CbclLearner::do_scores(const Eigen::VectorXd& x) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(centroids_.size()));
  for (std::size_t k = 0; k < centroids_.size(); ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : centroids_[k]) best = std::max(best, -distance(x, c.center));
    s[static_cast<Eigen::Index>(k)] = best / static_cast<double>(totals_[k]);
  }
  return s;
}

std::size_t CbclLearner::param_count() const {
  std::size_t n = num_classes();
  for (const auto& cs : centroids_) n += cs.size() * (dim() + 1);
  return n;
}

void CbclLearner::write_state(ByteWriter& w) const {
  serial::put(w, totals_);
  for (const auto& cs : centroids_) {
    w.u64(cs.size());
    for (const auto& c : cs) {
      serial::put(w, c.center);
      w.u64(c.count);
    }
  }
}

void CbclLearner::read_state(ByteReader& r) {
  totals_ = serial::get_u64s(r, num_classes());
  centroids_.assign(num_classes(), {});
  for (std::size_t k = 0; k < num_classes(); ++k) {
    const auto n = r.u64();
    if (n == 0 || n > totals_[k]) throw FormatError("invalid centroid count", r.offset());
    for (std::uint64_t i = 0; i < n; ++i) {
      Eigen::VectorXd c = serial::get_vector(r, dim());
      const auto count = r.u64();
      if (count == 0) throw FormatError("empty centroid", r.offset());
      centroids_[k].push_back(Centroid{std::move(c), count});
    }
  }
}

// SOvR ----------------------------------------------------------------------

void SovrLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) {
    insert_at(means_, slot, Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())));
    insert_at(counts_, slot, std::uint64_t{0});
  }
  running_mean_update(means_[slot], counts_[slot], x);
  ++counts_[slot];
  running_mean_update(global_mean_, samples_seen(), x);
}

Eigen::VectorXd SovrLearner::do_scores(const Eigen::VectorXd& x) const {
  const double n = static_cast<double>(samples_seen());
  Eigen::VectorXd s(static_cast<Eigen::Index>(means_.size()));
  for (std::size_t k = 0; k < means_.size(); ++k) {
    const double ck = static_cast<double>(counts_[k]);
    Eigen::VectorXd rest = Eigen::VectorXd::Zero(x.size());
    if (samples_seen() > counts_[k]) rest = (n * global_mean_ - ck * means_[k]) / (n - ck);
    s[static_cast<Eigen::Index>(k)] = (means_[k] - rest).dot(x);
  }
  return s;
}

std::size_t SovrLearner::param_count() const { return num_classes() * (dim() + 1) + dim() + 1; }

void SovrLearner::write_state(ByteWriter& w) const {
  serial::put(w, means_);
  serial::put(w, counts_);
  serial::put(w, global_mean_);
}

void SovrLearner::read_state(ByteReader& r) {
  means_ = serial::get_vectors(r, num_classes(), dim());
  counts_ = serial::get_u64s(r, num_classes());
  global_mean_ = serial::get_vector(r, dim());
}

// PRCP ----------------------------------------------------------------------

void PerceptronLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) {
    insert_at(weights_, slot, Eigen::VectorXd(x));
    return;
  }
  const std::size_t predicted = argmax(do_scores(x));
  if (predicted != slot) {
    weights_[slot] += x;
    weights_[predicted] -= x;
  }
}

Eigen::VectorXd PerceptronLearner::do_scores(const Eigen::VectorXd& x) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(weights_.size()));
  for (std::size_t k = 0; k < weights_.size(); ++k) s[static_cast<Eigen::Index>(k)] = weights_[k].dot(x);
  return s;
}

std::size_t PerceptronLearner::param_count() const { return num_classes() * dim(); }

void PerceptronLearner::write_state(ByteWriter& w) const { serial::put(w, weights_); }

void PerceptronLearner::read_state(ByteReader& r) {
  weights_ = serial::get_vectors(r, num_classes(), dim());
}

}  // namespace eocl

// Linear softmax heads: FT and online iCaRL.

#include <algorithm>
#include <sstream>

#include "eocl/learners.hpp"
#include "eocl/rng.hpp"
#include "serial.hpp"

namespace eocl {

// FT ------------------------------------------------------------------------

void LinearHeadLearner::add_class_row(std::size_t slot) {
  const auto at = static_cast<std::ptrdiff_t>(slot);
  weights_.insert(weights_.begin() + at, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim())));
  bias_.insert(bias_.begin() + at, 0.0);
}

void LinearHeadLearner::sgd_step(std::span<const Eigen::VectorXd* const> xs,
                                 std::span<const std::size_t> slots) {
  const std::size_t k = weights_.size();
  const double rate = config().learning_rate / static_cast<double>(xs.size());
  std::vector<Eigen::VectorXd> grad_w(k, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim())));
  std::vector<double> grad_b(k, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Eigen::VectorXd p = do_scores(*xs[i]);
    p = (p.array() - p.maxCoeff()).exp();
    p /= p.sum();
    p[static_cast<Eigen::Index>(slots[i])] -= 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      grad_w[c] += p[static_cast<Eigen::Index>(c)] * *xs[i];
      grad_b[c] += p[static_cast<Eigen::Index>(c)];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    weights_[c] -= rate * grad_w[c];
    bias_[c] -= rate * grad_b[c];
  }
}

void LinearHeadLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) add_class_row(slot);
  const Eigen::VectorXd* xs[] = {&x};
  const std::size_t slots[] = {slot};
  sgd_step(xs, slots);
}

Eigen::VectorXd LinearHeadLearner::do_scores(const Eigen::VectorXd& x) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(weights_.size()));
  for (std::size_t k = 0; k < weights_.size(); ++k)
    s[static_cast<Eigen::Index>(k)] = weights_[k].dot(x) + bias_[k];
  return s;
}

std::size_t LinearHeadLearner::param_count() const { return num_classes() * (dim() + 1); }

void LinearHeadLearner::write_state(ByteWriter& w) const {
  serial::put(w, weights_);
  serial::put(w, bias_);
}

void LinearHeadLearner::read_state(ByteReader& r) {
  weights_ = serial::get_vectors(r, num_classes(), dim());
  bias_ = serial::get_f64s(r, num_classes());
}

// iCaRL ---------------------------------------------------------------------

IcarlLearner::IcarlLearner(LearnerConfig config, std::size_t dim)
    : LinearHeadLearner(std::move(config), dim), rng_(this->config().seed) {}

std::vector<std::size_t> IcarlLearner::buffer_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (const auto& e : buffer_) ++counts[*find_slot(e.label)];
  return counts;
}

void IcarlLearner::do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) {
  if (is_new) add_class_row(slot);
  std::vector<const Eigen::VectorXd*> xs{&x};
  std::vector<std::size_t> slots{slot};
  if (!buffer_.empty()) {
    const auto& replay = buffer_[uniform_index(rng_, buffer_.size())];
    xs.push_back(&replay.x);
    slots.push_back(*find_slot(replay.label));
    ++replay_reads_;
  }
  sgd_step(xs, slots);
  insert(x, classes()[slot]);
}

void IcarlLearner::insert(const Eigen::VectorXd& x, Label y) {
  if (buffer_.size() < config().buffer_capacity) {
    buffer_.push_back(Exemplar{x, y});
    return;
  }
  // Evict from the most represented class; on ties prefer the incoming class
  // (keeps counts within one of balance), then the lowest label.
  const auto counts = buffer_counts();
  const std::size_t own = *find_slot(y);
  std::size_t victim = own;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > counts[victim] || (counts[k] == counts[victim] && victim != own && k < victim))
      victim = k;
  }
  const Label victim_label = classes()[victim];
  auto nth = uniform_index(rng_, counts[victim]);
  for (auto& e : buffer_) {
    if (e.label != victim_label) continue;
    if (nth-- == 0) {
      e = Exemplar{x, y};
      return;
    }
  }
}

std::size_t IcarlLearner::param_count() const {
  return LinearHeadLearner::param_count() + buffer_.size() * (dim() + 1);
}

void IcarlLearner::write_state(ByteWriter& w) const {
  LinearHeadLearner::write_state(w);
  w.u64(replay_reads_);
  w.u64(buffer_.size());
  for (const auto& e : buffer_) {
    w.u32(e.label);
    serial::put(w, e.x);
  }
  std::ostringstream os;
  os << rng_;
  w.str(os.str());
}

void IcarlLearner::read_state(ByteReader& r) {
  LinearHeadLearner::read_state(r);
  replay_reads_ = r.u64();
  const auto n = r.u64();
  if (n > config().buffer_capacity) throw FormatError("buffer exceeds capacity", r.offset());
  buffer_.clear();
  for (std::uint64_t i = 0; i < n; ++i) {
    const Label y = r.u32();
    if (!find_slot(y)) throw FormatError("buffered label not among seen classes", r.offset());
    buffer_.push_back(Exemplar{serial::get_vector(r, dim()), y});
  }
  std::istringstream is(r.str());
  is >> rng_;
  if (!is) throw FormatError("corrupt generator state", r.offset());
}

}  // namespace eocl

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eocl/byte_io.hpp"
#include "eocl/featio.hpp"

namespace eocl {

enum class LearnerKind { Ft, Prcp, Ncm, Cbcl, Sovr, Snb, Slda, Sqda, Icarl, External };

std::string_view to_string(LearnerKind kind);
std::optional<LearnerKind> learner_kind_from_string(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Slda;
  double shrinkage = 1e-4;        // SLDA / SQDA
  double learning_rate = 0.01;    // FT / ICARL
  std::size_t buffer_capacity = 1000;  // ICARL
  double cbcl_distance = std::numeric_limits<double>::infinity();
  double variance_floor = 1e-8;   // SNB
  std::uint64_t seed = 0;         // ICARL replay / eviction draws

  std::string tag() const { return std::string(to_string(kind)); }
};

/// Throws std::invalid_argument for out-of-range hyperparameters.
void validate(const LearnerConfig& config);

/// A streaming classifier over fixed-dimension vectors.
///
/// fit_one must be externally serialized; predict/scores are const and may be
/// called concurrently with each other. Classes are kept in ascending label
/// order and every argmax breaks ties toward the lowest label.
class Learner {
 public:
  virtual ~Learner() = default;

  LearnerKind kind() const { return config_.kind; }
  virtual std::string name() const { return config_.tag(); }
  const LearnerConfig& config() const { return config_; }
  std::size_t dim() const { return dim_; }
  const std::vector<Label>& classes() const { return classes_; }
  std::uint64_t samples_seen() const { return samples_seen_; }

  /// Learns from one labeled vector. Throws std::invalid_argument on dimension
  /// mismatch or non-finite input.
  void fit_one(const Eigen::VectorXd& x, Label y);

  /// Per-class scores aligned with classes(). Throws std::logic_error when no
  /// class has been seen.
  Eigen::VectorXd scores(const Eigen::VectorXd& x) const;
  Label predict(const Eigen::VectorXd& x) const;

  /// Number of stored scalars.
  virtual std::size_t param_count() const = 0;
  virtual std::unique_ptr<Learner> clone() const = 0;

  virtual void write_state(ByteWriter& w) const = 0;
  virtual void read_state(ByteReader& r) = 0;

 protected:
  Learner(LearnerConfig config, std::size_t dim);
  Learner(const Learner&) = default;
  Learner& operator=(const Learner&) = default;

  /// Slot of `y` in classes(), or nullopt.
  std::optional<std::size_t> find_slot(Label y) const;
  std::size_t num_classes() const { return classes_.size(); }

  /// `slot` indexes classes(); when `is_new` the class was just inserted there
  /// and the implementation must insert its per-class state at that position.
  /// samples_seen() still reports the count before this sample.
  virtual void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) = 0;
  virtual Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const = 0;

 private:
  friend std::unique_ptr<Learner> deserialize_learner(std::span<const std::uint8_t> bytes);

  LearnerConfig config_;
  std::size_t dim_;
  std::vector<Label> classes_;
  std::uint64_t samples_seen_ = 0;
};

/// Index of the maximum entry; first index on ties.
std::size_t argmax(const Eigen::VectorXd& v);

/// (count * mean + x) / (count + 1), the running-mean step shared by every
/// prototype learner so that equal streams give bit-identical prototypes.
void running_mean_update(Eigen::VectorXd& mean, std::uint64_t count, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------

class NcmLearner final : public Learner {
 public:
  NcmLearner(LearnerConfig config, std::size_t dim) : Learner(std::move(config), dim) {}

  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<NcmLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  std::vector<Eigen::VectorXd> means_;
  std::vector<std::uint64_t> counts_;
};

/// Streaming LDA: per-class running means and one shared covariance.
class SldaLearner final : public Learner {
 public:
  SldaLearner(LearnerConfig config, std::size_t dim);
  SldaLearner(const SldaLearner& other);

  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  /// Shrinkage used by the latest precision refresh (escalates on failure).
  double effective_shrinkage() const;

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<SldaLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  void refresh() const;

  std::vector<Eigen::VectorXd> means_;
  std::vector<std::uint64_t> counts_;
  Eigen::MatrixXd cov_;

  // Discriminant cache: score = weights^T x + bias, rebuilt when dirty.
  mutable std::mutex cache_mutex_;
  mutable bool dirty_ = true;
  mutable Eigen::MatrixXd weights_;
  mutable Eigen::VectorXd bias_;
  mutable double used_shrinkage_ = 0.0;
};

/// Streaming QDA: per-class Welford mean and full covariance.
class SqdaLearner final : public Learner {
 public:
  SqdaLearner(LearnerConfig config, std::size_t dim) : Learner(std::move(config), dim) {}
  SqdaLearner(const SqdaLearner& other);

  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  /// Unbiased covariance of class slot k (zero matrix with fewer than 2 samples).
  Eigen::MatrixXd covariance(std::size_t slot) const;

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<SqdaLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  struct Factor {
    bool isotropic = true;  // cold start: covariance replaced by shrinkage * I
    double shrinkage = 0.0;
    Eigen::MatrixXd lower;
    double log_det = 0.0;
  };
  void refresh() const;

  std::vector<Eigen::VectorXd> means_;
  std::vector<std::uint64_t> counts_;
  std::vector<Eigen::MatrixXd> scatter_;  // Welford sum of outer products

  mutable std::mutex cache_mutex_;
  mutable bool dirty_ = true;
  mutable std::vector<Factor> factors_;
};

/// Streaming Gaussian naive Bayes: per-class Welford mean and per-dim variance.
class SnbLearner final : public Learner {
 public:
  SnbLearner(LearnerConfig config, std::size_t dim) : Learner(std::move(config), dim) {}

  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  /// Unbiased per-dim variance of class slot k (zeros with fewer than 2 samples).
  Eigen::VectorXd variance(std::size_t slot) const;

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<SnbLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::VectorXd> m2_;
  std::vector<std::uint64_t> counts_;
};

class PerceptronLearner final : public Learner {
 public:
  PerceptronLearner(LearnerConfig config, std::size_t dim) : Learner(std::move(config), dim) {}

  const std::vector<Eigen::VectorXd>& weights() const { return weights_; }

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override {
    return std::make_unique<PerceptronLearner>(*this);
  }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  std::vector<Eigen::VectorXd> weights_;
};

/// Streaming one-vs-rest: class mean against the mean of all other samples.
class SovrLearner final : public Learner {
 public:
  SovrLearner(LearnerConfig config, std::size_t dim)
      : Learner(std::move(config), dim), global_mean_(Eigen::VectorXd::Zero(dim)) {}

  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const Eigen::VectorXd& global_mean() const { return global_mean_; }

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<SovrLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  std::vector<Eigen::VectorXd> means_;
  std::vector<std::uint64_t> counts_;
  Eigen::VectorXd global_mean_;
};

/// Multi-centroid NCM with count-weighted nearest-neighbour inference.
class CbclLearner final : public Learner {
 public:
  struct Centroid {
    Eigen::VectorXd center;
    std::uint64_t count;
  };

  CbclLearner(LearnerConfig config, std::size_t dim) : Learner(std::move(config), dim) {}

  const std::vector<std::vector<Centroid>>& centroids() const { return centroids_; }
  const std::vector<std::uint64_t>& totals() const { return totals_; }

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<CbclLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

 private:
  std::vector<std::vector<Centroid>> centroids_;
  std::vector<std::uint64_t> totals_;
};

/// Single linear softmax layer trained by plain SGD (FT).
class LinearHeadLearner : public Learner {
 public:
  LinearHeadLearner(LearnerConfig config, std::size_t dim) : Learner(std::move(config), dim) {}

  const std::vector<Eigen::VectorXd>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override {
    return std::make_unique<LinearHeadLearner>(*this);
  }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;
  Eigen::VectorXd do_scores(const Eigen::VectorXd& x) const override;

  void add_class_row(std::size_t slot);
  /// One SGD step on the mean cross-entropy of the batch; labels are slots.
  void sgd_step(std::span<const Eigen::VectorXd* const> xs, std::span<const std::size_t> slots);

 private:
  std::vector<Eigen::VectorXd> weights_;
  std::vector<double> bias_;
};

/// Online iCaRL: linear head plus a class-balanced replay buffer.
class IcarlLearner final : public LinearHeadLearner {
 public:
  struct Exemplar {
    Eigen::VectorXd x;
    Label label;
  };

  IcarlLearner(LearnerConfig config, std::size_t dim);

  const std::vector<Exemplar>& buffer() const { return buffer_; }
  /// Buffer entries per class, aligned with classes().
  std::vector<std::size_t> buffer_counts() const;
  /// How many buffered vectors have been re-read for replay.
  std::uint64_t replay_reads() const { return replay_reads_; }

  std::size_t param_count() const override;
  std::unique_ptr<Learner> clone() const override { return std::make_unique<IcarlLearner>(*this); }
  void write_state(ByteWriter& w) const override;
  void read_state(ByteReader& r) override;

 protected:
  void do_fit(const Eigen::VectorXd& x, std::size_t slot, bool is_new) override;

 private:
  void insert(const Eigen::VectorXd& x, Label y);

  std::vector<Exemplar> buffer_;
  std::mt19937_64 rng_;
  std::uint64_t replay_reads_ = 0;
};

/// Builds a fresh learner of `config.kind` for input dimension `dim`.
std::unique_ptr<Learner> make_learner(const LearnerConfig& config, std::size_t dim);

/// Versioned little-endian encoding of the full learner state.
std::vector<std::uint8_t> serialize_learner(const Learner& learner);
/// Throws FormatError on bad magic, version mismatch, or corrupt payload.
std::unique_ptr<Learner> deserialize_learner(std::span<const std::uint8_t> bytes);

}  // namespace eocl

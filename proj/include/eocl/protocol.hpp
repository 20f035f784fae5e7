#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "eocl/featio.hpp"
#include "eocl/learners.hpp"
#include "eocl/metrics.hpp"
#include "eocl/pooling.hpp"

namespace eocl {

enum class StreamKind { ClassIid, Iid };

std::string_view to_string(StreamKind kind);

struct StreamOrder {
  StreamKind kind = StreamKind::ClassIid;
  /// Task k learns class class_order[k]; must be a permutation of 0..K-1.
  std::vector<Label> class_order;
  std::uint64_t seed = 0;

  /// Within-class shuffle seed of class `label`.
  std::uint64_t class_seed(Label label) const;
};

/// A seeded order over `num_classes`: the class order is a seeded permutation,
/// and the same seed drives the within-class (or global) shuffles.
StreamOrder make_order(StreamKind kind, std::size_t num_classes, std::uint64_t seed);

struct StreamItem {
  std::size_t sample_id;  // index into the train split
  Label label;
};

/// CLASS_IID: classes in class_order, each class's samples shuffled by its
/// seed. IID: one global shuffle. Throws std::invalid_argument when a record's
/// class is missing from the order or the order is not a permutation.
std::vector<StreamItem> build_stream(const std::vector<Record>& train, const StreamOrder& order,
                                     std::size_t num_classes);

using LearnerFactory = std::function<std::unique_ptr<Learner>(std::size_t dim)>;

struct RunPlan {
  std::shared_ptr<const Dataset> dataset;
  PoolerConfig pooler;
  LearnerConfig learner;
  /// Overrides `learner` when set (test doubles, external learners).
  LearnerFactory learner_factory;
  StreamOrder order;
  std::string train_split = "train";
  std::string eval_split = "test";
  /// Used by run_suite: orderings derived from order.seed.
  std::size_t num_orderings = 5;
};

/// Raised when a pooler or learner fails mid-stream.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at stream position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

struct RunResult {
  AccMatrix acc{1};
  /// Test samples per task, aligned with order.class_order.
  std::vector<std::size_t> task_test_counts;
  std::unique_ptr<Learner> learner;
  /// Per train sample: how often it was pooled and passed to fit_one.
  std::vector<std::uint32_t> pool_counts;
  std::vector<std::uint32_t> fit_counts;
  /// Accuracy over the whole eval split after the last task, computed
  /// directly from predictions.
  double direct_final_acc = 0.0;
  std::vector<Label> final_predictions;
  /// Largest param_count observed at task boundaries.
  std::size_t peak_param_count = 0;
};

/// Validates the plan before touching the stream; throws ConfigError.
void validate(const RunPlan& plan);

/// One pass over the stream: pool, fit_one, and evaluate after every task on
/// all tasks seen so far. For IID streams the stream is cut into K contiguous
/// segments and row k evaluates classes class_order[0..k].
RunResult run_online(const RunPlan& plan);

struct RunFailure {
  std::size_t plan_index;
  std::size_t ordering;
  std::string message;
};

struct SuiteReport {
  std::vector<ReportRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<RunFailure> failures;
};

/// Seed of ordering i of a plan.
std::uint64_t ordering_seed(std::uint64_t base_seed, std::size_t ordering);

/// Runs every plan under its num_orderings orderings with up to `jobs`
/// threads. Row order is deterministic (plan-major, then ordering) regardless
/// of scheduling. Failures are collected, not thrown.
SuiteReport run_suite(const std::vector<RunPlan>& plans, std::size_t jobs = 1);

/// Builds a report row from a finished run.
ReportRow make_row(const RunPlan& plan, const RunResult& result);

}  // namespace eocl

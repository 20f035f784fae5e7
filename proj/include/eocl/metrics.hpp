#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eocl/featio.hpp"
#include "eocl/pooling.hpp"

namespace eocl {

/// Lower-triangular K x K accuracy matrix in percent: at(i, j) is the accuracy
/// on task j's test samples after learning task i. Defined only for j <= i.
class AccMatrix {
 public:
  explicit AccMatrix(std::size_t tasks);

  std::size_t tasks() const { return tasks_; }
  double at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double value);
  /// Row i has exactly i + 1 entries.
  std::span<const double> row(std::size_t i) const;

  friend bool operator==(const AccMatrix&, const AccMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const;

  std::size_t tasks_;
  std::vector<double> values_;
};

/// Test-count-weighted accuracy over every task at the last row.
double final_acc(const AccMatrix& a, std::span<const std::size_t> task_test_counts);
/// Mean of the diagonal.
double plasticity(const AccMatrix& a);
/// Mean over k < K-1 of max_{i in [k, K-2]} A[i][k] - A[K-1][k]. Not clipped;
/// 0 for a single task.
double forgetting(const AccMatrix& a);
/// Mean final-row accuracy over the non-final tasks; 0 for a single task.
double backward_transfer(const AccMatrix& a);

/// (acc2 - acc1) / (100 - acc1), in percent. Requires acc1 < 100.
double relative_gain(double acc1, double acc2);

/// Parameter overhead over the backbone, in percent.
double delta_p(std::size_t param_count, std::uint64_t backbone_param_count);
/// Feature size increment multiplier pooled_dim / d.
double delta_fs(const PoolerConfig& config, std::size_t d);

struct MetricReport {
  double acc = 0.0;
  double bwt = 0.0;
  double forg = 0.0;
  double pla = 0.0;
};

MetricReport compute_metrics(const AccMatrix& a, std::span<const std::size_t> task_test_counts);

/// W1 distance between two empirical distributions. Equal sizes use the
/// sorted coupling; otherwise the exact integral of |F_u - F_v|.
double wasserstein_1d(std::span<const double> u, std::span<const double> v);
/// The CDF-integral route, valid for any sizes.
double wasserstein_1d_cdf(std::span<const double> u, std::span<const double> v);

struct OrderSeparation {
  int order = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t pairs = 0;
};

/// Per moment order, mean and population std over class pairs of the
/// dim-averaged W1 between the classes' distributions of that TAP block.
struct MomentSeparation {
  std::vector<OrderSeparation> orders;
};

/// `features` maps labels to TAP vectors of length order * d. Fewer than two
/// classes yields an empty report.
MomentSeparation moment_separation(const std::map<Label, std::vector<Eigen::VectorXd>>& features,
                                   std::size_t d, int order);

// Report rows ---------------------------------------------------------------

struct ReportRow {
  std::string method;
  std::string pooler;
  std::string dataset;
  std::uint64_t ordering_seed = 0;
  MetricReport metrics;
  std::optional<double> delta_p;
  double delta_fs = 1.0;
};

struct AggregateRow {
  std::string method;
  std::string pooler;
  std::string dataset;
  std::size_t runs = 0;
  MetricReport mean;
  MetricReport stddev;
  std::optional<double> delta_p;
  double delta_fs = 1.0;
};

/// Groups rows by (method, pooler, dataset) in first-appearance order; the
/// std is the sample standard deviation (0 for a single run).
std::vector<AggregateRow> aggregate(std::span<const ReportRow> rows);

inline constexpr const char* kReportColumns[] = {"method", "pooler", "dataset", "ordering_seed",
                                                 "acc",    "bwt",    "forg",    "pla",
                                                 "delta_p", "delta_fs"};

/// Header line plus one line per row, then aggregate mean/std lines whose
/// ordering_seed cell reads "mean" or "std".
std::string rows_to_csv(std::span<const ReportRow> rows, std::span<const AggregateRow> aggregates);

/// {"provenance": ..., "rows": [...], "aggregate": [...]} using the same
/// column names; `provenance_json` must be a JSON value.
std::string rows_to_json(std::span<const ReportRow> rows, std::span<const AggregateRow> aggregates,
                         const std::string& provenance_json = "{}");

}  // namespace eocl

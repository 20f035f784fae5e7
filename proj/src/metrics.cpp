#include "eocl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

namespace eocl {

AccMatrix::AccMatrix(std::size_t tasks) : tasks_(tasks), values_(tasks * (tasks + 1) / 2, 0.0) {
  if (tasks == 0) throw std::invalid_argument("AccMatrix needs at least one task");
}

std::size_t AccMatrix::index(std::size_t i, std::size_t j) const {
  if (i >= tasks_ || j > i)
    throw std::out_of_range("AccMatrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") is undefined");
  return i * (i + 1) / 2 + j;
}

double AccMatrix::at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }

void AccMatrix::set(std::size_t i, std::size_t j, double value) { values_[index(i, j)] = value; }

std::span<const double> AccMatrix::row(std::size_t i) const {
  return std::span<const double>(values_).subspan(index(i, 0), i + 1);
}

double final_acc(const AccMatrix& a, std::span<const std::size_t> counts) {
  if (counts.size() != a.tasks()) throw std::invalid_argument("final_acc: one count per task required");
  const std::size_t last = a.tasks() - 1;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < a.tasks(); ++j) {
    num += a.at(last, j) * static_cast<double>(counts[j]);
    den += static_cast<double>(counts[j]);
  }
  if (den == 0.0) throw std::invalid_argument("final_acc: no test samples");
  return num / den;
}

double plasticity(const AccMatrix& a) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.tasks(); ++k) s += a.at(k, k);
  return s / static_cast<double>(a.tasks());
}

double forgetting(const AccMatrix& a) {
  const std::size_t k_tasks = a.tasks();
  if (k_tasks < 2) return 0.0;
  const std::size_t last = k_tasks - 1;
  double s = 0.0;
  for (std::size_t k = 0; k < last; ++k) {
    double best = a.at(k, k);
    for (std::size_t i = k + 1; i < last; ++i) best = std::max(best, a.at(i, k));
    s += best - a.at(last, k);
  }
  return s / static_cast<double>(last);
}

double backward_transfer(const AccMatrix& a) {
  const std::size_t k_tasks = a.tasks();
  if (k_tasks < 2) return 0.0;
  const std::size_t last = k_tasks - 1;
  double s = 0.0;
  for (std::size_t k = 0; k < last; ++k) s += a.at(last, k);
  return s / static_cast<double>(last);
}

double relative_gain(double acc1, double acc2) {
  if (!(acc1 < 100.0)) throw std::invalid_argument("relative_gain: acc1 must be below 100");
  return 100.0 * (acc2 - acc1) / (100.0 - acc1);
}

double delta_p(std::size_t param_count, std::uint64_t backbone_param_count) {
  if (backbone_param_count == 0) throw std::invalid_argument("delta_p: backbone parameter count is 0");
  return 100.0 * static_cast<double>(param_count) / static_cast<double>(backbone_param_count);
}

double delta_fs(const PoolerConfig& config, std::size_t d) {
  return static_cast<double>(pooled_dim(config, d)) / static_cast<double>(d);
}

MetricReport compute_metrics(const AccMatrix& a, std::span<const std::size_t> counts) {
  return MetricReport{final_acc(a, counts), backward_transfer(a), forgetting(a), plasticity(a)};
}

double wasserstein_1d_cdf(std::span<const double> u, std::span<const double> v) {
  if (u.empty() || v.empty()) throw std::invalid_argument("wasserstein_1d: empty sample");
  std::vector<double> a(u.begin(), u.end());
  std::vector<double> b(v.begin(), v.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const double x = all[i];
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    total += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (all[i + 1] - x);
  }
  return total;
}

double wasserstein_1d(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) return wasserstein_1d_cdf(u, v);
  if (u.empty()) throw std::invalid_argument("wasserstein_1d: empty sample");
  std::vector<double> a(u.begin(), u.end());
  std::vector<double> b(v.begin(), v.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

MomentSeparation moment_separation(const std::map<Label, std::vector<Eigen::VectorXd>>& features,
                                   std::size_t d, int order) {
  MomentSeparation out;
  if (features.size() < 2) return out;
  if (order < 1 || d == 0) throw std::invalid_argument("moment_separation: need order >= 1, d >= 1");
  const auto width = static_cast<Eigen::Index>(d) * order;
  // columns[c][coordinate] = samples of that TAP coordinate for class c
  std::vector<std::vector<std::vector<double>>> columns;
  for (const auto& [label, vecs] : features) {
    if (vecs.empty()) throw std::invalid_argument("moment_separation: class without samples");
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(width));
    for (const auto& v : vecs) {
      if (v.size() != width) throw std::invalid_argument("moment_separation: TAP vector length mismatch");
      for (Eigen::Index i = 0; i < width; ++i) cols[static_cast<std::size_t>(i)].push_back(v[i]);
    }
    columns.push_back(std::move(cols));
  }
  for (int r = 1; r <= order; ++r) {
    std::vector<double> dists;
    for (std::size_t a = 0; a < columns.size(); ++a) {
      for (std::size_t b = a + 1; b < columns.size(); ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const std::size_t idx = static_cast<std::size_t>(r - 1) * d + j;
          s += wasserstein_1d(columns[a][idx], columns[b][idx]);
        }
        dists.push_back(s / static_cast<double>(d));
      }
    }
    const double mean = std::accumulate(dists.begin(), dists.end(), 0.0) / static_cast<double>(dists.size());
    double var = 0.0;
    for (double x : dists) var += (x - mean) * (x - mean);
    var /= static_cast<double>(dists.size());
    out.orders.push_back(OrderSeparation{r, mean, std::sqrt(var), dists.size()});
  }
  return out;
}

std::vector<AggregateRow> aggregate(std::span<const ReportRow> rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<const ReportRow*>> groups;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.method == row.method && a.pooler == row.pooler && a.dataset == row.dataset;
    });
    if (it == out.end()) {
      out.push_back(AggregateRow{row.method, row.pooler, row.dataset, 0, {}, {}, row.delta_p, row.delta_fs});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&row);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& members = groups[g];
    const double n = static_cast<double>(members.size());
    auto stat = [&](auto field, double& mean, double& sd) {
      mean = 0.0;
      for (const auto* r : members) mean += field(r->metrics);
      mean /= n;
      double v = 0.0;
      for (const auto* r : members) v += (field(r->metrics) - mean) * (field(r->metrics) - mean);
      sd = members.size() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0;
    };
    auto& a = out[g];
    a.runs = members.size();
    stat([](const MetricReport& m) { return m.acc; }, a.mean.acc, a.stddev.acc);
    stat([](const MetricReport& m) { return m.bwt; }, a.mean.bwt, a.stddev.bwt);
    stat([](const MetricReport& m) { return m.forg; }, a.mean.forg, a.stddev.forg);
    stat([](const MetricReport& m) { return m.pla; }, a.mean.pla, a.stddev.pla);
    if (a.delta_p) {
      double s = 0.0;
      for (const auto* r : members) s += r->delta_p.value_or(0.0);
      a.delta_p = s / n;
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void csv_line(std::string& out, const std::string& method, const std::string& pooler,
              const std::string& dataset, const std::string& seed, const MetricReport& m,
              const std::optional<double>& dp, const std::string& dfs) {
  out += csv_cell(method) + "," + csv_cell(pooler) + "," + csv_cell(dataset) + "," + seed + "," +
         fmt(m.acc) + "," + fmt(m.bwt) + "," + fmt(m.forg) + "," + fmt(m.pla) + "," +
         (dp ? fmt(*dp) : std::string{}) + "," + dfs + "\n";
}

}  // namespace

std::string rows_to_csv(std::span<const ReportRow> rows, std::span<const AggregateRow> aggregates) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kReportColumns); ++i) {
    if (i) out += ",";
    out += kReportColumns[i];
  }
  out += "\n";
  for (const auto& r : rows)
    csv_line(out, r.method, r.pooler, r.dataset, std::to_string(r.ordering_seed), r.metrics, r.delta_p,
             fmt(r.delta_fs));
  for (const auto& a : aggregates) {
    csv_line(out, a.method, a.pooler, a.dataset, "mean", a.mean, a.delta_p, fmt(a.delta_fs));
    csv_line(out, a.method, a.pooler, a.dataset, "std", a.stddev, std::nullopt, fmt(0.0));
  }
  return out;
}

std::string rows_to_json(std::span<const ReportRow> rows, std::span<const AggregateRow> aggregates,
                         const std::string& provenance_json) {
  using nlohmann::ordered_json;
  auto metrics = [](ordered_json& j, const MetricReport& m) {
    j["acc"] = m.acc;
    j["bwt"] = m.bwt;
    j["forg"] = m.forg;
    j["pla"] = m.pla;
  };
  ordered_json doc;
  doc["provenance"] = ordered_json::parse(provenance_json);
  doc["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["method"] = r.method;
    j["pooler"] = r.pooler;
    j["dataset"] = r.dataset;
    j["ordering_seed"] = r.ordering_seed;
    metrics(j, r.metrics);
    j["delta_p"] = r.delta_p ? ordered_json(*r.delta_p) : ordered_json(nullptr);
    j["delta_fs"] = r.delta_fs;
    doc["rows"].push_back(std::move(j));
  }
  doc["aggregate"] = ordered_json::array();
  for (const auto& a : aggregates) {
    ordered_json j;
    j["method"] = a.method;
    j["pooler"] = a.pooler;
    j["dataset"] = a.dataset;
    j["runs"] = a.runs;
    ordered_json mean;
    metrics(mean, a.mean);
    ordered_json sd;
    metrics(sd, a.stddev);
    j["mean"] = std::move(mean);
    j["std"] = std::move(sd);
    j["delta_p"] = a.delta_p ? ordered_json(*a.delta_p) : ordered_json(nullptr);
    j["delta_fs"] = a.delta_fs;
    doc["aggregate"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

}  // namespace eocl

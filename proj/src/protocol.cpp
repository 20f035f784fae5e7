#include "eocl/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

#include "eocl/error.hpp"
#include "eocl/rng.hpp"

namespace eocl {

namespace {

constexpr std::uint64_t kOrderStream = 0x0D3E;
constexpr std::uint64_t kClassStream = 0xC7A5;
constexpr std::uint64_t kIidStream = 0x11D;
constexpr std::uint64_t kEvalKeyBit = std::uint64_t{1} << 63;

double percent(std::size_t correct, std::size_t total) {
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

std::string_view to_string(StreamKind kind) {
  return kind == StreamKind::ClassIid ? "class_iid" : "iid";
}

std::uint64_t StreamOrder::class_seed(Label label) const {
  return derive_seed(seed, kClassStream, label);
}

StreamOrder make_order(StreamKind kind, std::size_t num_classes, std::uint64_t seed) {
  StreamOrder order;
  order.kind = kind;
  order.seed = seed;
  order.class_order.resize(num_classes);
  std::iota(order.class_order.begin(), order.class_order.end(), Label{0});
  Rng rng(derive_seed(seed, kOrderStream));
  rng.shuffle(order.class_order);
  return order;
}

std::vector<StreamItem> build_stream(const std::vector<Record>& train, const StreamOrder& order,
                                     std::size_t num_classes) {
  std::vector<Label> sorted = order.class_order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i || sorted.size() != num_classes)
      throw std::invalid_argument("class order is not a permutation of the dataset's classes");

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label >= num_classes)
      throw std::invalid_argument("sample " + std::to_string(i) + " has unknown class " +
                                  std::to_string(train[i].label));
    by_class[train[i].label].push_back(i);
  }

  std::vector<StreamItem> stream;
  stream.reserve(train.size());
  if (order.kind == StreamKind::ClassIid) {
    for (Label c : order.class_order) {
      auto ids = by_class[c];
      Rng rng(order.class_seed(c));
      rng.shuffle(ids);
      for (auto id : ids) stream.push_back(StreamItem{id, c});
    }
  } else {
    for (std::size_t i = 0; i < train.size(); ++i) stream.push_back(StreamItem{i, train[i].label});
    Rng rng(derive_seed(order.seed, kIidStream));
    rng.shuffle(stream);
  }
  return stream;
}

void validate(const RunPlan& plan) {
  if (!plan.dataset) throw ConfigError("run plan has no dataset");
  if (plan.train_split == plan.eval_split)
    throw ConfigError("eval split must differ from the train split");
  const auto& ds = *plan.dataset;
  ds.split(plan.train_split);
  const auto& eval = ds.split(plan.eval_split);
  try {
    validate(plan.pooler);
    if (!plan.learner_factory) validate(plan.learner);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (plan.num_orderings < 1) throw ConfigError("num_orderings must be >= 1");
  std::vector<std::size_t> per_class(ds.num_classes(), 0);
  for (const auto& r : eval) {
    if (r.label >= ds.num_classes()) throw ConfigError("eval sample with unknown class");
    ++per_class[r.label];
  }
  for (std::size_t c = 0; c < per_class.size(); ++c)
    if (per_class[c] == 0)
      throw ConfigError("class " + ds.manifest.class_names[c] + " has no samples in split '" +
                        plan.eval_split + "'");
}

RunResult run_online(const RunPlan& plan) {
  validate(plan);
  const Dataset& ds = *plan.dataset;
  const auto& train = ds.split(plan.train_split);
  const auto& eval = ds.split(plan.eval_split);
  const std::size_t k_tasks = ds.num_classes();
  const std::size_t dim = pooled_dim(plan.pooler, ds.manifest.d);

  const auto stream = build_stream(train, plan.order, k_tasks);

  RunResult res;
  res.acc = AccMatrix(k_tasks);
  res.pool_counts.assign(train.size(), 0);
  res.fit_counts.assign(train.size(), 0);
  res.learner = plan.learner_factory ? plan.learner_factory(dim) : make_learner(plan.learner, dim);
  if (!res.learner || res.learner->dim() != dim)
    throw ConfigError("learner dimension does not match pooled dimension " + std::to_string(dim));
  Learner& learner = *res.learner;

  // Task boundaries within the stream.
  std::vector<std::size_t> task_end(k_tasks, 0);
  if (plan.order.kind == StreamKind::ClassIid) {
    std::vector<std::size_t> per_class(k_tasks, 0);
    for (const auto& r : train) ++per_class[r.label];
    std::size_t end = 0;
    for (std::size_t k = 0; k < k_tasks; ++k) task_end[k] = end += per_class[plan.order.class_order[k]];
  } else {
    for (std::size_t k = 0; k < k_tasks; ++k) task_end[k] = stream.size() * (k + 1) / k_tasks;
  }

  // Evaluation vectors are pooled once; they never reach fit_one.
  std::vector<std::size_t> task_of_class(k_tasks);
  for (std::size_t k = 0; k < k_tasks; ++k) task_of_class[plan.order.class_order[k]] = k;
  std::vector<Eigen::VectorXd> eval_vecs;
  eval_vecs.reserve(eval.size());
  std::vector<std::vector<std::size_t>> eval_by_task(k_tasks);
  for (std::size_t i = 0; i < eval.size(); ++i) {
    eval_vecs.push_back(pool(plan.pooler, eval[i].sequence, kEvalKeyBit | i).values);
    eval_by_task[task_of_class[eval[i].label]].push_back(i);
  }
  res.task_test_counts.resize(k_tasks);
  for (std::size_t k = 0; k < k_tasks; ++k) res.task_test_counts[k] = eval_by_task[k].size();

  std::vector<Label> predictions(eval.size(), 0);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < k_tasks; ++k) {
    for (; pos < task_end[k]; ++pos) {
      const auto& item = stream[pos];
      try {
        auto pooled = pool(plan.pooler, train[item.sample_id].sequence, item.sample_id);
        ++res.pool_counts[item.sample_id];
        learner.fit_one(pooled.values, item.label);
        ++res.fit_counts[item.sample_id];
      } catch (const std::exception& e) {
        throw RunError(learner.name() + "/" + plan.pooler.tag() + ": " + e.what(), pos);
      }
    }
    res.peak_param_count = std::max(res.peak_param_count, learner.param_count());
    if (learner.classes().empty()) {
      for (std::size_t j = 0; j <= k; ++j) res.acc.set(k, j, 0.0);
      continue;
    }
    for (std::size_t j = 0; j <= k; ++j) {
      std::size_t correct = 0;
      for (std::size_t i : eval_by_task[j]) {
        predictions[i] = learner.predict(eval_vecs[i]);
        correct += predictions[i] == eval[i].label;
      }
      res.acc.set(k, j, percent(correct, eval_by_task[j].size()));
    }
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) correct += predictions[i] == eval[i].label;
  res.direct_final_acc = percent(correct, eval.size());
  res.final_predictions = std::move(predictions);
  return res;
}

std::uint64_t ordering_seed(std::uint64_t base_seed, std::size_t ordering) {
  return derive_seed(base_seed, 0x0DE5, ordering);
}

ReportRow make_row(const RunPlan& plan, const RunResult& result) {
  ReportRow row;
  row.method = result.learner->name();
  row.pooler = plan.pooler.tag();
  row.dataset = plan.dataset->name;
  row.ordering_seed = plan.order.seed;
  row.metrics = compute_metrics(result.acc, result.task_test_counts);
  const auto backbone = plan.dataset->manifest.backbone_param_count;
  if (backbone > 0) row.delta_p = delta_p(result.learner->param_count(), backbone);
  row.delta_fs = delta_fs(plan.pooler, plan.dataset->manifest.d);
  return row;
}

SuiteReport run_suite(const std::vector<RunPlan>& plans, std::size_t jobs) {
  struct Cell {
    std::size_t plan;
    std::size_t ordering;
  };
  std::vector<Cell> cells;
  for (std::size_t p = 0; p < plans.size(); ++p)
    for (std::size_t o = 0; o < std::max<std::size_t>(plans[p].num_orderings, 1); ++o)
      cells.push_back(Cell{p, o});

  std::vector<std::optional<ReportRow>> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& cell = cells[i];
      RunPlan plan = plans[cell.plan];
      try {
        if (!plan.dataset) throw ConfigError("run plan has no dataset");
        plan.order = make_order(plan.order.kind, plan.dataset->num_classes(),
                                ordering_seed(plans[cell.plan].order.seed, cell.ordering));
        const RunResult result = run_online(plan);
        rows[i] = make_row(plan, result);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(cells.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  SuiteReport report;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (rows[i]) {
      report.rows.push_back(std::move(*rows[i]));
    } else {
      report.failures.push_back(RunFailure{cells[i].plan, cells[i].ordering, errors[i]});
    }
  }
  report.aggregates = aggregate(report.rows);
  return report;
}

}  // namespace eocl

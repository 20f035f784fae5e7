#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "eocl/error.hpp"
#include "eocl/learners.hpp"
#include "support.hpp"

using namespace eocl;
using eocl::testing::random_vector;

namespace {

constexpr LearnerKind kAllKinds[] = {LearnerKind::Ft,  LearnerKind::Prcp, LearnerKind::Ncm,
                                     LearnerKind::Cbcl, LearnerKind::Sovr, LearnerKind::Snb,
                                     LearnerKind::Slda, LearnerKind::Sqda, LearnerKind::Icarl};

LearnerConfig config_of(LearnerKind kind) {
  LearnerConfig c;
  c.kind = kind;
  return c;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

struct Stream {
  std::vector<Eigen::VectorXd> xs;
  std::vector<Label> ys;
};

// Gaussian blobs around well-separated class centres.
Stream blob_stream(std::uint64_t seed, std::size_t n, Eigen::Index dim, std::uint32_t classes,
                   double spread = 1.0) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> centres;
  for (std::uint32_t c = 0; c < classes; ++c) centres.push_back(random_vector(rng, dim, -4, 4));
  Stream s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<Label>(rng.index(classes));
    Eigen::VectorXd x = centres[y];
    for (Eigen::Index j = 0; j < dim; ++j) x[j] += spread * rng.normal();
    s.xs.push_back(x);
    s.ys.push_back(y);
  }
  return s;
}

void fit_all(Learner& l, const Stream& s) {
  for (std::size_t i = 0; i < s.xs.size(); ++i) l.fit_one(s.xs[i], s.ys[i]);
}

std::vector<Label> predict_all(const Learner& l, const std::vector<Eigen::VectorXd>& probes) {
  std::vector<Label> out;
  for (const auto& p : probes) out.push_back(l.predict(p));
  return out;
}

std::vector<Eigen::VectorXd> probes(std::uint64_t seed, std::size_t n, Eigen::Index dim) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_vector(rng, dim, -6, 6));
  return out;
}

}  // namespace

TEST_CASE("kind names round-trip") {
  for (auto k : kAllKinds) CHECK(learner_kind_from_string(to_string(k)) == k);
  CHECK(learner_kind_from_string("slda") == LearnerKind::Slda);
  CHECK(learner_kind_from_string("iCaRL") == LearnerKind::Icarl);
  CHECK_FALSE(learner_kind_from_string("svm").has_value());
}

TEST_CASE("config validation") {
  for (auto k : kAllKinds) CHECK_NOTHROW(validate(config_of(k)));
  auto c = config_of(LearnerKind::Slda);
  c.shrinkage = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = config_of(LearnerKind::Ft);
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = config_of(LearnerKind::Icarl);
  c.buffer_capacity = 0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = config_of(LearnerKind::Cbcl);
  c.cbcl_distance = -1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = config_of(LearnerKind::Snb);
  c.variance_floor = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  CHECK_THROWS_AS(make_learner(config_of(LearnerKind::Ncm), 0), std::invalid_argument);
  CHECK_THROWS_AS(make_learner(config_of(LearnerKind::External), 3), std::invalid_argument);
}

TEST_CASE("input validation is shared by every learner") {
  for (auto k : kAllKinds) {
    CAPTURE(to_string(k));
    auto l = make_learner(config_of(k), 3);
    CHECK(l->kind() == k);
    CHECK(l->dim() == 3);
    CHECK_THROWS_AS(l->predict(vec({1, 2, 3})), std::logic_error);
    CHECK_THROWS_AS(l->fit_one(vec({1, 2}), 0), std::invalid_argument);
    CHECK_THROWS_AS(l->fit_one(vec({1, std::numeric_limits<double>::quiet_NaN(), 3}), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(l->fit_one(vec({1, std::numeric_limits<double>::infinity(), 3}), 0),
                    std::invalid_argument);
    CHECK(l->samples_seen() == 0);
    l->fit_one(vec({1, 2, 3}), 4);
    CHECK(l->samples_seen() == 1);
    CHECK(l->classes() == std::vector<Label>{4});
    CHECK(l->predict(vec({0, 0, 0})) == 4);
    CHECK_THROWS_AS(l->predict(vec({0, 0})), std::invalid_argument);
    CHECK(l->scores(vec({0, 0, 0})).size() == 1);
  }
}

TEST_CASE("classes stay sorted regardless of arrival order") {
  for (auto k : kAllKinds) {
    auto l = make_learner(config_of(k), 2);
    for (Label y : {7u, 2u, 9u, 2u, 0u}) l->fit_one(vec({double(y), 1.0}), y);
    CHECK(l->classes() == std::vector<Label>{0, 2, 7, 9});
  }
}

TEST_CASE("argmax breaks ties toward the first index") {
  CHECK(argmax(vec({1, 3, 3, 2})) == 1);
  CHECK(argmax(vec({5, 5, 5})) == 0);
  // Two classes with identical prototypes: predict returns the lower label.
  for (auto k : {LearnerKind::Ncm, LearnerKind::Cbcl, LearnerKind::Slda, LearnerKind::Snb,
                 LearnerKind::Sovr}) {
    auto l = make_learner(config_of(k), 2);
    l->fit_one(vec({1, 1}), 5);
    l->fit_one(vec({1, 1}), 3);
    CAPTURE(to_string(k));
    CHECK(l->predict(vec({0.3, -2})) == 3);
  }
}

TEST_CASE("NCM examples and parameter count") {
  NcmLearner ncm(config_of(LearnerKind::Ncm), 2);
  ncm.fit_one(vec({0, 0}), 0);
  ncm.fit_one(vec({2, 2}), 0);
  CHECK(ncm.means()[0] == vec({1, 1}));
  CHECK(ncm.counts()[0] == 2);

  NcmLearner two(config_of(LearnerKind::Ncm), 2);
  two.fit_one(vec({0, 0}), 0);
  two.fit_one(vec({2, 2}), 1);
  CHECK(two.predict(vec({1.9, 1.9})) == 1);
  CHECK(two.scores(vec({0, 0}))[0] == 0.0);
  CHECK(two.scores(vec({0, 0}))[1] == doctest::Approx(-std::sqrt(8.0)));

  // K classes, dim m: K*m means plus K counts.
  NcmLearner big(config_of(LearnerKind::Ncm), 80);
  for (Label y = 0; y < 10; ++y) big.fit_one(Eigen::VectorXd::Constant(80, y), y);
  CHECK(big.param_count() == 10 * 80 + 10);
}

TEST_CASE("SLDA hand trace and closed-form discriminant") {
  SldaLearner slda(config_of(LearnerKind::Slda), 1);
  slda.fit_one(vec({0}), 0);
  slda.fit_one(vec({2}), 1);
  CHECK(slda.means()[0] == vec({0}));
  CHECK(slda.means()[1] == vec({2}));
  CHECK(slda.covariance()(0, 0) == 0.0);
  // Lambda = 1/eps, score_k = mu_k x / eps - mu_k^2 / (2 eps).
  CHECK(slda.predict(vec({1.9})) == 1);
  CHECK(slda.predict(vec({0.9})) == 0);
  const auto s = slda.scores(vec({1.9}));
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx((2 * 1.9 - 2.0) / 1e-4));
  CHECK(slda.effective_shrinkage() == 1e-4);

  // A second sample of class 0 at 1: N = 2, Delta = 2 * 1 / 3, Sigma = (0 + 2/3) / 3.
  slda.fit_one(vec({1}), 0);
  CHECK(slda.covariance()(0, 0) == doctest::Approx(2.0 / 9.0));
  CHECK(slda.means()[0] == vec({0.5}));

  SldaLearner big(config_of(LearnerKind::Slda), 6);
  for (Label y = 0; y < 4; ++y) big.fit_one(Eigen::VectorXd::Constant(6, y), y);
  CHECK(big.param_count() == 4 * 7 + 36);
}

TEST_CASE("SLDA covariance matches the high-precision replay") {
  const auto s = blob_stream(21, 3000, 4, 5, 2.0);
  SldaLearner slda(config_of(LearnerKind::Slda), 4);
  fit_all(slda, s);
  const auto ref = eocl::testing::slda_covariance_replay(s.xs, s.ys);
  CHECK(eocl::testing::max_abs_diff(slda.covariance(), ref) <= 1e-9);
  CHECK((slda.covariance() - slda.covariance().transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("SLDA shrinkage escalates and then fails") {
  SldaLearner slda(config_of(LearnerKind::Slda), 1);
  slda.fit_one(vec({0}), 0);
  slda.fit_one(vec({2}), 1);
  auto bytes = serialize_learner(slda);
  // The covariance is the trailing f64 of the payload.
  auto with_cov = [&](double v) {
    auto b = bytes;
    std::memcpy(b.data() + b.size() - 8, &v, 8);
    return deserialize_learner(b);
  };
  auto mild = with_cov(-1e-3);
  CHECK(mild->predict(vec({1.9})) == 1);
  CHECK(dynamic_cast<const SldaLearner&>(*mild).effective_shrinkage() == doctest::Approx(1e-3));
  auto broken = with_cov(-1.0);
  CHECK_THROWS_AS(broken->predict(vec({1.0})), NumericalError);
}

TEST_CASE("SLDA discriminant is translation covariant") {
  const auto s = blob_stream(22, 500, 3, 4);
  const Eigen::VectorXd shift = vec({10, -4, 2.5});
  Stream moved = s;
  for (auto& x : moved.xs) x += shift;
  SldaLearner a(config_of(LearnerKind::Slda), 3);
  SldaLearner b(config_of(LearnerKind::Slda), 3);
  fit_all(a, s);
  fit_all(b, moved);
  for (const auto& p : probes(23, 100, 3)) {
    const auto sa = a.scores(p);
    const auto sb = b.scores(p + shift);
    // Scores shift by a class-independent constant.
    const Eigen::VectorXd da = sa.array() - sa[0];
    const Eigen::VectorXd db = sb.array() - sb[0];
    CHECK((da - db).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + da.cwiseAbs().maxCoeff()));
    CHECK(a.predict(p) == b.predict(p + shift));
  }
}

TEST_CASE("SQDA and SNB Welford statistics match two-pass batch values") {
  const auto s = blob_stream(24, 4000, 4, 3, 1.5);
  SqdaLearner sqda(config_of(LearnerKind::Sqda), 4);
  SnbLearner snb(config_of(LearnerKind::Snb), 4);
  fit_all(sqda, s);
  fit_all(snb, s);
  for (Label y = 0; y < 3; ++y) {
    std::vector<Eigen::VectorXd> members;
    for (std::size_t i = 0; i < s.xs.size(); ++i)
      if (s.ys[i] == y) members.push_back(s.xs[i]);
    const auto mean = eocl::testing::batch_mean(members);
    const auto cov = eocl::testing::batch_covariance(members);
    CHECK(eocl::testing::max_abs_diff(sqda.means()[y], mean) <= 1e-9);
    CHECK(eocl::testing::max_abs_diff(sqda.covariance(y), cov) <= 1e-9);
    CHECK(eocl::testing::max_abs_diff(snb.means()[y], mean) <= 1e-9);
    CHECK(eocl::testing::max_abs_diff(snb.variance(y), cov.diagonal()) <= 1e-9);
    CHECK((snb.variance(y).array() >= 0.0).all());
  }
}

TEST_CASE("SQDA cold start and scoring") {
  SqdaLearner sqda(config_of(LearnerKind::Sqda), 2);
  sqda.fit_one(vec({0, 0}), 0);
  CHECK(sqda.covariance(0) == Eigen::MatrixXd::Zero(2, 2));
  sqda.fit_one(vec({4, 4}), 1);
  // Both classes below m + 1 samples: isotropic eps*I, so nearest mean wins.
  CHECK(sqda.predict(vec({3, 3})) == 1);
  CHECK(sqda.predict(vec({1, 1})) == 0);

  // With enough samples, the class-specific spread decides.
  SqdaLearner wide(config_of(LearnerKind::Sqda), 1);
  Rng rng(25);
  for (int i = 0; i < 400; ++i) {
    wide.fit_one(vec({0.1 * rng.normal()}), 0);
    wide.fit_one(vec({3.0 * rng.normal()}), 1);
  }
  CHECK(wide.predict(vec({0.05})) == 0);
  CHECK(wide.predict(vec({1.0})) == 1);
  // Score equals the Gaussian log density up to the shared constant.
  const double x = 0.7;
  const auto sc = wide.scores(vec({x}));
  for (std::size_t k = 0; k < 2; ++k) {
    const double var = wide.covariance(k)(0, 0) + 1e-4;
    const double mu = wide.means()[k][0];
    const double expect = std::log(0.5) - 0.5 * std::log(var) - 0.5 * (x - mu) * (x - mu) / var;
    CHECK(sc[static_cast<Eigen::Index>(k)] == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(wide.param_count() == 2 * (1 + 1 + 1));
}

TEST_CASE("SNB variance floor and scoring") {
  SnbLearner snb(config_of(LearnerKind::Snb), 2);
  snb.fit_one(vec({1, 1}), 0);
  CHECK(snb.variance(0) == Eigen::VectorXd::Zero(2));
  CHECK(std::isfinite(snb.scores(vec({1, 1}))[0]));
  snb.fit_one(vec({1, 3}), 0);
  snb.fit_one(vec({5, 5}), 1);
  snb.fit_one(vec({7, 5}), 1);
  // Class 0 dim 0 has zero variance: floored to 1e-8, so x0 = 1 strongly favours class 0.
  CHECK(snb.predict(vec({1, 4})) == 0);
  CHECK(snb.variance(1) == vec({2, 0}));
  CHECK(snb.param_count() == 2 * (2 * 2 + 1));
}

TEST_CASE("PRCP updates only on mistakes") {
  PerceptronLearner p(config_of(LearnerKind::Prcp), 2);
  p.fit_one(vec({1, 0}), 0);
  p.fit_one(vec({0, 1}), 1);
  CHECK(p.weights()[0] == vec({1, 0}));
  CHECK(p.weights()[1] == vec({0, 1}));
  p.fit_one(vec({1, 0}), 0);
  CHECK(p.weights()[0] == vec({1, 0}));
  CHECK(p.weights()[1] == vec({0, 1}));
  // Misclassified: (1, 0.5) under label 1 scores 1 vs 0.5.
  p.fit_one(vec({1, 0.5}), 1);
  CHECK(p.weights()[0] == vec({0, -0.5}));
  CHECK(p.weights()[1] == vec({1, 1.5}));
}

TEST_CASE("SOVR rest means") {
  SovrLearner s(config_of(LearnerKind::Sovr), 1);
  s.fit_one(vec({2}), 0);
  // Only one class: rest mean is the zero vector, score = mu * x.
  CHECK(s.scores(vec({3}))[0] == doctest::Approx(6.0));
  s.fit_one(vec({4}), 0);
  s.fit_one(vec({-1}), 1);
  CHECK(s.global_mean()[0] == doctest::Approx(5.0 / 3.0));
  // Class 0: mu 3, rest -1 -> 4x. Class 1: mu -1, rest 3 -> -4x.
  const auto sc = s.scores(vec({0.5}));
  CHECK(sc[0] == doctest::Approx(2.0));
  CHECK(sc[1] == doctest::Approx(-2.0));
  CHECK(s.param_count() == 2 * 2 + 2);
}

TEST_CASE("CBCL with infinite distance equals NCM") {
  const auto s = blob_stream(26, 600, 5, 4);
  NcmLearner ncm(config_of(LearnerKind::Ncm), 5);
  CbclLearner cbcl(config_of(LearnerKind::Cbcl), 5);
  fit_all(ncm, s);
  fit_all(cbcl, s);
  for (std::size_t k = 0; k < 4; ++k) {
    REQUIRE(cbcl.centroids()[k].size() == 1);
    CHECK(cbcl.centroids()[k][0].center == ncm.means()[k]);
    CHECK(cbcl.totals()[k] == ncm.counts()[k]);
  }
  // Equal class counts: identical predictions on every probe.
  Stream balanced;
  Rng rng(27);
  for (int i = 0; i < 100; ++i)
    for (Label y = 0; y < 3; ++y) {
      balanced.xs.push_back(random_vector(rng, 5) + Eigen::VectorXd::Constant(5, 3.0 * y));
      balanced.ys.push_back(y);
    }
  NcmLearner n2(config_of(LearnerKind::Ncm), 5);
  CbclLearner c2(config_of(LearnerKind::Cbcl), 5);
  fit_all(n2, balanced);
  fit_all(c2, balanced);
  const auto ps = probes(28, 500, 5);
  CHECK(predict_all(n2, ps) == predict_all(c2, ps));
}

TEST_CASE("CBCL with a finite distance spawns centroids") {
  auto cfg = config_of(LearnerKind::Cbcl);
  cfg.cbcl_distance = 1.0;
  CbclLearner c(cfg, 1);
  c.fit_one(vec({0}), 0);
  c.fit_one(vec({0.5}), 0);  // merges: centre 0.25
  c.fit_one(vec({10}), 0);   // new centroid
  c.fit_one(vec({5}), 1);
  REQUIRE(c.centroids()[0].size() == 2);
  CHECK(c.centroids()[0][0].center[0] == doctest::Approx(0.25));
  CHECK(c.centroids()[0][0].count == 2);
  CHECK(c.centroids()[0][1].count == 1);
  CHECK(c.totals()[0] == 3);
  // Scores are -distance / n_k using the nearest centroid.
  const auto sc = c.scores(vec({9}));
  CHECK(sc[0] == doctest::Approx(-1.0 / 3.0));
  CHECK(sc[1] == doctest::Approx(-4.0));
  CHECK(c.param_count() == 2 + 3 * 2);
  for (const auto& cs : c.centroids())
    for (const auto& ce : cs) CHECK(ce.count >= 1);
}

TEST_CASE("NCM means are permutation invariant") {
  auto s = blob_stream(29, 800, 4, 3);
  NcmLearner a(config_of(LearnerKind::Ncm), 4);
  fit_all(a, s);
  Rng rng(30);
  std::vector<std::size_t> idx(s.xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  NcmLearner b(config_of(LearnerKind::Ncm), 4);
  for (auto i : idx) b.fit_one(s.xs[i], s.ys[i]);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(eocl::testing::max_abs_diff(a.means()[k], b.means()[k]) <= 1e-9);
  const auto ps = probes(31, 300, 4);
  CHECK(predict_all(a, ps) == predict_all(b, ps));
}

TEST_CASE("FT with zero learning rate never changes predictions") {
  auto cfg = config_of(LearnerKind::Ft);
  cfg.learning_rate = 0.0;
  LinearHeadLearner ft(cfg, 3);
  const auto s = blob_stream(32, 200, 3, 3);
  for (Label y = 0; y < 3; ++y) ft.fit_one(Eigen::VectorXd::Constant(3, y), y);
  const auto ps = probes(33, 100, 3);
  const auto before = predict_all(ft, ps);
  fit_all(ft, s);
  CHECK(predict_all(ft, ps) == before);
  CHECK(ft.param_count() == 3 * 4);
}

TEST_CASE("FT learns the newest class and new rows start at zero") {
  LinearHeadLearner ft(config_of(LearnerKind::Ft), 2);
  ft.fit_one(vec({1, 0}), 0);
  // A single class has zero softmax gradient.
  CHECK(ft.weights()[0].norm() == 0.0);
  ft.fit_one(vec({0, 1}), 1);
  // Softmax gradient step from zero rows: w_1 moves toward x, w_0 away from it.
  CHECK(ft.weights()[1][1] > 0.0);
  CHECK(ft.weights()[0][1] < 0.0);
  const auto sum_bias = ft.bias()[0] + ft.bias()[1];
  CHECK(std::abs(sum_bias) < 1e-12);
}

TEST_CASE("ICARL buffer stays bounded and class balanced") {
  auto cfg = config_of(LearnerKind::Icarl);
  cfg.buffer_capacity = 30;
  IcarlLearner icarl(cfg, 3);
  Rng rng(34);
  std::size_t seen = 0;
  for (Label y = 0; y < 7; ++y) {
    for (int i = 0; i < 25; ++i) {
      icarl.fit_one(random_vector(rng, 3), y);
      ++seen;
      REQUIRE(icarl.buffer().size() <= 30);
    }
    // Each class arrives with more samples than its fair share: balanced once it ends.
    if (seen > 30) {
      const auto counts = icarl.buffer_counts();
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      const double balance = 30.0 / static_cast<double>(counts.size());
      CHECK(static_cast<double>(*hi) - balance <= 1.0);
      CHECK(balance - static_cast<double>(*lo) <= 1.0);
    }
  }
  CHECK(icarl.buffer().size() == 30);
  CHECK(icarl.replay_reads() == seen - 1);
  CHECK(icarl.param_count() == 7 * 4 + 30 * 4);
}

TEST_CASE("predict is const and order independent") {
  for (auto k : kAllKinds) {
    CAPTURE(to_string(k));
    auto l = make_learner(config_of(k), 4);
    fit_all(*l, blob_stream(35, 300, 4, 4));
    const auto ps = probes(36, 200, 4);
    const auto forward = predict_all(*l, ps);
    std::vector<Label> backward(ps.size());
    for (std::size_t i = ps.size(); i-- > 0;) backward[i] = l->predict(ps[i]);
    CHECK(forward == backward);
    std::vector<std::vector<Label>> threaded(4);
    {
      std::vector<std::jthread> threads;
      for (auto& out : threaded) threads.emplace_back([&] { out = predict_all(*l, ps); });
    }
    for (const auto& t : threaded) CHECK(t == forward);
  }
}

TEST_CASE("serialization round-trips every learner") {
  for (auto k : kAllKinds) {
    CAPTURE(to_string(k));
    auto cfg = config_of(k);
    cfg.buffer_capacity = 50;
    cfg.seed = 77;
    auto l = make_learner(cfg, 4);

    const auto empty = deserialize_learner(serialize_learner(*l));
    CHECK(empty->kind() == k);
    CHECK(empty->classes().empty());
    CHECK(serialize_learner(*empty) == serialize_learner(*l));

    const auto s = blob_stream(37, 400, 4, 5);
    fit_all(*l, s);
    const auto bytes = serialize_learner(*l);
    auto back = deserialize_learner(bytes);
    CHECK(back->samples_seen() == l->samples_seen());
    CHECK(back->classes() == l->classes());
    CHECK(back->param_count() == l->param_count());
    CHECK(serialize_learner(*back) == bytes);
    const auto ps = probes(38, 100, 4);
    CHECK(predict_all(*back, ps) == predict_all(*l, ps));
    for (const auto& p : ps) CHECK(back->scores(p) == l->scores(p));

    // The restored learner continues identically, including random draws.
    const auto more = blob_stream(39, 100, 4, 6);
    auto clone = l->clone();
    fit_all(*l, more);
    fit_all(*back, more);
    fit_all(*clone, more);
    CHECK(serialize_learner(*back) == serialize_learner(*l));
    CHECK(serialize_learner(*clone) == serialize_learner(*l));

    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1})
      CHECK_THROWS_AS(deserialize_learner(std::span(bytes.data(), cut)), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_learner(trailing), FormatError);
    auto bad_magic = bytes;
    bad_magic[0] ^= 0xFF;
    CHECK_THROWS_AS(deserialize_learner(bad_magic), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(deserialize_learner(bad_version), FormatError);
  }
}

TEST_CASE("state size does not grow with the stream") {
  for (auto k : kAllKinds) {
    CAPTURE(to_string(k));
    auto cfg = config_of(k);
    cfg.buffer_capacity = 40;
    auto l = make_learner(cfg, 3);
    fit_all(*l, blob_stream(40, 200, 3, 3));
    const auto after_200 = l->param_count();
    fit_all(*l, blob_stream(40, 2000, 3, 3));
    CHECK(l->param_count() == after_200);
  }
}

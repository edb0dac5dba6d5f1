#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hasl/estimator.hpp"
#include "hasl/models.hpp"
#include "hasl/oscillation.hpp"

using namespace hasl;
using Kind = HaslExpression::Kind;

TEST(HaslParser, ExpectationOfLast) {
  const auto e = parse_hasl("E[last(t)]");
  EXPECT_EQ(e.kind, Kind::Expectation);
  ASSERT_EQ(e.leaves().size(), 1u);
  EXPECT_EQ(e.leaves()[0].op, PathOp::Last);
  EXPECT_EQ(to_string(e), "E[last(t)]");
  EXPECT_EQ(to_string(parse_hasl("E(last(t))")), "E[last(t)]");
}

TEST(HaslParser, PdfWithDiscretisation) {
  const auto e = parse_hasl("PDF(last(t),0.1,0,10)");
  EXPECT_EQ(e.kind, Kind::Pdf);
  EXPECT_DOUBLE_EQ(e.s, 0.1);
  EXPECT_DOUBLE_EQ(e.l, 0.0);
  EXPECT_DOUBLE_EQ(e.h, 10.0);
  EXPECT_EQ(e.bin_count(), 100u);
  EXPECT_EQ(parse_hasl("CDF(t, 0.5, 0, 2)").kind, Kind::Cdf);
}

TEST(HaslParser, RatioOfLastsFoldsIntoOneLeaf) {
  const auto e = parse_hasl("E[last(Smax)/n_M]");
  EXPECT_EQ(to_string(e), "E[last(Smax/n_M)]");
  ASSERT_EQ(e.leaves().size(), 1u);
}

TEST(HaslParser, MixedOperatorsKeepSeparateLeaves) {
  const auto e = parse_hasl("E[max(a) - min(a) + 2]");
  EXPECT_EQ(e.leaves().size(), 2u);
  EXPECT_EQ(parse_hasl("P").kind, Kind::Probability);
}

TEST(HaslParser, Errors) {
  EXPECT_THROW(parse_hasl("E[last(t)"), ParseError);
  EXPECT_THROW(parse_hasl("F[t]"), ParseError);
  EXPECT_THROW(parse_hasl("E[last(max(t))]"), ParseError);
  EXPECT_THROW(parse_hasl("E[median(t)]"), ParseError);
  EXPECT_THROW(parse_hasl("PDF(t, 0, 0, 1)"), ParseError);
  EXPECT_THROW(parse_hasl("PDF(t, 0.1, 2, 1)"), ParseError);
  EXPECT_THROW(parse_hasl("PDF(t, x, 0, 1)"), ParseError);
  try {
    parse_hasl("E[last(t)] extra");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 11u);
  }
}

TEST(Bins, IndexAndConventions) {
  EXPECT_EQ(bin_index(3.14, 0.1, 0, 10), 31u);
  EXPECT_EQ(bin_index(0.0, 0.1, 0, 10), 0u);
  EXPECT_EQ(bin_index(10.0, 0.1, 0, 10), 99u);
  EXPECT_EQ(bin_index(-0.01, 0.1, 0, 10), std::nullopt);
  EXPECT_EQ(bin_index(10.01, 0.1, 0, 10), std::nullopt);
  EXPECT_EQ(bin_index(std::nan(""), 0.1, 0, 10), std::nullopt);
  EXPECT_EQ(bin_count(0.1, 0, 50), 500u);
  EXPECT_EQ(bin_count(0.3, 0, 1), 4u);
  EXPECT_EQ(bin_index(1.0, 0.3, 0, 1), 3u);
}

TEST(Statistics, WelfordMatchesTwoPass) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(1e6, 3.0);
  std::vector<double> xs(5000);
  MeanAccumulator acc;
  for (auto& x : xs) acc.add(x = g(rng));
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(acc.mean(), mean, 1e-6);
  EXPECT_NEAR(acc.variance(), ss / (xs.size() - 1), 1e-6);
}

TEST(Statistics, StudentQuantiles) {
  EXPECT_NEAR(student_t_quantile(0.99, 1), 63.656741, 1e-5);
  EXPECT_NEAR(student_t_quantile(0.95, 10), 2.228139, 1e-6);
  EXPECT_NEAR(student_t_quantile(0.99, 1000000), 2.575835, 1e-5);
}

class Erlang : public ::testing::Test {
 protected:
  static EstimationReport run(double lambda, std::int64_t N, std::uint64_t seed, CiPolicy p, unsigned workers = 1,
                              const std::string& expr = "E[last(t)]") {
    const GspnModel m = poisson_source(lambda);
    const Lha a = build_counter("fire", N);
    RunConfig rc;
    rc.seed = seed;
    rc.workers = workers;
    return estimate(parse_hasl(expr), m, a, p, rc);
  }
};

TEST_F(Erlang, ConvergesToAnalyticMean) {
  CiPolicy p;
  p.halfwidth = 0.02;
  const auto r = run(2.0, 3, 7, p);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.ci_low, 1.5);
  EXPECT_GE(r.ci_high, 1.5);
  EXPECT_LE(r.halfwidth, 0.02);
  EXPECT_EQ(r.samples_used % 64, 0u);
  EXPECT_LE(r.ci_low, r.estimate);
  EXPECT_GE(r.ci_high, r.estimate);
}

TEST_F(Erlang, CoverageOverMetaRuns) {
  for (const auto& [N, lambda] : std::vector<std::pair<int, double>>{{1, 0.5}, {2, 2.0}, {5, 0.5}}) {
    const double truth = N / lambda;
    int covered = 0;
    CiPolicy p;
    p.min_samples = 200;
    p.batch = 200;
    for (std::uint64_t k = 0; k < 100; ++k) {
      const auto r = run(lambda, N, 1000 + k, p);
      covered += (r.ci_low <= truth && truth <= r.ci_high) ? 1 : 0;
    }
    EXPECT_GE(covered, 95) << "N=" << N << " lambda=" << lambda;
  }
}

TEST_F(Erlang, ReportIsIndependentOfWorkerCount) {
  CiPolicy p;
  p.min_samples = 300;
  const auto a = run(2.0, 3, 99, p, 1);
  const auto b = run(2.0, 3, 99, p, 4);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.ci_low, b.ci_low);
  EXPECT_EQ(a.samples_used, b.samples_used);
}

TEST_F(Erlang, RelativeWidthTarget) {
  CiPolicy p;
  p.relative_width = 0.02;
  const auto r = run(2.0, 3, 5, p);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.halfwidth, 0.02 * r.estimate);
}

TEST_F(Erlang, ProbabilityOfAlwaysAcceptingAutomatonIsOne) {
  CiPolicy p;
  const auto r = run(2.0, 3, 5, p, 1, "P");
  EXPECT_EQ(r.estimate, 1.0);
  EXPECT_EQ(r.ci_low, 1.0);
  EXPECT_EQ(r.ci_high, 1.0);
}

TEST_F(Erlang, HistogramMassAccounting) {
  CiPolicy p;
  p.min_samples = 1000;
  const auto r = run(2.0, 3, 3, p, 2, "PDF(last(t), 0.1, 0, 2)");
  ASSERT_TRUE(r.histogram.has_value());
  const Histogram& h = *r.histogram;
  EXPECT_EQ(h.counts.size(), 20u);
  EXPECT_EQ(h.mass() + h.overflow, r.accepted_count);
  EXPECT_GT(h.overflow, 0u);
  double freq = 0;
  for (double f : h.frequency) freq += f;
  EXPECT_LE(freq, 1.0);
  EXPECT_NEAR(freq, static_cast<double>(h.mass()) / r.samples_used, 1e-12);

  const auto c = run(2.0, 3, 3, p, 2, "CDF(last(t), 0.1, 0, 2)");
  const auto& ch = *c.histogram;
  EXPECT_TRUE(ch.cumulative);
  EXPECT_TRUE(std::is_sorted(ch.frequency.begin(), ch.frequency.end()));
  EXPECT_NEAR(ch.frequency.back(), static_cast<double>(ch.mass()) / c.samples_used, 1e-12);
}

TEST_F(Erlang, MinAvgMaxOrdering) {
  CiPolicy p;
  p.min_samples = 64;
  const GspnModel m = poisson_source(1.0);
  const Lha a = build_counter("fire", 5, "X");
  RunConfig rc;
  const auto reps = estimate_all({parse_hasl("E[min(a)]"), parse_hasl("E[avg(a)]"), parse_hasl("E[max(a)]"),
                                  parse_hasl("E[max(a) - avg(a)]"), parse_hasl("E[avg(a) - min(a)]")},
                                 m, a, p, rc);
  EXPECT_LE(reps[0].estimate, reps[1].estimate);
  EXPECT_LE(reps[1].estimate, reps[2].estimate);
  // The differences are nonnegative on every trajectory.
  EXPECT_GE(reps[3].estimate, 0.0);
  EXPECT_GE(reps[4].estimate, 0.0);
  EXPECT_DOUBLE_EQ(reps[2].estimate, 5.0);  // X after the fifth firing
}

TEST(Estimation, DivisionByZeroIsDiscarded) {
  // a holds protA at the last transcription; a = 2 makes t / (a - 2) infinite.
  const GspnModel m = gene_expression();
  const Lha a = build_counter("transc", 3, "protA");
  CiPolicy p;
  p.min_samples = 256;
  RunConfig rc;
  const auto reps =
      estimate_all({parse_hasl("E[t / (a - 2)]"), parse_hasl("PDF(t / (a - 2), 1, 0, 10)")}, m, a, p, rc);
  EXPECT_GT(reps[0].discarded_count, 0u);
  EXPECT_LT(reps[0].discarded_count, reps[0].accepted_count);
  EXPECT_TRUE(std::isfinite(reps[0].estimate));
  const Histogram& h = *reps[1].histogram;
  EXPECT_EQ(h.mass() + h.overflow, reps[1].accepted_count);
  EXPECT_GE(h.overflow, reps[1].discarded_count);

  const Lha zero = build_counter("transc", 3);
  EXPECT_THROW(estimate(parse_hasl("E[t / a]"), m, zero, p, rc), EstimationError);
}

TEST(Estimation, NoAcceptedTrajectoryIsAnEstimationFailure) {
  TransitionDef die;
  die.name = "fire";
  die.inputs = {{"X"}};
  const GspnModel m({"X"}, {die}, Marking{1});
  const Lha a = build_counter("fire", 3);
  CiPolicy p;
  p.max_samples = 64;
  EXPECT_THROW(estimate(parse_hasl("E[last(t)]"), m, a, p, {}), EstimationError);
  const auto prob = estimate(parse_hasl("P"), m, a, p, {});
  EXPECT_EQ(prob.estimate, 0.0);
  EXPECT_EQ(prob.rejected_count, 64u);
  ASSERT_EQ(prob.rejections.size(), 1u);
  EXPECT_EQ(prob.rejections[0].first, "deadlock");
}

TEST(Estimation, NonDeterministicAutomatonIsRefused) {
  LhaDef d;
  d.variables = {"t"};
  d.locations = {{"l0", {}, {}}, {"l1", {}, {}}};
  d.initial = {"l0", "l1"};
  d.final = {"l1"};
  const Lha a(d);
  EXPECT_THROW(estimate(parse_hasl("P"), poisson_source(1.0), a, {}, {}), ModelError);
}

TEST(Estimation, UnknownVariableInMeasure) {
  const Lha a = build_counter("fire", 2);
  EXPECT_THROW(estimate(parse_hasl("E[last(zz)]"), poisson_source(1.0), a, {}, {}), ModelError);
}

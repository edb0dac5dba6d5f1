#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hasl/io.hpp"
#include "hasl/models.hpp"

using namespace hasl;

namespace {

EstimationReport quick(const GspnModel& m, const Lha& a, const char* expr) {
  CiPolicy p;
  p.min_samples = 64;
  RunConfig rc;
  rc.seed = 12;
  return estimate(parse_hasl(expr), m, a, p, rc);
}

}  // namespace

TEST(ModelJson, RoundTripPreservesBehaviour) {
  const GspnModel m = gene_expression();
  const GspnModel back = model_from_json_text(model_to_json_text(m));
  EXPECT_EQ(back.places(), m.places());
  EXPECT_EQ(back.initial_marking(), m.initial_marking());
  EXPECT_EQ(back.transition_names(), m.transition_names());
  const Lha a = build_counter("transc", 3, "protA");
  const auto r1 = quick(m, a, "E[last(t)]");
  const auto r2 = quick(back, a, "E[last(t)]");
  EXPECT_EQ(r1.estimate, r2.estimate);
  EXPECT_EQ(r1.ci_high, r2.ci_high);
}

TEST(ModelJson, CircadianRoundTripKeepsRates) {
  const GspnModel m = circadian();
  const GspnModel back = model_from_json_text(model_to_json_text(m));
  const Marking busy(9, 2);
  for (std::size_t t = 0; t < m.transitions().size(); ++t)
    EXPECT_DOUBLE_EQ(evaluate_rate(m.transitions()[t], busy), evaluate_rate(back.transitions()[t], busy));
  EXPECT_EQ(back.invariants().size(), 2u);
}

TEST(ModelJson, HandWrittenDeterministicTransition) {
  const GspnModel m = model_from_json_text(R"({
    "places": ["P", "Q"],
    "initial_marking": {"P": 2},
    "transitions": [
      {"name": "move", "in": {"P": 1}, "out": {"Q": 1}, "law": "det", "duration": 1.5},
      {"name": "back", "in": {"Q": 1}, "out": {"P": 1}, "rate": "2 * Q"}
    ]
  })");
  EXPECT_EQ(m.initial_marking(), (Marking{2, 0}));
  StdRandomSource rng(1);
  Simulator sim(m, rng);
  EXPECT_DOUBLE_EQ(sim.peek_time(), 1.5);
}

TEST(ModelJson, FormatErrors) {
  EXPECT_THROW(model_from_json_text("{"), FormatError);
  EXPECT_THROW(model_from_json_text(R"({"places": ["P"]})"), FormatError);
  EXPECT_THROW(model_from_json_text(R"({"places": ["P"], "transitions": [{"name": "t", "law": "gamma"}]})"),
               FormatError);
  EXPECT_THROW(model_from_json_text(R"({"places": ["P"], "transitions": [{"name": "t", "rate": "P +"}]})"),
               FormatError);
}

TEST(LhaJson, RoundTripOfOscillationAutomata) {
  for (const Lha& a : {build_Aper({"A", 5, 50, 3, 4}), build_counter("fire", 2, "X")}) {
    const Lha back = lha_from_json_text(lha_to_json_text(a));
    EXPECT_EQ(lha_to_json_text(back), lha_to_json_text(a));
    EXPECT_EQ(back.edges().size(), a.edges().size());
  }
  PeaksParams p;
  p.delta = 3;
  p.N = 5;
  p.partition = {{"inc"}, {"dec"}, {"same"}};
  p.bound = 40;
  const Lha peaks = build_Apeaks(p);
  const Lha back = lha_from_json_text(lha_to_json_text(peaks));
  ASSERT_TRUE(back.array_index("Lmax").has_value());
  EXPECT_EQ(back.def().arrays[*back.array_index("Lmax")].bound, 40u);
  EXPECT_TRUE(check_determinism(back).ok());
}

TEST(LhaJson, SameReportsAfterRoundTrip) {
  const GspnModel m = poisson_source(2.0);
  const Lha a = build_counter("fire", 3);
  const Lha back = lha_from_json_text(lha_to_json_text(a));
  EXPECT_EQ(quick(m, a, "E[last(t)]").estimate, quick(m, back, "E[last(t)]").estimate);
}

TEST(LhaJson, FormatErrors) {
  EXPECT_THROW(lha_from_json_text("[]"), FormatError);
  EXPECT_THROW(lha_from_json_text(R"({"variables": ["t"], "locations": [{"name": "a"}], "initial": ["a"],
                                     "final": ["a"], "edges": [{"src": "a", "dst": "a", "sync": 7}]})"),
               FormatError);
}

TEST(Reports, JsonUsesNullForNonFinite) {
  EstimationReport r;
  r.expression = "E[last(Lmax)]";
  r.estimate = std::numeric_limits<double>::quiet_NaN();
  r.ci_low = -std::numeric_limits<double>::infinity();
  r.components = {{1.0, 0.5, 1.5, 10}};
  const std::string text = report_to_json_text(r);
  EXPECT_NE(text.find("\"estimate\": null"), std::string::npos) << text;
  EXPECT_NE(text.find("\"ci_low\": null"), std::string::npos);
  EXPECT_NE(text.find("\"components\""), std::string::npos);
}

TEST(Reports, HistogramCsv) {
  Histogram h;
  h.s = 0.5;
  h.l = 0;
  h.h = 1;
  h.counts = {3, 1};
  h.frequency = {0.3, 0.1};
  std::ostringstream os;
  write_histogram_csv(os, h);
  EXPECT_EQ(os.str(), "bin_low,bin_high,frequency,count\n0,0.5,0.3,3\n0.5,1,0.1,1\n");
}

TEST(Reports, PeakHistogramCsv) {
  EstimationReport mx, mn;
  mx.components = {{0.0, 0, 0, 1}, {2.0, 0, 0, 1}, {0.5, 0, 0, 1}};
  mn.components = {{1.0, 0, 0, 1}, {0.0, 0, 0, 1}, {0.0, 0, 0, 1}};
  std::ostringstream os;
  write_peak_histogram_csv(os, mx, mn);
  EXPECT_EQ(os.str(), "level,frequency_max,frequency_min\n0,0,1\n1,2,0\n2,0.5,0\n");
}

TEST(Traces, RoundTrip) {
  RecordedTrace t;
  t.places = {"A", "B"};
  t.initial = {1, 0};
  t.events = {{"e1", 0.25, {0, 1}}, {"e2", 1.0 / 3.0, {1, 1}}};
  t.end_marker = "horizon";
  std::stringstream ss;
  write_trace(ss, t);
  const RecordedTrace back = read_trace(ss);
  EXPECT_EQ(back.places, t.places);
  EXPECT_EQ(back.initial, t.initial);
  ASSERT_EQ(back.events.size(), 2u);
  EXPECT_EQ(back.events[1].time, t.events[1].time);
  EXPECT_EQ(back.events[1].marking_after, t.events[1].marking_after);
  EXPECT_EQ(back.events[0].event, "e1");
  EXPECT_EQ(back.end_marker, "horizon");
}

TEST(Traces, MalformedLinesAreReported) {
  std::istringstream bad("#places\tA\n#initial\t1\n0.5\te\n");
  EXPECT_THROW(read_trace(bad), FormatError);
  std::istringstream wrong_width("#places\tA\n#initial\t1\n0.5\te\t1,2\n");
  EXPECT_THROW(read_trace(wrong_width), FormatError);
}

TEST(Traces, TimeSeriesCsv) {
  RecordedTrace t;
  t.places = {"A", "B"};
  t.initial = {1, 0};
  t.events = {{"e", 2.0, {3, 4}}};
  std::ostringstream os;
  write_time_series_csv(os, t);
  EXPECT_EQ(os.str(), "time,A,B\n0,1,0\n2,3,4\n");
  std::ostringstream no_initial;
  write_time_series_csv(no_initial, t, false);
  EXPECT_EQ(no_initial.str(), "time,A,B\n2,3,4\n");
}

TEST(Samples, CsvWithAndWithoutHeader) {
  std::istringstream with("time,value\n0,1\n0.5,3\n");
  const auto a = read_samples_csv(with);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[1].time, 0.5);
  EXPECT_EQ(a[1].value, 3.0);
  std::istringstream without("0,1\n1,2\n2,1\n");
  EXPECT_EQ(read_samples_csv(without).size(), 3u);
  std::istringstream broken("0,1\nx,2\n");
  EXPECT_THROW(read_samples_csv(broken), FormatError);
}

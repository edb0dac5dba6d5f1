#include <gtest/gtest.h>

#include "hasl/models.hpp"
#include "hasl/sync.hpp"

using namespace hasl;

namespace {

std::size_t index_of(const GspnModel& m, const char* t) { return *m.transition_index(t); }

Marking fire_once(const GspnModel& m, Marking from, const char* t) {
  StdRandomSource rng(1);
  Configuration c{std::move(from), 0.0, std::vector<double>(m.transitions().size(), kNever)};
  c.schedule[index_of(m, t)] = 0.5;
  fire(c, m, rng, index_of(m, t));
  return c.marking;
}

}  // namespace

TEST(Circadian, Structure) {
  const GspnModel m = circadian();
  EXPECT_EQ(m.places().size(), 9u);
  EXPECT_EQ(m.transitions().size(), 16u);
  EXPECT_EQ(m.initial_marking(), (Marking{1, 0, 1, 0, 0, 0, 0, 0, 0}));
  EXPECT_TRUE(validate_invariants(m, m.initial_marking()).ok());
}

TEST(Circadian, RepressorDegradationOnlyChangesOneRate) {
  CircadianRates slow;
  slow.set("delta_R", 2.0);
  const GspnModel a = circadian();
  const GspnModel b = circadian(slow);
  const Marking busy(9, 3);
  for (std::size_t t = 0; t < a.transitions().size(); ++t) {
    const double ra = evaluate_rate(a.transitions()[t], busy);
    const double rb = evaluate_rate(b.transitions()[t], busy);
    if (a.transitions()[t].name() == "R14") {
      EXPECT_DOUBLE_EQ(ra, 0.2 * 3);
      EXPECT_DOUBLE_EQ(rb, 2.0 * 3);
    } else {
      EXPECT_EQ(ra, rb) << a.transitions()[t].name();
    }
  }
}

TEST(Circadian, ActivatorBindsPromoter) {
  const GspnModel m = circadian();
  Marking from(9, 0);
  from[0] = 1;  // D_A
  from[6] = 1;  // A
  Marking expected(9, 0);
  expected[1] = 1;  // D'_A
  EXPECT_EQ(fire_once(m, from, "R1"), expected);
}

TEST(Circadian, BimolecularRateVanishesWithoutReactant) {
  const GspnModel m = circadian();
  Marking only_r(9, 0);
  only_r[7] = 5;
  EXPECT_FALSE(m.is_enabled(index_of(m, "R11"), only_r));
  only_r[6] = 2;
  EXPECT_TRUE(m.is_enabled(index_of(m, "R11"), only_r));
  EXPECT_DOUBLE_EQ(evaluate_rate(m.transitions()[index_of(m, "R11")], only_r), 2.0 * 2 * 5);
}

TEST(Circadian, GeneInvariantsHoldOverLongRun) {
  const GspnModel m = circadian();
  StdRandomSource rng(17);
  Simulator sim(m, rng);
  for (int i = 0; i < 1'000'000 && sim.advance(); ++i) {
    if (i % 997 == 0) ASSERT_TRUE(validate_invariants(m, sim.marking()).ok()) << "after event " << i;
  }
  EXPECT_TRUE(validate_invariants(m, sim.marking()).ok());
}

TEST(Circadian, ActivatorSwingsBetweenExtremes) {
  const GspnModel m = circadian();
  StdRandomSource rng(4);
  Simulator sim(m, rng);
  const auto A = *m.place_index("A");
  bool above = false, back_below = false;
  while (sim.time() < 200.0 && sim.advance()) {
    if (sim.marking()[A] > 1000) above = true;
    if (above && sim.marking()[A] < 1) back_below = true;
  }
  EXPECT_TRUE(above);
  EXPECT_TRUE(back_below);
}

TEST(Circadian, RateSettersRejectBadInput) {
  CircadianRates r;
  EXPECT_THROW(r.set("delta_Q", 1.0), ModelError);
  EXPECT_THROW(r.set("delta_R", 0.0), ModelError);
  EXPECT_THROW(r.set("delta_R", -1.0), ModelError);
  r.set("theta_A", 60.0);
  EXPECT_EQ(r.as_map().at("theta_A"), 60.0);
  EXPECT_EQ(r.as_map().size(), 15u);
}

TEST(GeneExpression, InitialMarkingAndRates) {
  const GspnModel m = gene_expression();
  EXPECT_EQ(m.places(), (std::vector<std::string>{"protA", "geneA", "A_geneA", "mrnA"}));
  EXPECT_EQ(m.initial_marking(), (Marking{2, 1, 0, 0}));
  EXPECT_EQ(enabled_transitions(m.initial_marking(), m), (std::set<std::string>{"bind", "transc"}));
  const Marking all{1, 1, 1, 1};
  for (const auto& t : m.transitions())
    if (t.name() != "transc") EXPECT_DOUBLE_EQ(evaluate_rate(t, all), 1.0) << t.name();
}

TEST(GeneExpression, TranscriptionNeedsEitherGeneState) {
  const GspnModel m = gene_expression();
  const auto tr = index_of(m, "transc");
  EXPECT_TRUE(m.is_enabled(tr, Marking{0, 1, 0, 0}));
  EXPECT_TRUE(m.is_enabled(tr, Marking{0, 0, 1, 0}));
  EXPECT_FALSE(m.is_enabled(tr, Marking{5, 0, 0, 5}));
  EXPECT_DOUBLE_EQ(evaluate_rate(m.transitions()[tr], Marking{0, 0, 1, 0}), 1.0);
  EXPECT_EQ(fire_once(m, {0, 0, 1, 0}, "transc"), (Marking{0, 0, 1, 1}));
  GeneExpressionRates r;
  EXPECT_THROW(r.set("nope", 1.0), ModelError);
}

TEST(Counter, AcceptsAtNthEvent) {
  const Lha a = build_counter("fire", 4);
  EXPECT_TRUE(check_determinism(a).ok());
  const GspnModel m = poisson_source(3.0);
  StdRandomSource rng(2);
  const auto r = synchronize(m, BoundLha(a, m.places(), m.transition_names()), rng);
  ASSERT_TRUE(r.accepted());
  EXPECT_EQ(r.event_count, 4u);
  EXPECT_THROW(build_counter("fire", 0), ModelError);
  EXPECT_THROW(poisson_source(0.0), ModelError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "hasl/expr.hpp"

using namespace hasl;

namespace {

Resolver places_ab() {
  return [](std::string_view n) -> std::optional<Symbol> {
    if (n == "A") return Symbol{SymbolKind::Place, 0};
    if (n == "B") return Symbol{SymbolKind::Place, 1};
    if (n == "x") return Symbol{SymbolKind::Variable, 0};
    if (n == "y") return Symbol{SymbolKind::Variable, 1};
    return std::nullopt;
  };
}

double eval(const std::string& text, const Marking& m, const std::vector<double>& vars = {}) {
  return CompiledExpr::compile(parse_expression(text), places_ab()).evaluate(m, vars);
}

}  // namespace

TEST(Expr, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(eval("1 + 2 * 3", {0, 0}), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2) * 3", {0, 0}), 9.0);
  EXPECT_DOUBLE_EQ(eval("8 - 3 - 2", {0, 0}), 3.0);
  EXPECT_DOUBLE_EQ(eval("8 / 4 / 2", {0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(eval("-A + 2", {5, 0}), -3.0);
  EXPECT_DOUBLE_EQ(eval("2.5e1", {0, 0}), 25.0);
}

TEST(Expr, PlacesAndVariables) {
  EXPECT_DOUBLE_EQ(eval("2 * A * B", {3, 2}), 12.0);
  EXPECT_DOUBLE_EQ(eval("A * x + y", {4, 0}, {2.0, 1.0}), 9.0);
}

TEST(Expr, DivisionByZeroIsNotFinite) { EXPECT_FALSE(std::isfinite(eval("A / B", {1, 0}))); }

TEST(Expr, UnknownIdentifierFailsAtBinding) {
  EXPECT_THROW(CompiledExpr::compile(parse_expression("A + Z"), places_ab()), ParseError);
}

TEST(Expr, SyntaxErrorsCarryPositions) {
  try {
    parse_expression("1 + * 2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(parse_expression("(1 + 2"), ParseError);
  EXPECT_THROW(parse_expression("1 2"), ParseError);
  EXPECT_THROW(parse_expression(""), ParseError);
}

TEST(Expr, PrintedFormReparsesToSameValue) {
  for (const char* text : {"A - (B - 3)", "A / (B * 2)", "-(A + 1) * 0.1", "A - -B", "1e-7 * A"}) {
    const Expr e = parse_expression(text);
    const Expr back = parse_expression(to_string(e));
    EXPECT_DOUBLE_EQ(CompiledExpr::compile(e, places_ab()).evaluate(Marking{7, 3}),
                     CompiledExpr::compile(back, places_ab()).evaluate(Marking{7, 3}))
        << text;
  }
}

TEST(Expr, PlacesReadAreCollected) {
  const auto c = CompiledExpr::compile(parse_expression("B * x + A + B"), places_ab());
  EXPECT_EQ(c.places(), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_TRUE(c.reads_variables());
  EXPECT_TRUE(CompiledExpr::compile(parse_expression("2 * 3"), places_ab()).is_constant());
}

TEST(Conjunction, ChainsAndKeywords) {
  const Conjunction c = parse_conjunction("1 < A < 1000 && B >= 2");
  ASSERT_EQ(c.terms.size(), 3u);
  const auto compiled = CompiledConjunction::compile(c, places_ab());
  EXPECT_TRUE(compiled.holds(Marking{500, 2}));
  EXPECT_FALSE(compiled.holds(Marking{1, 2}));
  EXPECT_FALSE(compiled.holds(Marking{1000, 2}));
  EXPECT_FALSE(compiled.holds(Marking{500, 1}));
  EXPECT_TRUE(parse_conjunction("true").is_true());
  EXPECT_EQ(parse_conjunction("A = 1 and B = 2").terms.size(), 2u);
}

TEST(Conjunction, BoundaryIsInclusiveForNonStrict) {
  const auto c = CompiledConjunction::compile(parse_conjunction("A >= 10"), places_ab());
  EXPECT_TRUE(c.holds(Marking{10, 0}));
  EXPECT_FALSE(c.holds(Marking{9, 0}));
}

TEST(Linearize, SplitsCoefficientsAndConstant) {
  const auto var = [](std::string_view n) -> std::optional<std::size_t> {
    if (n == "x") return 0;
    if (n == "y") return 1;
    return std::nullopt;
  };
  const auto lin = linearize(parse_expression("A * x + 2 * (y - x) + B"), 2, var);
  ASSERT_TRUE(lin.has_value());
  const auto r = places_ab();
  ASSERT_TRUE(lin->coefficients[0] && lin->coefficients[1]);
  EXPECT_DOUBLE_EQ(CompiledExpr::compile(*lin->coefficients[0], r).evaluate(Marking{5, 1}), 3.0);
  EXPECT_DOUBLE_EQ(CompiledExpr::compile(*lin->coefficients[1], r).evaluate(Marking{5, 1}), 2.0);
  EXPECT_DOUBLE_EQ(CompiledExpr::compile(lin->constant, r).evaluate(Marking{5, 1}), 1.0);
  EXPECT_FALSE(linearize(parse_expression("x * y"), 2, var).has_value());
  EXPECT_FALSE(linearize(parse_expression("1 / x"), 2, var).has_value());
}

TEST(Polynomial, NormalFormMergesTerms) {
  const auto p = to_polynomial(parse_expression("2 * (A + x) - A - x * 1 + 3"));
  ASSERT_TRUE(p.has_value());
  const Polynomial expected{{{"A"}, 1.0}, {{"x"}, 1.0}, {{}, 3.0}};
  EXPECT_EQ(*p, expected);
  EXPECT_FALSE(to_polynomial(parse_expression("A / x")).has_value());
}

TEST(Substitute, ReplacesNamedIdentifiers) {
  const Expr e = substitute(parse_expression("k * A"), {{"k", 4.0}});
  EXPECT_DOUBLE_EQ(CompiledExpr::compile(e, places_ab()).evaluate(Marking{2, 0}), 8.0);
}

#pragma once

// Arithmetic expressions and comparison conjunctions shared by the model,
// automaton and target-measure layers.
//
// Expressions are parsed into a small tree (`Expr`), then bound against a
// symbol table and compiled into a flat stack program (`CompiledExpr`) that is
// cheap to evaluate on every simulated event.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hasl {

/// Token counts of a marking. One entry per place.
using Marking = std::vector<std::uint64_t>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Raised for structurally invalid models, automata or bindings.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Expr {
  enum class Kind { Constant, Identifier, Negate, Add, Subtract, Multiply, Divide, Call, Index };

  Kind kind = Kind::Constant;
  double value = 0.0;
  std::string name;  // identifier, call or array name
  std::vector<Expr> args;
  std::size_t position = 0;

  static Expr constant(double v);
  static Expr identifier(std::string n);
  static Expr negate(Expr e);
  static Expr binary(Kind k, Expr lhs, Expr rhs);
  static Expr call(std::string fn, std::vector<Expr> arguments);
  static Expr index(std::string array, Expr subscript);

  bool is_constant() const noexcept { return kind == Kind::Constant; }
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);

enum class Cmp { Eq, Lt, Gt, Le, Ge };

std::string_view to_string(Cmp op) noexcept;
bool compare(double lhs, Cmp op, double rhs) noexcept;

struct Comparison {
  Expr lhs;
  Cmp op = Cmp::Eq;
  Expr rhs;
};

/// A conjunction of comparisons; the empty conjunction is `true`.
struct Conjunction {
  std::vector<Comparison> terms;

  bool is_true() const noexcept { return terms.empty(); }
};

Conjunction operator&&(Conjunction a, Conjunction b);
Comparison make_cmp(Expr lhs, Cmp op, Expr rhs);
Conjunction conj(std::initializer_list<Comparison> terms);

// Lexing is exposed so that higher-level grammars can reuse it.
struct Token {
  enum class Kind { End, Number, Identifier, Symbol };
  Kind kind = Kind::End;
  std::string text;
  double number = 0.0;
  std::size_t position = 0;
};

class TokenStream {
 public:
  explicit TokenStream(std::string_view text);

  const Token& peek(std::size_t ahead = 0) const;
  Token next();
  bool accept_symbol(std::string_view symbol);
  void expect_symbol(std::string_view symbol);
  bool at_end() const { return peek().kind == Token::Kind::End; }
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
};

/// sum := term (('+'|'-') term)* ; supports calls `f(a, b)` and `a[i]`.
Expr parse_sum(TokenStream& tokens);
Expr parse_expression(std::string_view text);

/// Accepts `true`, single comparisons, chains such as `1 < A < 1000` and
/// conjunctions joined by `&&` or `and`.
Conjunction parse_conjunction(std::string_view text);

std::string to_string(const Expr& e);
std::string to_string(const Comparison& c);
std::string to_string(const Conjunction& c);

void collect_identifiers(const Expr& e, std::set<std::string>& out);
void collect_identifiers(const Conjunction& c, std::set<std::string>& out);

/// Replaces identifiers found in `values` by constants.
Expr substitute(const Expr& e, const std::map<std::string, double>& values);

// ---------------------------------------------------------------------------
// Binding and compilation

enum class SymbolKind : std::uint8_t { Place, Variable };

struct Symbol {
  SymbolKind kind;
  std::uint32_t index;
};

using Resolver = std::function<std::optional<Symbol>(std::string_view)>;

class CompiledExpr {
 public:
  enum class Op : std::uint8_t { Const, Place, Var, Neg, Add, Sub, Mul, Div };
  struct Instr {
    Op op;
    std::uint32_t index;
    double value;
  };

  CompiledExpr() = default;
  static CompiledExpr compile(const Expr& e, const Resolver& resolve);
  static CompiledExpr constant(double v);

  double evaluate(std::span<const std::uint64_t> marking,
                  std::span<const double> variables = {}) const noexcept;

  bool empty() const noexcept { return code_.empty(); }
  bool is_constant() const noexcept;
  bool reads_variables() const noexcept;
  /// Places read by the expression (sorted, unique).
  const std::vector<std::uint32_t>& places() const noexcept { return places_; }

 private:
  static constexpr std::size_t kMaxDepth = 64;
  std::vector<Instr> code_;
  std::vector<std::uint32_t> places_;
};

struct CompiledComparison {
  CompiledExpr lhs;
  Cmp op = Cmp::Eq;
  CompiledExpr rhs;
};

class CompiledConjunction {
 public:
  CompiledConjunction() = default;
  static CompiledConjunction compile(const Conjunction& c, const Resolver& resolve);

  bool holds(std::span<const std::uint64_t> marking,
             std::span<const double> variables = {}) const noexcept;
  bool is_true() const noexcept { return terms_.empty(); }
  const std::vector<CompiledComparison>& terms() const noexcept { return terms_; }

 private:
  std::vector<CompiledComparison> terms_;
};

// ---------------------------------------------------------------------------
// Symbolic analyses

/// Affine decomposition `sum_i coefficient_i * x_i + constant` of an
/// expression over automaton variables x_i, where coefficients and constant
/// may depend on the marking. `coefficients[i]` is nullopt when x_i does not
/// occur.
struct LinearExpr {
  std::vector<std::optional<Expr>> coefficients;
  Expr constant;
};

/// Returns nullopt when the expression is not affine in the variables.
/// `variable_index` maps an identifier to its variable slot, or nullopt for
/// marking indicators and constants.
std::optional<LinearExpr> linearize(
    const Expr& e, std::size_t variable_count,
    const std::function<std::optional<std::size_t>(std::string_view)>& variable_index);

/// Polynomial with constant coefficients over identifier monomials. The key
/// is a sorted multiset of identifier names; the empty key is the constant.
using Polynomial = std::map<std::vector<std::string>, double>;

/// Returns nullopt when the expression is not a polynomial with constant
/// coefficients (division by a non-constant, calls, array reads).
std::optional<Polynomial> to_polynomial(const Expr& e);

}  // namespace hasl

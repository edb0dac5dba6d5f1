#include "hasl/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace hasl {

ParseError::ParseError(const std::string& what, std::size_t position)
    : std::runtime_error(what + " (at offset " + std::to_string(position) + ")"),
      position_(position) {}

Expr Expr::constant(double v) {
  Expr e;
  e.kind = Kind::Constant;
  e.value = v;
  return e;
}

Expr Expr::identifier(std::string n) {
  Expr e;
  e.kind = Kind::Identifier;
  e.name = std::move(n);
  return e;
}

Expr Expr::negate(Expr inner) {
  Expr e;
  e.kind = Kind::Negate;
  e.position = inner.position;
  e.args.push_back(std::move(inner));
  return e;
}

Expr Expr::binary(Kind k, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = k;
  e.position = lhs.position;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr Expr::call(std::string fn, std::vector<Expr> arguments) {
  Expr e;
  e.kind = Kind::Call;
  e.name = std::move(fn);
  e.args = std::move(arguments);
  return e;
}

Expr Expr::index(std::string array, Expr subscript) {
  Expr e;
  e.kind = Kind::Index;
  e.name = std::move(array);
  e.args.push_back(std::move(subscript));
  return e;
}

Expr operator+(Expr a, Expr b) { return Expr::binary(Expr::Kind::Add, std::move(a), std::move(b)); }
Expr operator-(Expr a, Expr b) {
  return Expr::binary(Expr::Kind::Subtract, std::move(a), std::move(b));
}
Expr operator*(Expr a, Expr b) {
  return Expr::binary(Expr::Kind::Multiply, std::move(a), std::move(b));
}
Expr operator/(Expr a, Expr b) {
  return Expr::binary(Expr::Kind::Divide, std::move(a), std::move(b));
}

std::string_view to_string(Cmp op) noexcept {
  switch (op) {
    case Cmp::Eq: return "=";
    case Cmp::Lt: return "<";
    case Cmp::Gt: return ">";
    case Cmp::Le: return "<=";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

bool compare(double lhs, Cmp op, double rhs) noexcept {
  switch (op) {
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Gt: return lhs > rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Ge: return lhs >= rhs;
  }
  return false;
}

Conjunction operator&&(Conjunction a, Conjunction b) {
  for (auto& t : b.terms) a.terms.push_back(std::move(t));
  return a;
}

Comparison make_cmp(Expr lhs, Cmp op, Expr rhs) { return {std::move(lhs), op, std::move(rhs)}; }

Conjunction conj(std::initializer_list<Comparison> terms) {
  Conjunction c;
  c.terms.assign(terms.begin(), terms.end());
  return c;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

}  // namespace

TokenStream::TokenStream(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token tok;
    tok.position = i;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i;
      while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.'))
        ++j;
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
          j = k;
          while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        }
      }
      tok.kind = Token::Kind::Number;
      tok.text = std::string(text.substr(i, j - i));
      const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, tok.number);
      if (ec != std::errc() || ptr != text.data() + j)
        throw ParseError("malformed number '" + tok.text + "'", i);
      i = j;
    } else if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      tok.kind = Token::Kind::Identifier;
      tok.text = std::string(text.substr(i, j - i));
      i = j;
    } else {
      static constexpr std::array<std::string_view, 5> two_char = {"<=", ">=", "==", "&&", "!="};
      tok.kind = Token::Kind::Symbol;
      const std::string_view rest = text.substr(i);
      bool matched = false;
      for (auto s : two_char) {
        if (rest.substr(0, 2) == s) {
          tok.text = std::string(s);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("+-*/()[],<>=#").find(c) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + c + "'", i);
        tok.text = std::string(1, c);
        ++i;
      }
    }
    tokens_.push_back(std::move(tok));
  }
  Token end;
  end.kind = Token::Kind::End;
  end.position = text.size();
  tokens_.push_back(end);
}

const Token& TokenStream::peek(std::size_t ahead) const {
  return tokens_[std::min(cursor_ + ahead, tokens_.size() - 1)];
}

Token TokenStream::next() {
  Token t = peek();
  if (cursor_ + 1 < tokens_.size()) ++cursor_;
  return t;
}

bool TokenStream::accept_symbol(std::string_view symbol) {
  const Token& t = peek();
  if (t.kind == Token::Kind::Symbol && t.text == symbol) {
    next();
    return true;
  }
  return false;
}

void TokenStream::expect_symbol(std::string_view symbol) {
  if (!accept_symbol(symbol)) fail("expected '" + std::string(symbol) + "'");
}

void TokenStream::fail(const std::string& message) const {
  const Token& t = peek();
  const std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
  throw ParseError(message + ", found " + found, t.position);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

Expr parse_unary(TokenStream& ts);

Expr parse_primary(TokenStream& ts) {
  const Token& t = ts.peek();
  if (t.kind == Token::Kind::Number) {
    Token n = ts.next();
    Expr e = Expr::constant(n.number);
    e.position = n.position;
    return e;
  }
  if (t.kind == Token::Kind::Identifier) {
    Token id = ts.next();
    if (ts.accept_symbol("(")) {
      std::vector<Expr> args;
      if (!ts.accept_symbol(")")) {
        do {
          args.push_back(parse_sum(ts));
        } while (ts.accept_symbol(","));
        ts.expect_symbol(")");
      }
      Expr e = Expr::call(id.text, std::move(args));
      e.position = id.position;
      return e;
    }
    if (ts.accept_symbol("[")) {
      Expr sub = parse_sum(ts);
      ts.expect_symbol("]");
      Expr e = Expr::index(id.text, std::move(sub));
      e.position = id.position;
      return e;
    }
    Expr e = Expr::identifier(id.text);
    e.position = id.position;
    return e;
  }
  if (ts.accept_symbol("(")) {
    Expr e = parse_sum(ts);
    ts.expect_symbol(")");
    return e;
  }
  ts.fail("expected a number, identifier or '('");
}

Expr parse_unary(TokenStream& ts) {
  const std::size_t pos = ts.peek().position;
  if (ts.accept_symbol("-")) {
    Expr inner = parse_unary(ts);
    if (inner.is_constant()) {
      inner.value = -inner.value;
      inner.position = pos;
      return inner;
    }
    Expr e = Expr::negate(std::move(inner));
    e.position = pos;
    return e;
  }
  if (ts.accept_symbol("+")) return parse_unary(ts);
  return parse_primary(ts);
}

Expr parse_term(TokenStream& ts) {
  Expr lhs = parse_unary(ts);
  for (;;) {
    if (ts.accept_symbol("*")) {
      lhs = Expr::binary(Expr::Kind::Multiply, std::move(lhs), parse_unary(ts));
    } else if (ts.accept_symbol("/")) {
      lhs = Expr::binary(Expr::Kind::Divide, std::move(lhs), parse_unary(ts));
    } else {
      return lhs;
    }
  }
}

std::optional<Cmp> accept_cmp(TokenStream& ts) {
  const Token& t = ts.peek();
  if (t.kind != Token::Kind::Symbol) return std::nullopt;
  std::optional<Cmp> op;
  if (t.text == "=" || t.text == "==") op = Cmp::Eq;
  else if (t.text == "<") op = Cmp::Lt;
  else if (t.text == ">") op = Cmp::Gt;
  else if (t.text == "<=") op = Cmp::Le;
  else if (t.text == ">=") op = Cmp::Ge;
  if (op) ts.next();
  return op;
}

bool accept_word(TokenStream& ts, std::string_view word) {
  const Token& t = ts.peek();
  if (t.kind == Token::Kind::Identifier && t.text == word) {
    ts.next();
    return true;
  }
  return false;
}

}  // namespace

Expr parse_sum(TokenStream& ts) {
  Expr lhs = parse_term(ts);
  for (;;) {
    if (ts.accept_symbol("+")) {
      lhs = Expr::binary(Expr::Kind::Add, std::move(lhs), parse_term(ts));
    } else if (ts.accept_symbol("-")) {
      lhs = Expr::binary(Expr::Kind::Subtract, std::move(lhs), parse_term(ts));
    } else {
      return lhs;
    }
  }
}

Expr parse_expression(std::string_view text) {
  TokenStream ts(text);
  Expr e = parse_sum(ts);
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return e;
}

Conjunction parse_conjunction(std::string_view text) {
  TokenStream ts(text);
  Conjunction out;
  do {
    if (accept_word(ts, "true")) continue;
    Expr lhs = parse_sum(ts);
    auto op = accept_cmp(ts);
    if (!op) ts.fail("expected a comparison operator");
    Expr rhs = parse_sum(ts);
    out.terms.push_back({lhs, *op, rhs});
    // chained comparisons: a < b < c
    while (auto next_op = accept_cmp(ts)) {
      Expr next_rhs = parse_sum(ts);
      out.terms.push_back({out.terms.back().rhs, *next_op, next_rhs});
    }
  } while (ts.accept_symbol("&&") || accept_word(ts, "and"));
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Add:
    case Expr::Kind::Subtract: return 1;
    case Expr::Kind::Multiply:
    case Expr::Kind::Divide: return 2;
    case Expr::Kind::Negate: return 3;
    case Expr::Kind::Constant: return e.value < 0 ? 3 : 4;
    default: return 4;
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

void print(const Expr& e, std::ostringstream& os);

void print_child(const Expr& child, int parent_prec, bool right_assoc_guard, std::ostringstream& os) {
  const int p = precedence(child);
  const bool paren = p < parent_prec || (right_assoc_guard && p == parent_prec);
  if (paren) os << '(';
  print(child, os);
  if (paren) os << ')';
}

void print(const Expr& e, std::ostringstream& os) {
  switch (e.kind) {
    case Expr::Kind::Constant: os << format_number(e.value); break;
    case Expr::Kind::Identifier: os << e.name; break;
    case Expr::Kind::Negate:
      os << '-';
      print_child(e.args[0], 3, true, os);
      break;
    case Expr::Kind::Add:
    case Expr::Kind::Subtract:
    case Expr::Kind::Multiply:
    case Expr::Kind::Divide: {
      const int p = precedence(e);
      const char* sym = e.kind == Expr::Kind::Add        ? " + "
                        : e.kind == Expr::Kind::Subtract ? " - "
                        : e.kind == Expr::Kind::Multiply ? "*"
                                                         : "/";
      print_child(e.args[0], p, false, os);
      os << sym;
      print_child(e.args[1], p, true, os);
      break;
    }
    case Expr::Kind::Call:
      os << e.name << '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        print(e.args[i], os);
      }
      os << ')';
      break;
    case Expr::Kind::Index:
      os << e.name << '[';
      print(e.args[0], os);
      os << ']';
      break;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(e, os);
  return os.str();
}

std::string to_string(const Comparison& c) {
  return to_string(c.lhs) + " " + std::string(to_string(c.op)) + " " + to_string(c.rhs);
}

std::string to_string(const Conjunction& c) {
  if (c.is_true()) return "true";
  std::string out;
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    if (i) out += " && ";
    out += to_string(c.terms[i]);
  }
  return out;
}

void collect_identifiers(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Identifier) out.insert(e.name);
  for (const auto& a : e.args) collect_identifiers(a, out);
}

void collect_identifiers(const Conjunction& c, std::set<std::string>& out) {
  for (const auto& t : c.terms) {
    collect_identifiers(t.lhs, out);
    collect_identifiers(t.rhs, out);
  }
}

Expr substitute(const Expr& e, const std::map<std::string, double>& values) {
  if (e.kind == Expr::Kind::Identifier) {
    if (auto it = values.find(e.name); it != values.end()) {
      Expr c = Expr::constant(it->second);
      c.position = e.position;
      return c;
    }
    return e;
  }
  Expr copy = e;
  for (auto& a : copy.args) a = substitute(a, values);
  return copy;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

void emit(const Expr& e, const Resolver& resolve, std::vector<CompiledExpr::Instr>& code) {
  using Op = CompiledExpr::Op;
  switch (e.kind) {
    case Expr::Kind::Constant: code.push_back({Op::Const, 0, e.value}); return;
    case Expr::Kind::Identifier: {
      auto sym = resolve(e.name);
      if (!sym) throw ParseError("unknown identifier '" + e.name + "'", e.position);
      code.push_back({sym->kind == SymbolKind::Place ? Op::Place : Op::Var, sym->index, 0.0});
      return;
    }
    case Expr::Kind::Negate:
      emit(e.args[0], resolve, code);
      code.push_back({Op::Neg, 0, 0.0});
      return;
    case Expr::Kind::Add:
    case Expr::Kind::Subtract:
    case Expr::Kind::Multiply:
    case Expr::Kind::Divide: {
      emit(e.args[0], resolve, code);
      emit(e.args[1], resolve, code);
      const Op op = e.kind == Expr::Kind::Add        ? Op::Add
                    : e.kind == Expr::Kind::Subtract ? Op::Sub
                    : e.kind == Expr::Kind::Multiply ? Op::Mul
                                                     : Op::Div;
      code.push_back({op, 0, 0.0});
      return;
    }
    case Expr::Kind::Call:
      throw ParseError("function '" + e.name + "' is not allowed here", e.position);
    case Expr::Kind::Index:
      throw ParseError("array access '" + e.name + "[...]' is not allowed here", e.position);
  }
}

}  // namespace

CompiledExpr CompiledExpr::compile(const Expr& e, const Resolver& resolve) {
  CompiledExpr out;
  emit(e, resolve, out.code_);
  std::size_t depth = 0, max_depth = 0;
  for (const auto& ins : out.code_) {
    switch (ins.op) {
      case Op::Const:
      case Op::Place:
      case Op::Var: ++depth; break;
      case Op::Neg: break;
      default: --depth; break;
    }
    max_depth = std::max(max_depth, depth);
    if (ins.op == Op::Place) out.places_.push_back(ins.index);
  }
  if (max_depth > kMaxDepth) throw ModelError("expression nesting too deep: " + to_string(e));
  std::sort(out.places_.begin(), out.places_.end());
  out.places_.erase(std::unique(out.places_.begin(), out.places_.end()), out.places_.end());
  return out;
}

CompiledExpr CompiledExpr::constant(double v) {
  CompiledExpr out;
  out.code_.push_back({Op::Const, 0, v});
  return out;
}

bool CompiledExpr::is_constant() const noexcept {
  return std::all_of(code_.begin(), code_.end(),
                     [](const Instr& i) { return i.op != Op::Place && i.op != Op::Var; });
}

bool CompiledExpr::reads_variables() const noexcept {
  return std::any_of(code_.begin(), code_.end(), [](const Instr& i) { return i.op == Op::Var; });
}

double CompiledExpr::evaluate(std::span<const std::uint64_t> marking,
                              std::span<const double> variables) const noexcept {
  if (code_.size() == 1) {
    const Instr& i = code_[0];
    switch (i.op) {
      case Op::Const: return i.value;
      case Op::Place: return static_cast<double>(marking[i.index]);
      case Op::Var: return variables[i.index];
      default: break;
    }
  }
  std::array<double, kMaxDepth> stack;
  std::size_t sp = 0;
  for (const Instr& i : code_) {
    switch (i.op) {
      case Op::Const: stack[sp++] = i.value; break;
      case Op::Place: stack[sp++] = static_cast<double>(marking[i.index]); break;
      case Op::Var: stack[sp++] = variables[i.index]; break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
    }
  }
  return sp ? stack[0] : 0.0;
}

CompiledConjunction CompiledConjunction::compile(const Conjunction& c, const Resolver& resolve) {
  CompiledConjunction out;
  for (const auto& t : c.terms)
    out.terms_.push_back({CompiledExpr::compile(t.lhs, resolve), t.op,
                          CompiledExpr::compile(t.rhs, resolve)});
  return out;
}

bool CompiledConjunction::holds(std::span<const std::uint64_t> marking,
                                std::span<const double> variables) const noexcept {
  for (const auto& t : terms_) {
    if (!compare(t.lhs.evaluate(marking, variables), t.op, t.rhs.evaluate(marking, variables)))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Linear decomposition

namespace {

bool is_zero(const Expr& e) { return e.is_constant() && e.value == 0.0; }

Expr simplify_add(Expr a, Expr b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value + b.value);
  return std::move(a) + std::move(b);
}

Expr simplify_mul(Expr a, Expr b) {
  if (a.is_constant() && a.value == 1.0) return b;
  if (b.is_constant() && b.value == 1.0) return a;
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value * b.value);
  return std::move(a) * std::move(b);
}

Expr simplify_neg(Expr a) {
  if (a.is_constant()) return Expr::constant(-a.value);
  return Expr::negate(std::move(a));
}

using VarIndex = std::function<std::optional<std::size_t>(std::string_view)>;

std::optional<LinearExpr> lin(const Expr& e, std::size_t n, const VarIndex& var) {
  LinearExpr out;
  out.coefficients.assign(n, std::nullopt);
  out.constant = Expr::constant(0.0);
  auto var_free = [](const LinearExpr& l) {
    return std::all_of(l.coefficients.begin(), l.coefficients.end(),
                       [](const auto& c) { return !c.has_value(); });
  };
  switch (e.kind) {
    case Expr::Kind::Constant: out.constant = e; return out;
    case Expr::Kind::Identifier:
      if (auto idx = var(e.name)) {
        out.coefficients[*idx] = Expr::constant(1.0);
      } else {
        out.constant = e;
      }
      return out;
    case Expr::Kind::Negate: {
      auto a = lin(e.args[0], n, var);
      if (!a) return std::nullopt;
      for (auto& c : a->coefficients)
        if (c) c = simplify_neg(*c);
      a->constant = simplify_neg(a->constant);
      return a;
    }
    case Expr::Kind::Add:
    case Expr::Kind::Subtract: {
      auto a = lin(e.args[0], n, var);
      auto b = lin(e.args[1], n, var);
      if (!a || !b) return std::nullopt;
      const bool sub = e.kind == Expr::Kind::Subtract;
      for (std::size_t i = 0; i < n; ++i) {
        if (!b->coefficients[i]) continue;
        Expr rhs = sub ? simplify_neg(*b->coefficients[i]) : *b->coefficients[i];
        a->coefficients[i] = a->coefficients[i] ? simplify_add(*a->coefficients[i], rhs) : rhs;
      }
      a->constant = simplify_add(a->constant, sub ? simplify_neg(b->constant) : b->constant);
      return a;
    }
    case Expr::Kind::Multiply: {
      auto a = lin(e.args[0], n, var);
      auto b = lin(e.args[1], n, var);
      if (!a || !b) return std::nullopt;
      if (!var_free(*a) && !var_free(*b)) return std::nullopt;
      LinearExpr& varying = var_free(*a) ? *b : *a;
      const Expr& scale = var_free(*a) ? a->constant : b->constant;
      for (auto& c : varying.coefficients)
        if (c) c = simplify_mul(*c, scale);
      varying.constant = simplify_mul(varying.constant, scale);
      return varying;
    }
    case Expr::Kind::Divide: {
      auto a = lin(e.args[0], n, var);
      auto b = lin(e.args[1], n, var);
      if (!a || !b || !var_free(*b)) return std::nullopt;
      for (auto& c : a->coefficients)
        if (c) c = *c / b->constant;
      a->constant = a->constant / b->constant;
      return a;
    }
    case Expr::Kind::Call:
    case Expr::Kind::Index: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<LinearExpr> linearize(const Expr& e, std::size_t variable_count,
                                    const VarIndex& variable_index) {
  return lin(e, variable_count, variable_index);
}

// ---------------------------------------------------------------------------
// Polynomial normal form

namespace {

void add_into(Polynomial& acc, const Polynomial& p, double scale) {
  for (const auto& [mono, coef] : p) {
    double& slot = acc[mono];
    slot += scale * coef;
    if (slot == 0.0) acc.erase(mono);
  }
}

}  // namespace

std::optional<Polynomial> to_polynomial(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Constant: {
      Polynomial p;
      if (e.value != 0.0) p[{}] = e.value;
      return p;
    }
    case Expr::Kind::Identifier: return Polynomial{{{e.name}, 1.0}};
    case Expr::Kind::Negate: {
      auto a = to_polynomial(e.args[0]);
      if (!a) return std::nullopt;
      for (auto& [m, c] : *a) c = -c;
      return a;
    }
    case Expr::Kind::Add:
    case Expr::Kind::Subtract: {
      auto a = to_polynomial(e.args[0]);
      auto b = to_polynomial(e.args[1]);
      if (!a || !b) return std::nullopt;
      add_into(*a, *b, e.kind == Expr::Kind::Add ? 1.0 : -1.0);
      return a;
    }
    case Expr::Kind::Multiply: {
      auto a = to_polynomial(e.args[0]);
      auto b = to_polynomial(e.args[1]);
      if (!a || !b) return std::nullopt;
      Polynomial out;
      for (const auto& [ma, ca] : *a) {
        for (const auto& [mb, cb] : *b) {
          std::vector<std::string> mono = ma;
          mono.insert(mono.end(), mb.begin(), mb.end());
          std::sort(mono.begin(), mono.end());
          add_into(out, Polynomial{{mono, ca * cb}}, 1.0);
        }
      }
      return out;
    }
    case Expr::Kind::Divide: {
      auto a = to_polynomial(e.args[0]);
      auto b = to_polynomial(e.args[1]);
      if (!a || !b) return std::nullopt;
      if (b->size() != 1 || !b->begin()->first.empty()) return std::nullopt;
      const double d = b->begin()->second;
      for (auto& [m, c] : *a) c /= d;
      return a;
    }
    case Expr::Kind::Call:
    case Expr::Kind::Index: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace hasl

#include "hasl/models.hpp"

namespace hasl {

namespace {

Expr id(const std::string& n) { return Expr::identifier(n); }
Expr num(double v) { return Expr::constant(v); }

std::vector<std::pair<std::string, double CircadianRates::*>> circadian_fields() {
  return {{"alpha_A", &CircadianRates::alpha_A},       {"alpha_A_prime", &CircadianRates::alpha_A_prime},
          {"alpha_R", &CircadianRates::alpha_R},       {"alpha_R_prime", &CircadianRates::alpha_R_prime},
          {"beta_A", &CircadianRates::beta_A},         {"beta_R", &CircadianRates::beta_R},
          {"delta_MA", &CircadianRates::delta_MA},     {"delta_MR", &CircadianRates::delta_MR},
          {"delta_A", &CircadianRates::delta_A},       {"delta_R", &CircadianRates::delta_R},
          {"gamma_A", &CircadianRates::gamma_A},       {"gamma_R", &CircadianRates::gamma_R},
          {"gamma_C", &CircadianRates::gamma_C},       {"theta_A", &CircadianRates::theta_A},
          {"theta_R", &CircadianRates::theta_R}};
}

TransitionDef reaction(std::string name, std::vector<Arc> in, std::vector<Arc> out, Expr rate) {
  TransitionDef t;
  t.name = std::move(name);
  t.inputs = std::move(in);
  t.outputs = std::move(out);
  t.law = DelayLaw::exponential();
  t.rate = std::move(rate);
  return t;
}

}  // namespace

void CircadianRates::set(const std::string& name, double value) {
  for (const auto& [n, field] : circadian_fields()) {
    if (n == name) {
      if (!(value > 0.0)) throw ModelError("rate '" + name + "' must be positive");
      this->*field = value;
      return;
    }
  }
  throw ModelError("unknown circadian rate '" + name + "'");
}

std::map<std::string, double> CircadianRates::as_map() const {
  std::map<std::string, double> out;
  for (const auto& [n, field] : circadian_fields()) out[n] = this->*field;
  return out;
}

GspnModel circadian(const CircadianRates& r) {
  for (const auto& [n, v] : r.as_map())
    if (!(v > 0.0)) throw ModelError("rate '" + n + "' must be positive");

  const std::vector<std::string> places{"D_A", "D'_A", "D_R", "D'_R", "M_A", "M_R", "A", "R", "C"};
  const Expr DA = id("D_A"), DAp = id("D'_A"), DR = id("D_R"), DRp = id("D'_R");
  const Expr MA = id("M_A"), MR = id("M_R"), A = id("A"), R = id("R"), C = id("C");

  std::vector<TransitionDef> ts;
  ts.push_back(reaction("R1", {{"A"}, {"D_A"}}, {{"D'_A"}}, num(r.gamma_A) * A * DA));
  ts.push_back(reaction("R2", {{"D'_A"}}, {{"A"}, {"D_A"}}, num(r.theta_A) * DAp));
  ts.push_back(reaction("R3", {{"A"}, {"D_R"}}, {{"D'_R"}}, num(r.gamma_R) * A * DR));
  ts.push_back(reaction("R4", {{"D'_R"}}, {{"A"}, {"D_R"}}, num(r.theta_R) * DRp));
  ts.push_back(reaction("R5", {{"D'_A"}}, {{"M_A"}, {"D'_A"}}, num(r.alpha_A_prime) * DAp));
  ts.push_back(reaction("R6", {{"D_A"}}, {{"M_A"}, {"D_A"}}, num(r.alpha_A) * DA));
  ts.push_back(reaction("R7", {{"D'_R"}}, {{"M_R"}, {"D'_R"}}, num(r.alpha_R_prime) * DRp));
  ts.push_back(reaction("R8", {{"D_R"}}, {{"M_R"}, {"D_R"}}, num(r.alpha_R) * DR));
  ts.push_back(reaction("R9", {{"M_A"}}, {{"M_A"}, {"A"}}, num(r.beta_A) * MA));
  ts.push_back(reaction("R10", {{"M_R"}}, {{"M_R"}, {"R"}}, num(r.beta_R) * MR));
  ts.push_back(reaction("R11", {{"A"}, {"R"}}, {{"C"}}, num(r.gamma_C) * A * R));
  ts.push_back(reaction("R12", {{"C"}}, {{"R"}}, num(r.delta_A) * C));
  ts.push_back(reaction("R13", {{"A"}}, {}, num(r.delta_A) * A));
  ts.push_back(reaction("R14", {{"R"}}, {}, num(r.delta_R) * R));
  ts.push_back(reaction("R15", {{"M_A"}}, {}, num(r.delta_MA) * MA));
  ts.push_back(reaction("R16", {{"M_R"}}, {}, num(r.delta_MR) * MR));

  Marking m0(places.size(), 0);
  m0[0] = 1;  // D_A
  m0[2] = 1;  // D_R
  std::vector<Comparison> invariants{make_cmp(DA + DAp, Cmp::Eq, num(1)), make_cmp(DR + DRp, Cmp::Eq, num(1))};
  return GspnModel(places, std::move(ts), std::move(m0), std::move(invariants));
}

void GeneExpressionRates::set(const std::string& name, double value) {
  if (!(value > 0.0)) throw ModelError("rate '" + name + "' must be positive");
  if (name == "bind") bind = value;
  else if (name == "unbind") unbind = value;
  else if (name == "transc") transc = value;
  else if (name == "transc_bound") transc_bound = value;
  else if (name == "degrade") degrade = value;
  else if (name == "transl") transl = value;
  else throw ModelError("unknown gene-expression rate '" + name + "'");
}

GspnModel gene_expression(const GeneExpressionRates& r) {
  const std::vector<std::string> places{"protA", "geneA", "A_geneA", "mrnA"};
  std::vector<TransitionDef> ts;
  ts.push_back(reaction("bind", {{"protA"}, {"geneA"}}, {{"A_geneA"}}, num(r.bind) * id("protA") * id("geneA")));
  ts.push_back(reaction("unbind", {{"A_geneA"}}, {{"protA"}, {"geneA"}}, num(r.unbind) * id("A_geneA")));
  ts.push_back(reaction("degrade", {{"mrnA"}}, {}, num(r.degrade) * id("mrnA")));
  // Transcription reads both gene states without consuming them.
  TransitionDef transc =
      reaction("transc", {}, {{"mrnA"}}, num(r.transc) * id("geneA") + num(r.transc_bound) * id("A_geneA"));
  transc.guard = Conjunction{{make_cmp(id("geneA") + id("A_geneA"), Cmp::Ge, num(1))}};
  ts.push_back(std::move(transc));
  ts.push_back(reaction("transl", {{"mrnA"}}, {{"mrnA"}, {"protA"}}, num(r.transl) * id("mrnA")));
  return GspnModel(places, std::move(ts), Marking{2, 1, 0, 0},
                   {make_cmp(id("geneA") + id("A_geneA"), Cmp::Eq, num(1))});
}

GspnModel poisson_source(double rate) {
  if (!(rate > 0.0)) throw ModelError("rate must be positive");
  return GspnModel({"X"}, {reaction("fire", {}, {{"X"}}, num(rate))}, Marking{0});
}

Lha build_counter(const std::string& event, std::int64_t N, const std::string& observed) {
  if (N < 1) throw ModelError("counter automaton needs N >= 1");
  LhaDef d;
  d.events = {event};
  d.variables = {"t", "n", "a"};
  d.locations = {{"l0", {}, {{"t", num(1)}}}, {"l1", {}, {}}};
  d.initial = {"l0"};
  d.final = {"l1"};
  std::vector<std::pair<std::string, Expr>> observe;
  if (!observed.empty()) observe.push_back({"a", id(observed)});
  auto counted = observe;
  counted.push_back({"n", id("n") + num(1)});
  const Conjunction below{{make_cmp(id("n"), Cmp::Lt, num(static_cast<double>(N)))}};
  d.edges.push_back({"l0", "l0", Trigger::on({event}), below, counted, {}});
  d.edges.push_back({"l0", "l0", Trigger::except({event}), below, observe, {}});
  d.edges.push_back({"l0", "l1", Trigger::autonomous(),
                     {{make_cmp(id("n"), Cmp::Eq, num(static_cast<double>(N)))}}, {}, {}});
  return Lha(std::move(d));
}

}  // namespace hasl

#include "hasl/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include "json.hpp"
#include <sstream>

namespace hasl {

using nlohmann::json;

namespace {

std::string where(const std::string& ctx, const std::string& msg) { return ctx.empty() ? msg : ctx + ": " + msg; }

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

const json& require(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where(ctx, std::string("missing key '") + key + "'"));
  return j.at(key);
}

std::string get_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) throw FormatError(where(ctx, "expected a string"));
  return j.get<std::string>();
}

double get_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw FormatError(where(ctx, "expected a number"));
  return j.get<double>();
}

// Expression fields may be written as strings or plain numbers.
Expr get_expr(const json& j, const std::string& ctx) {
  try {
    if (j.is_number()) return Expr::constant(j.get<double>());
    return parse_expression(get_string(j, ctx));
  } catch (const ParseError& e) {
    throw FormatError(where(ctx, std::string(e.what()) + " at offset " + std::to_string(e.position())));
  }
}

Conjunction get_conjunction(const json& j, const std::string& ctx) {
  try {
    if (j.is_boolean()) {
      if (!j.get<bool>()) throw FormatError(where(ctx, "constant false is not a valid constraint"));
      return {};
    }
    return parse_conjunction(get_string(j, ctx));
  } catch (const ParseError& e) {
    throw FormatError(where(ctx, std::string(e.what()) + " at offset " + std::to_string(e.position())));
  }
}

std::vector<Arc> get_arcs(const json& j, const std::string& ctx) {
  std::vector<Arc> arcs;
  if (j.is_null()) return arcs;
  if (!j.is_object()) throw FormatError(where(ctx, "arcs must be an object place -> multiplicity"));
  for (const auto& [place, mult] : j.items()) {
    if (!mult.is_number_integer() || mult.get<std::int64_t>() < 1)
      throw FormatError(where(ctx, "multiplicity of '" + place + "' must be a positive integer"));
    arcs.push_back({place, mult.get<std::uint64_t>()});
  }
  return arcs;
}

json arcs_to_json(const std::vector<Arc>& arcs) {
  json j = json::object();
  for (const auto& a : arcs) j[a.place] = a.multiplicity;
  return j;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Models

GspnModel model_from_json_text(const std::string& text) {
  const json j = parse_json(text);
  std::vector<std::string> places;
  for (const auto& p : require(j, "places", "model")) places.push_back(get_string(p, "places"));

  Marking m0(places.size(), 0);
  if (j.contains("initial_marking")) {
    const json& im = j.at("initial_marking");
    if (!im.is_object()) throw FormatError("initial_marking must be an object place -> count");
    for (const auto& [place, count] : im.items()) {
      auto it = std::find(places.begin(), places.end(), place);
      if (it == places.end()) throw FormatError("initial_marking: unknown place '" + place + "'");
      if (!count.is_number_integer() || count.get<std::int64_t>() < 0)
        throw FormatError("initial_marking: count of '" + place + "' must be a natural number");
      m0[static_cast<std::size_t>(it - places.begin())] = count.get<std::uint64_t>();
    }
  }

  std::vector<TransitionDef> ts;
  for (const auto& tj : require(j, "transitions", "model")) {
    TransitionDef t;
    t.name = get_string(require(tj, "name", "transition"), "transition name");
    const std::string ctx = "transition '" + t.name + "'";
    if (tj.contains("in")) t.inputs = get_arcs(tj.at("in"), ctx);
    if (tj.contains("out")) t.outputs = get_arcs(tj.at("out"), ctx);
    const std::string law = tj.contains("law") ? get_string(tj.at("law"), ctx) : "exp";
    if (law == "exp") {
      t.law = DelayLaw::exponential();
      t.rate = get_expr(require(tj, "rate", ctx), ctx + " rate");
    } else if (law == "det") {
      t.law = DelayLaw::deterministic(get_number(require(tj, "duration", ctx), ctx));
    } else if (law == "unif") {
      t.law = DelayLaw::uniform(get_number(require(tj, "lo", ctx), ctx), get_number(require(tj, "hi", ctx), ctx));
    } else {
      throw FormatError(where(ctx, "law must be exp, det or unif"));
    }
    if (tj.contains("guard")) t.guard = get_conjunction(tj.at("guard"), ctx + " guard");
    ts.push_back(std::move(t));
  }

  std::vector<Comparison> invariants;
  if (j.contains("invariants")) {
    for (const auto& inv : j.at("invariants")) {
      const Conjunction c = get_conjunction(inv, "invariant");
      if (c.terms.size() != 1) throw FormatError("each invariant must be a single comparison");
      invariants.push_back(c.terms.front());
    }
  }
  try {
    return GspnModel(std::move(places), std::move(ts), std::move(m0), std::move(invariants));
  } catch (const ModelError& e) {
    throw FormatError(e.what());
  }
}

std::string model_to_json_text(const GspnModel& model) {
  json j;
  j["places"] = model.places();
  json im = json::object();
  for (std::size_t i = 0; i < model.places().size(); ++i)
    if (model.initial_marking()[i] != 0) im[model.places()[i]] = model.initial_marking()[i];
  j["initial_marking"] = im;
  json ts = json::array();
  for (const auto& t : model.transitions()) {
    json tj;
    tj["name"] = t.name();
    tj["in"] = arcs_to_json(t.def.inputs);
    tj["out"] = arcs_to_json(t.def.outputs);
    switch (t.def.law.kind) {
      case DelayLaw::Kind::Exponential:
        tj["law"] = "exp";
        tj["rate"] = to_string(t.def.rate);
        break;
      case DelayLaw::Kind::Deterministic:
        tj["law"] = "det";
        tj["duration"] = t.def.law.duration;
        break;
      case DelayLaw::Kind::Uniform:
        tj["law"] = "unif";
        tj["lo"] = t.def.law.lo;
        tj["hi"] = t.def.law.hi;
        break;
    }
    if (!t.def.guard.is_true()) tj["guard"] = to_string(t.def.guard);
    ts.push_back(tj);
  }
  j["transitions"] = ts;
  json inv = json::array();
  for (const auto& c : model.invariants()) inv.push_back(to_string(c));
  j["invariants"] = inv;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Automata

namespace {

Trigger get_trigger(const json& j, const std::string& ctx) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "#") return Trigger::autonomous();
    if (s == "*") return Trigger::any();
    return Trigger::on({s});
  }
  if (j.is_array()) {
    std::set<std::string> events;
    for (const auto& e : j) events.insert(get_string(e, ctx));
    return Trigger::on(std::move(events));
  }
  if (j.is_object() && j.contains("except")) {
    std::set<std::string> events;
    for (const auto& e : j.at("except")) events.insert(get_string(e, ctx));
    return Trigger::except(std::move(events));
  }
  throw FormatError(where(ctx, "sync must be \"#\", \"*\", a list of events or {\"except\": [...]}"));
}

json trigger_to_json(const Trigger& t) {
  switch (t.kind) {
    case Trigger::Kind::Autonomous: return "#";
    case Trigger::Kind::AllEvents: return "*";
    case Trigger::Kind::Events: return json(std::vector<std::string>(t.events.begin(), t.events.end()));
    case Trigger::Kind::AllExcept:
      return json{{"except", std::vector<std::string>(t.events.begin(), t.events.end())}};
  }
  return nullptr;
}

std::vector<std::pair<std::string, Expr>> get_assignments(const json& j, const std::string& ctx) {
  std::vector<std::pair<std::string, Expr>> out;
  if (!j.is_object()) throw FormatError(where(ctx, "expected an object name -> expression"));
  for (const auto& [k, v] : j.items()) out.emplace_back(k, get_expr(v, ctx + " '" + k + "'"));
  return out;
}

json assignments_to_json(const std::vector<std::pair<std::string, Expr>>& as) {
  json j = json::object();
  for (const auto& [k, v] : as) j[k] = to_string(v);
  return j;
}

}  // namespace

Lha lha_from_json_text(const std::string& text) {
  const json j = parse_json(text);
  LhaDef d;
  if (j.contains("events"))
    for (const auto& e : j.at("events")) d.events.insert(get_string(e, "events"));
  if (j.contains("variables"))
    for (const auto& v : j.at("variables")) d.variables.push_back(get_string(v, "variables"));
  if (j.contains("arrays")) {
    for (const auto& [name, bound] : j.at("arrays").items()) {
      if (!bound.is_number_integer() || bound.get<std::int64_t>() < 1)
        throw FormatError("array '" + name + "' needs a positive integer bound");
      d.arrays.push_back({name, bound.get<std::size_t>()});
    }
  }
  for (const auto& lj : require(j, "locations", "automaton")) {
    LocationDef l;
    l.name = get_string(require(lj, "name", "location"), "location name");
    const std::string ctx = "location '" + l.name + "'";
    if (lj.contains("invariant")) l.invariant = get_conjunction(lj.at("invariant"), ctx + " invariant");
    if (lj.contains("flow"))
      for (const auto& [v, f] : lj.at("flow").items()) l.flow.emplace(v, get_expr(f, ctx + " flow"));
    d.locations.push_back(std::move(l));
  }
  for (const auto& n : require(j, "initial", "automaton")) d.initial.insert(get_string(n, "initial"));
  for (const auto& n : require(j, "final", "automaton")) d.final.insert(get_string(n, "final"));
  std::size_t index = 0;
  for (const auto& ej : require(j, "edges", "automaton")) {
    const std::string ctx = "edge " + std::to_string(index++);
    EdgeDef e;
    e.source = get_string(require(ej, "src", ctx), ctx);
    e.target = get_string(require(ej, "dst", ctx), ctx);
    e.trigger = get_trigger(require(ej, "sync", ctx), ctx);
    if (ej.contains("guard")) e.guard = get_conjunction(ej.at("guard"), ctx + " guard");
    if (ej.contains("updates")) e.updates = get_assignments(ej.at("updates"), ctx + " updates");
    if (ej.contains("count")) e.increments = get_assignments(ej.at("count"), ctx + " count");
    d.edges.push_back(std::move(e));
  }
  try {
    return Lha(std::move(d));
  } catch (const ModelError& e) {
    throw FormatError(e.what());
  }
}

std::string lha_to_json_text(const Lha& lha) {
  const LhaDef& d = lha.def();
  json j;
  j["events"] = std::vector<std::string>(d.events.begin(), d.events.end());
  j["variables"] = d.variables;
  if (!d.arrays.empty()) {
    json arrays = json::object();
    for (const auto& a : d.arrays) arrays[a.name] = a.bound;
    j["arrays"] = arrays;
  }
  json locs = json::array();
  for (const auto& l : d.locations) {
    json lj;
    lj["name"] = l.name;
    lj["invariant"] = l.invariant.is_true() ? "true" : to_string(l.invariant);
    json flow = json::object();
    for (const auto& [v, f] : l.flow) flow[v] = to_string(f);
    lj["flow"] = flow;
    locs.push_back(lj);
  }
  j["locations"] = locs;
  j["initial"] = std::vector<std::string>(d.initial.begin(), d.initial.end());
  j["final"] = std::vector<std::string>(d.final.begin(), d.final.end());
  json edges = json::array();
  for (const auto& e : d.edges) {
    json ej;
    ej["src"] = e.source;
    ej["dst"] = e.target;
    ej["sync"] = trigger_to_json(e.trigger);
    ej["guard"] = e.guard.is_true() ? "true" : to_string(e.guard);
    ej["updates"] = assignments_to_json(e.updates);
    if (!e.increments.empty()) ej["count"] = assignments_to_json(e.increments);
    edges.push_back(ej);
  }
  j["edges"] = edges;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string_view kind_name(HaslExpression::Kind k) {
  switch (k) {
    case HaslExpression::Kind::Expectation: return "expectation";
    case HaslExpression::Kind::Probability: return "probability";
    case HaslExpression::Kind::Pdf: return "pdf";
    case HaslExpression::Kind::Cdf: return "cdf";
  }
  return "?";
}

json report_json(const EstimationReport& r) {
  json j;
  j["expression"] = r.expression;
  j["kind"] = kind_name(r.kind);
  j["estimate"] = finite_or_null(r.estimate);
  j["ci_low"] = finite_or_null(r.ci_low);
  j["ci_high"] = finite_or_null(r.ci_high);
  j["halfwidth"] = finite_or_null(r.halfwidth);
  j["confidence"] = r.confidence;
  j["converged"] = r.converged;
  j["samples_used"] = r.samples_used;
  j["accepted_count"] = r.accepted_count;
  j["rejected_count"] = r.rejected_count;
  j["discarded_count"] = r.discarded_count;
  j["acceptance_rate"] = r.samples_used ? static_cast<double>(r.accepted_count) / static_cast<double>(r.samples_used) : 0.0;
  json rej = json::object();
  for (const auto& [reason, count] : r.rejections) rej[reason] = count;
  j["rejections"] = rej;
  if (!r.components.empty()) {
    json comps = json::array();
    for (const auto& c : r.components)
      comps.push_back({{"estimate", finite_or_null(c.estimate)},
                       {"ci_low", finite_or_null(c.ci_low)},
                       {"ci_high", finite_or_null(c.ci_high)},
                       {"samples", c.samples}});
    j["components"] = comps;
  }
  if (r.histogram) {
    const Histogram& h = *r.histogram;
    j["histogram"] = {{"bin_width", h.s},
                      {"low", h.l},
                      {"high", h.h},
                      {"cumulative", h.cumulative},
                      {"counts", h.counts},
                      {"overflow", h.overflow},
                      {"frequency_over_total", h.frequency},
                      {"frequency_over_accepted", h.frequency_accepted}};
  }
  j["seed"] = r.seed;
  j["workers"] = r.workers;
  j["elapsed_seconds"] = r.elapsed_seconds;
  return j;
}

}  // namespace

std::string report_to_json_text(const EstimationReport& report) { return report_json(report).dump(2); }

std::string reports_to_json_text(const std::vector<EstimationReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(2);
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_low,bin_high,frequency,count\n" << std::setprecision(12);
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    os << h.bin_low(i) << ',' << h.bin_high(i) << ',' << h.frequency[i] << ',' << h.counts[i] << '\n';
}

void write_peak_histogram_csv(std::ostream& os, const EstimationReport& maxima, const EstimationReport& minima) {
  os << "level,frequency_max,frequency_min\n" << std::setprecision(12);
  const std::size_t n = std::max(maxima.components.size(), minima.components.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < maxima.components.size() ? maxima.components[i].estimate : 0.0;
    const double b = i < minima.components.size() ? minima.components[i].estimate : 0.0;
    os << i << ',' << a << ',' << b << '\n';
  }
}

// ---------------------------------------------------------------------------
// Traces

namespace {

void write_marking(std::ostream& os, const Marking& m) {
  for (std::size_t i = 0; i < m.size(); ++i) os << (i ? "," : "") << m[i];
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

Marking parse_marking(const std::string& s, std::size_t line) {
  Marking m;
  for (const auto& part : split(s, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      m.push_back(v);
    } catch (const std::exception&) {
      throw FormatError("line " + std::to_string(line) + ": invalid marking entry '" + part + "'");
    }
  }
  return m;
}

}  // namespace

void write_trace(std::ostream& os, const RecordedTrace& trace) {
  os << "#places\t";
  for (std::size_t i = 0; i < trace.places.size(); ++i) os << (i ? "," : "") << trace.places[i];
  os << "\n#initial\t";
  write_marking(os, trace.initial);
  os << '\n' << std::setprecision(17);
  for (const auto& e : trace.events) {
    os << e.time << '\t' << e.event << '\t';
    write_marking(os, e.marking_after);
    os << '\n';
  }
  if (!trace.end_marker.empty()) os << "#end\t" << trace.end_marker << '\n';
}

RecordedTrace read_trace(std::istream& is) {
  RecordedTrace t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (line[0] == '#') {
      if (fields[0] == "#places" && fields.size() == 2) t.places = split(fields[1], ',');
      else if (fields[0] == "#initial" && fields.size() == 2) t.initial = parse_marking(fields[1], n);
      else if (fields[0] == "#end" && fields.size() == 2) t.end_marker = fields[1];
      continue;
    }
    if (fields.size() != 3) throw FormatError("line " + std::to_string(n) + ": expected time<TAB>event<TAB>marking");
    TimedEvent e;
    try {
      std::size_t used = 0;
      e.time = std::stod(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
    } catch (const std::exception&) {
      throw FormatError("line " + std::to_string(n) + ": invalid time '" + fields[0] + "'");
    }
    e.event = fields[1];
    e.marking_after = parse_marking(fields[2], n);
    if (!t.places.empty() && e.marking_after.size() != t.places.size())
      throw FormatError("line " + std::to_string(n) + ": marking has the wrong dimension");
    t.events.push_back(std::move(e));
  }
  if (t.places.empty()) throw FormatError("trace lacks a #places line");
  if (t.initial.size() != t.places.size()) throw FormatError("trace lacks a valid #initial line");
  return t;
}

void write_time_series_csv(std::ostream& os, const RecordedTrace& trace, bool include_initial) {
  os << "time";
  for (const auto& p : trace.places) os << ',' << p;
  os << '\n' << std::setprecision(12);
  auto row = [&](double time, const Marking& m) {
    os << time;
    for (auto v : m) os << ',' << v;
    os << '\n';
  };
  if (include_initial) row(0.0, trace.initial);
  for (const auto& e : trace.events) row(e.time, e.marking_after);
}

std::vector<Sample> read_samples_csv(std::istream& is) {
  std::vector<Sample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2) throw FormatError("line " + std::to_string(n) + ": expected time,value");
    try {
      std::size_t a = 0, b = 0;
      const double t = std::stod(fields[0], &a);
      const double v = std::stod(fields[1], &b);
      if (a != fields[0].size() || b != fields[1].size()) throw std::invalid_argument(line);
      out.push_back({t, v});
    } catch (const std::exception&) {
      if (n == 1 && out.empty()) continue;  // header
      throw FormatError("line " + std::to_string(n) + ": invalid number");
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hasl

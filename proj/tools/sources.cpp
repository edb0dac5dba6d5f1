#include "sources.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "hasl/io.hpp"
#include "hasl/models.hpp"
#include "hasl/oscillation.hpp"

namespace hasl::cli {

namespace {

constexpr std::string_view kBuiltin = "builtin:";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw UsageError("parameter '" + key + "' expects a number, got '" + text + "'");
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v)) throw UsageError("parameter '" + key + "' expects an integer, got '" + text + "'");
  return static_cast<std::int64_t>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw UsageError("parameter '" + key + "' expects a boolean, got '" + text + "'");
}

void check_known(const SourceSpec& spec, const std::vector<std::string>& known) {
  for (const auto& [k, v] : spec.params)
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw UsageError("builtin:" + spec.name + " has no parameter '" + k + "'");
}

}  // namespace

bool SourceSpec::has(const std::string& key) const {
  return std::any_of(params.begin(), params.end(), [&](const auto& p) { return p.first == key; });
}

SourceSpec SourceSpec::with(const std::string& key, const std::string& value) const {
  SourceSpec out = *this;
  out.params.erase(std::remove_if(out.params.begin(), out.params.end(), [&](const auto& p) { return p.first == key; }),
                   out.params.end());
  out.params.emplace_back(key, value);
  return out;
}

std::string SourceSpec::to_string() const {
  if (!builtin) return name;
  std::string s = std::string(kBuiltin) + name;
  for (const auto& [k, v] : params) s += "," + k + "=" + v;
  return s;
}

SourceSpec parse_source(const std::string& text) {
  SourceSpec spec;
  if (text.rfind(kBuiltin, 0) != 0) {
    if (text.empty()) throw UsageError("empty source");
    spec.name = text;
    return spec;
  }
  spec.builtin = true;
  const auto parts = split(text.substr(kBuiltin.size()), ',');
  spec.name = parts.front();
  if (spec.name.empty()) throw UsageError("missing builtin name in '" + text + "'");
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value in '" + parts[i] + "'");
    spec.params.emplace_back(parts[i].substr(0, eq), parts[i].substr(eq + 1));
  }
  return spec;
}

std::vector<std::string> model_parameters(const SourceSpec& spec) {
  if (!spec.builtin) return {};
  if (spec.name == "circadian") {
    std::vector<std::string> out;
    for (const auto& [k, v] : CircadianRates{}.as_map()) out.push_back(k);
    return out;
  }
  if (spec.name == "gene_expression") return {"bind", "unbind", "transc", "transc_bound", "degrade", "transl"};
  if (spec.name == "poisson") return {"rate"};
  throw UsageError("unknown builtin model '" + spec.name + "'");
}

std::vector<std::string> lha_parameters(const SourceSpec& spec) {
  if (!spec.builtin) return {};
  if (spec.name == "per") return {"species", "L", "H", "initT", "N", "from_high"};
  if (spec.name == "peaks") return {"species", "delta", "initT", "N", "bound"};
  if (spec.name == "count") return {"event", "N", "observed"};
  throw UsageError("unknown builtin automaton '" + spec.name + "'");
}

GspnModel load_model(const SourceSpec& spec) {
  if (!spec.builtin) return model_from_json_text(read_file(spec.name));
  check_known(spec, model_parameters(spec));
  if (spec.name == "circadian") {
    CircadianRates r;
    for (const auto& [k, v] : spec.params) r.set(k, to_double(k, v));
    return circadian(r);
  }
  if (spec.name == "gene_expression") {
    GeneExpressionRates r;
    for (const auto& [k, v] : spec.params) r.set(k, to_double(k, v));
    return gene_expression(r);
  }
  double rate = 1.0;
  for (const auto& [k, v] : spec.params) rate = to_double(k, v);
  return poisson_source(rate);
}

Lha load_lha(const SourceSpec& spec, const GspnModel& model, std::uint64_t seed) {
  if (!spec.builtin) return lha_from_json_text(read_file(spec.name));
  check_known(spec, lha_parameters(spec));
  if (spec.name == "per") {
    PeriodParams p;
    for (const auto& [k, v] : spec.params) {
      if (k == "species") p.species = v;
      else if (k == "L") p.L = to_double(k, v);
      else if (k == "H") p.H = to_double(k, v);
      else if (k == "initT") p.initT = to_double(k, v);
      else if (k == "N") p.N = to_int(k, v);
      else if (k == "from_high") p.from_high = to_bool(k, v);
    }
    if (model.place_index(p.species) == std::nullopt) throw UsageError("model has no place '" + p.species + "'");
    return build_Aper(p);
  }
  if (spec.name == "peaks") {
    PeaksParams p;
    std::optional<double> delta;
    std::optional<std::size_t> bound;
    for (const auto& [k, v] : spec.params) {
      if (k == "species") p.species = v;
      else if (k == "delta") delta = to_double(k, v);
      else if (k == "initT") p.initT = to_double(k, v);
      else if (k == "N") p.N = to_int(k, v);
      else if (k == "bound") bound = static_cast<std::size_t>(std::max<std::int64_t>(1, to_int(k, v)));
    }
    if (model.place_index(p.species) == std::nullopt) throw UsageError("model has no place '" + p.species + "'");
    p.partition = classify_events(model, p.species);
    if (!delta || !bound) {
      const PilotResult pr = pilot(model, p.species, seed);
      p.delta = delta.value_or(std::max(1.0, std::ceil(0.1 * pr.mean_max)));
      p.bound = bound.value_or(static_cast<std::size_t>(std::max(16.0, std::ceil(4.0 * pr.max))));
    } else {
      p.delta = *delta;
      p.bound = *bound;
    }
    return build_Apeaks(p);
  }
  std::string event;
  std::int64_t N = 1;
  std::string observed;
  for (const auto& [k, v] : spec.params) {
    if (k == "event") event = v;
    else if (k == "N") N = to_int(k, v);
    else if (k == "observed") observed = v;
  }
  if (event.empty()) {
    if (model.transitions().empty()) throw UsageError("builtin:count needs event=");
    event = model.transitions().front().name();
  }
  return build_counter(event, N, observed);
}

}  // namespace hasl::cli

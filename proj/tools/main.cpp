// hasl-osc: estimation of oscillation measures on stochastic models.

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "hasl/estimator.hpp"
#include "hasl/io.hpp"
#include "hasl/oscillation.hpp"
#include "hasl/sync.hpp"
#include "sources.hpp"

namespace {

using namespace hasl;
using cli::UsageError;

enum Exit { kOk = 0, kUsage = 2, kInvalid = 3, kEstimation = 4 };

struct EstimationOptions {
  std::string model = "builtin:circadian";
  std::string lha;
  std::vector<std::string> exprs;
  double conf = 0.99;
  double halfwidth = 0.0;
  double relwidth = 0.0;
  std::uint64_t min_samples = 30;
  std::uint64_t max_samples = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string average = "time";
  std::uint64_t max_events = Budget{}.max_events;
  double max_time = Budget{}.max_time;
  std::string out;
  std::string format = "json";
  std::string sweep;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("OSC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("OSC_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 1;
}

void add_estimation_flags(CLI::App& cmd, EstimationOptions& o) {
  cmd.add_option("--model", o.model, "Model JSON file or builtin:circadian|gene_expression|poisson[,k=v...]")
      ->capture_default_str();
  cmd.add_option("--lha", o.lha, "Automaton JSON file or builtin:per|peaks|count[,k=v...]")->required();
  cmd.add_option("--expr", o.exprs, "Measure, e.g. 'E[last(tbar_p)]' or 'PDF(tbar_p,0.1,0,50)'")->required();
  cmd.add_option("--conf", o.conf, "Confidence level")->check(CLI::Range(0.5, 0.999999))->capture_default_str();
  auto* hw = cmd.add_option("--halfwidth", o.halfwidth, "Target absolute half-width")->check(CLI::PositiveNumber);
  auto* rw = cmd.add_option("--relwidth", o.relwidth, "Target half-width relative to the estimate")
                 ->check(CLI::PositiveNumber);
  hw->excludes(rw);
  cmd.add_option("--min-samples", o.min_samples, "Minimum number of trajectories")->capture_default_str();
  cmd.add_option("--max-samples", o.max_samples, "Maximum number of trajectories")->capture_default_str();
  cmd.add_option("--seed", o.seed, "Master seed (default: $OSC_SEED or 1)");
  cmd.add_option("--workers", o.workers, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
  cmd.add_option("--avg", o.average, "Averaging of avg(): time|event")
      ->check(CLI::IsMember({"time", "event"}))
      ->capture_default_str();
  cmd.add_option("--max-events", o.max_events, "Per-trajectory event budget")->capture_default_str();
  cmd.add_option("--max-time", o.max_time, "Per-trajectory time budget")->capture_default_str();
  cmd.add_option("--out", o.out, "Output file (default: stdout)");
  cmd.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

struct Output {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path);
    if (!file) throw UsageError("cannot write '" + path + "'");
    os = &file;
  }
};

struct Plan {
  std::vector<HaslExpression> exprs;
  CiPolicy policy;
  RunConfig run;
};

Plan make_plan(const EstimationOptions& o) {
  Plan p;
  for (const auto& text : o.exprs) p.exprs.push_back(parse_hasl(text));
  p.policy.confidence = o.conf;
  p.policy.halfwidth = o.halfwidth;
  if (o.relwidth > 0.0) p.policy.relative_width = o.relwidth;
  p.policy.min_samples = o.min_samples;
  p.policy.max_samples = o.max_samples;
  if (o.min_samples > o.max_samples) throw UsageError("--min-samples exceeds --max-samples");
  p.run.seed = o.seed;
  p.run.workers = o.workers;
  p.run.budget = {o.max_events, o.max_time};
  p.run.average = o.average == "event" ? AverageMode::Event : AverageMode::Time;
  return p;
}

std::vector<EstimationReport> run_estimation(const cli::SourceSpec& model_src, const cli::SourceSpec& lha_src,
                                             const Plan& plan) {
  const GspnModel model = cli::load_model(model_src);
  const Lha lha = cli::load_lha(lha_src, model, plan.run.seed);
  return estimate_all(plan.exprs, model, lha, plan.policy, plan.run);
}

void write_reports_csv(std::ostream& os, const std::vector<EstimationReport>& reports) {
  const auto all_arrays = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return !r.components.empty(); });
  if (reports.size() == 1 && reports.front().histogram) {
    write_histogram_csv(os, *reports.front().histogram);
  } else if (reports.size() == 2 && all_arrays) {
    write_peak_histogram_csv(os, reports[0], reports[1]);
  } else {
    os << "expression,estimate,ci_low,ci_high\n" << std::setprecision(12);
    for (const auto& r : reports) os << '"' << r.expression << "\"," << r.estimate << ',' << r.ci_low << ',' << r.ci_high << '\n';
  }
}

int cmd_run(const EstimationOptions& o) {
  const Plan plan = make_plan(o);
  const auto reports = run_estimation(cli::parse_source(o.model), cli::parse_source(o.lha), plan);
  Output out(o.out);
  if (o.format == "csv") write_reports_csv(*out.os, reports);
  else *out.os << (reports.size() == 1 ? report_to_json_text(reports.front()) : reports_to_json_text(reports)) << '\n';
  for (const auto& r : reports)
    if (!r.converged)
      std::cerr << "warning: '" << r.expression << "' stopped at max-samples before reaching the width target\n";
  return kOk;
}

int cmd_sweep(const EstimationOptions& o) {
  const auto eq = o.sweep.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--sweep expects param=v1,v2,...");
  const std::string param = o.sweep.substr(0, eq);
  std::vector<std::string> values;
  std::stringstream ss(o.sweep.substr(eq + 1));
  for (std::string v; std::getline(ss, v, ',');)
    if (!v.empty()) values.push_back(v);
  if (values.empty()) throw UsageError("--sweep has no values");

  const auto model_src = cli::parse_source(o.model);
  const auto lha_src = cli::parse_source(o.lha);
  const auto mp = cli::model_parameters(model_src);
  const auto lp = cli::lha_parameters(lha_src);
  const bool in_model = std::find(mp.begin(), mp.end(), param) != mp.end();
  const bool in_lha = std::find(lp.begin(), lp.end(), param) != lp.end();
  if (!in_model && !in_lha) throw UsageError("sweep parameter '" + param + "' is not a parameter of the model or automaton");

  Plan plan = make_plan(o);
  Output out(o.out);
  std::ostream& os = *out.os;
  const bool multi = plan.exprs.size() > 1;
  os << "param," << (multi ? "expression," : "") << "estimate,ci_low,ci_high\n" << std::setprecision(12);
  for (std::size_t i = 0; i < values.size(); ++i) {
    Plan point = plan;
    point.run.seed = plan.run.seed + i;
    const auto reports = run_estimation(in_model ? model_src.with(param, values[i]) : model_src,
                                        in_model ? lha_src : lha_src.with(param, values[i]), point);
    for (const auto& r : reports) {
      os << values[i] << ',';
      if (multi) os << '"' << r.expression << "\",";
      os << r.estimate << ',' << r.ci_low << ',' << r.ci_high << '\n';
    }
    os.flush();
  }
  return kOk;
}

struct TraceOptions {
  std::string model = "builtin:circadian";
  std::uint64_t seed = 1;
  double horizon = 400.0;
  std::uint64_t max_events = 10'000'000;
  std::string trace_out;
  std::string out;
};

int cmd_trace(const TraceOptions& o) {
  const GspnModel model = cli::load_model(cli::parse_source(o.model));
  StdRandomSource rng(o.seed);
  RecordedTrace trace{model.places(), model.initial_marking(), {}, "horizon"};
  if (o.horizon > 0.0) {
    Simulator sim(model, rng);
    while (trace.events.size() < o.max_events) {
      if (sim.peek_time() == kNever) {
        trace.end_marker = "deadlock";
        break;
      }
      if (sim.peek_time() > o.horizon) break;
      trace.events.push_back(*sim.next());
    }
    if (trace.events.size() >= o.max_events) trace.end_marker = "limit";
  }
  if (!o.trace_out.empty()) {
    Output t(o.trace_out);
    write_trace(*t.os, trace);
  }
  if (!o.out.empty() || o.trace_out.empty()) {
    Output c(o.out);
    write_time_series_csv(*c.os, trace, o.horizon > 0.0);
  }
  return kOk;
}

struct ExportOptions {
  std::string model;
  std::string lha;
  std::string model_out;
  std::string lha_out;
  std::uint64_t seed = 1;
};

int cmd_export(const ExportOptions& o) {
  if (o.model.empty() && o.lha.empty()) throw UsageError("export needs --model and/or --lha");
  const GspnModel model = cli::load_model(cli::parse_source(o.model.empty() ? "builtin:circadian" : o.model));
  if (!o.model.empty()) {
    Output m(o.model_out);
    *m.os << model_to_json_text(model) << '\n';
  }
  if (!o.lha.empty()) {
    const Lha lha = cli::load_lha(cli::parse_source(o.lha), model, o.seed);
    Output l(o.lha_out);
    *l.os << lha_to_json_text(lha) << '\n';
  }
  return kOk;
}

struct ReplayOptions {
  std::string trace;
  std::string lha;
  std::string model;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_replay(const ReplayOptions& o) {
  std::ifstream in(o.trace);
  if (!in) throw UsageError("cannot open '" + o.trace + "'");
  const RecordedTrace trace = read_trace(in);
  const auto lha_src = cli::parse_source(o.lha);
  std::optional<GspnModel> model;
  if (!o.model.empty()) model = cli::load_model(cli::parse_source(o.model));
  else model.emplace(trace.places, std::vector<TransitionDef>{}, trace.initial);
  if (lha_src.builtin && lha_src.name == "peaks" && o.model.empty())
    throw UsageError("builtin:peaks needs --model to classify events");
  const Lha lha = cli::load_lha(lha_src, *model, o.seed);
  SyncOptions opts;
  opts.tracked = track_all_variables(lha);
  const SyncOutcome r = replay(trace.places, trace.initial, trace.events, lha, opts);

  Output out(o.out);
  std::ostream& os = *out.os;
  os << std::setprecision(12) << "verdict," << (r.accepted() ? "accepted" : "rejected") << '\n';
  if (!r.accepted()) os << "reason," << to_string(r.reason) << '\n';
  os << "location," << lha.def().locations[r.final_state.location].name << '\n';
  os << "events," << r.event_count << '\n' << "time," << r.model_time << '\n';
  for (std::size_t i = 0; i < lha.def().variables.size(); ++i)
    os << lha.def().variables[i] << ',' << r.final_state.valuation[i] << '\n';
  return kOk;
}

struct OracleOptions {
  std::string input;
  std::string mode = "periods";
  double L = 1.0;
  double H = 1000.0;
  double initT = 0.0;
  std::int64_t N = 0;
  double delta = 1.0;
  std::string out;
};

int cmd_oracle(const OracleOptions& o) {
  std::ifstream in(o.input);
  if (!in) throw UsageError("cannot open '" + o.input + "'");
  const auto samples = read_samples_csv(in);
  std::optional<std::size_t> limit;
  if (o.N > 0) limit = static_cast<std::size_t>(o.N);
  Output out(o.out);
  std::ostream& os = *out.os;
  os << std::setprecision(12);
  if (o.mode == "periods") {
    const auto periods = offline_periods(samples, o.L, o.H, o.initT, limit);
    os << "index,duration\n";
    for (std::size_t i = 0; i < periods.size(); ++i) os << i << ',' << periods[i] << '\n';
    return kOk;
  }
  const Peaks peaks = offline_peaks(samples, o.delta, o.initT, limit);
  std::map<long long, std::pair<std::uint64_t, std::uint64_t>> levels;
  for (double v : peaks.maxima) ++levels[std::llround(v)].first;
  for (double v : peaks.minima) ++levels[std::llround(v)].second;
  os << "level,frequency_max,frequency_min\n";
  for (const auto& [level, c] : levels) os << level << ',' << c.first << ',' << c.second << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate period and peak measures of stochastic oscillators"};
  app.require_subcommand(1);

  EstimationOptions run_opts, sweep_opts;
  TraceOptions trace_opts;
  ExportOptions export_opts;
  ReplayOptions replay_opts;
  OracleOptions oracle_opts;

  int code = kOk;
  try {
    run_opts.seed = sweep_opts.seed = trace_opts.seed = export_opts.seed = replay_opts.seed = default_seed();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  auto* run = app.add_subcommand("run", "Estimate one or more measures");
  add_estimation_flags(*run, run_opts);

  auto* sweep = app.add_subcommand("sweep", "Repeat an estimation over a parameter range");
  add_estimation_flags(*sweep, sweep_opts);
  sweep->add_option("--sweep", sweep_opts.sweep, "param=v1,v2,...")->required();

  auto* trace = app.add_subcommand("trace", "Simulate one trajectory");
  trace->add_option("--model", trace_opts.model, "Model source")->capture_default_str();
  trace->add_option("--seed", trace_opts.seed, "Seed (default: $OSC_SEED or 1)");
  trace->add_option("--horizon", trace_opts.horizon, "Time horizon")->check(CLI::NonNegativeNumber)->capture_default_str();
  trace->add_option("--max-events", trace_opts.max_events, "Event limit")->capture_default_str();
  trace->add_option("--trace-out", trace_opts.trace_out, "Replayable trace file");
  trace->add_option("--out", trace_opts.out, "Time-series CSV (default: stdout)");

  auto* exp = app.add_subcommand("export", "Write builtin models and automata as JSON");
  exp->add_option("--model", export_opts.model, "Model source");
  exp->add_option("--lha", export_opts.lha, "Automaton source");
  exp->add_option("--model-out", export_opts.model_out, "Model JSON path (default: stdout)");
  exp->add_option("--lha-out", export_opts.lha_out, "Automaton JSON path (default: stdout)");
  exp->add_option("--seed", export_opts.seed, "Seed for pilot runs");

  auto* rep = app.add_subcommand("replay", "Run an automaton over a recorded trace");
  rep->add_option("--trace", replay_opts.trace, "Trace file")->required();
  rep->add_option("--lha", replay_opts.lha, "Automaton source")->required();
  rep->add_option("--model", replay_opts.model, "Model source (needed by builtin:peaks)");
  rep->add_option("--seed", replay_opts.seed, "Seed for pilot runs");
  rep->add_option("--out", replay_opts.out, "Output file (default: stdout)");

  auto* ora = app.add_subcommand("oracle", "Scan a time,value CSV for periods or peaks");
  ora->add_option("--input", oracle_opts.input, "CSV file")->required();
  ora->add_option("--mode", oracle_opts.mode)->check(CLI::IsMember({"periods", "peaks"}))->capture_default_str();
  ora->add_option("--L", oracle_opts.L)->capture_default_str();
  ora->add_option("--H", oracle_opts.H)->capture_default_str();
  ora->add_option("--initT", oracle_opts.initT)->capture_default_str();
  ora->add_option("--N", oracle_opts.N, "Stop after N periods / maxima (0: no limit)")->capture_default_str();
  ora->add_option("--delta", oracle_opts.delta)->check(CLI::PositiveNumber)->capture_default_str();
  ora->add_option("--out", oracle_opts.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) code = cmd_run(run_opts);
    else if (*sweep) code = cmd_sweep(sweep_opts);
    else if (*trace) code = cmd_trace(trace_opts);
    else if (*exp) code = cmd_export(export_opts);
    else if (*rep) code = cmd_replay(replay_opts);
    else if (*ora) code = cmd_oracle(oracle_opts);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error at offset " << e.position() << ": " << e.what() << '\n';
    return kInvalid;
  } catch (const FormatError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const ModelError& e) {
    std::cerr << "invalid model: " << e.what() << '\n';
    return kInvalid;
  } catch (const EstimationError& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimation;
  } catch (const DeterminismFault& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimation;
  }
  return code;
}

#include "jknet/cli.hpp"

#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "jknet/io.hpp"

namespace jknet::cli {

namespace {

using io::json;

// Raw flag values; which ones were given is read from the parsed app.
struct Flags {
  std::vector<std::size_t> d;
  double p = 0.0, theta = 0.0, tol = 0.0, h = 0.0, t_max = 0.0, phi = 0.0;
  std::uint64_t seed = 0;
  std::size_t trials = 0, max_steps = 0, k = 0, jobs = 0;
  std::string cycle_kind, x0_mode, out, format, matrix, config, model, stop, mode;
  bool include_censored = false;
};

void add_options(CLI::App* a, Flags& f) {
  a->add_option("--d", f.d, "Number of vertices (several for conjecture-scan)")->expected(1, 1000);
  a->add_option("--p", f.p, "Edge probability");
  a->add_option("--theta", f.theta, "Mean degree p*d");
  a->add_option("--seed", f.seed, "Master seed (falls back to JKNET_SEED)");
  a->add_option("--trials", f.trials, "Monte Carlo trials");
  a->add_option("--tol", f.tol, "Equilibrium tolerance");
  a->add_option("--h", f.h, "Integration step");
  a->add_option("--t-max", f.t_max, "Integration horizon");
  a->add_option("--phi", f.phi, "Projective integration with this phi");
  a->add_option("--max-steps", f.max_steps, "Step budget per trial");
  a->add_option("--k", f.k, "Cycle length or number of Bernoulli trials");
  a->add_option("--cycle-kind", f.cycle_kind, "directed or undirected");
  a->add_option("--x0-mode", f.x0_mode, "uniform or carry");
  a->add_option("--jobs", f.jobs, "Worker threads");
  a->add_option("--out", f.out, "Output path (stdout when absent)");
  a->add_option("--format", f.format, "json or csv");
  a->add_option("--matrix", f.matrix, "Edge list or dense 0/1 matrix file");
  a->add_option("--config", f.config, "JSON config file");
  a->add_option("--model", f.model, "first-cycle edge model: jk, uniform or permutation");
  a->add_option("--stop", f.stop, "adaptive-run stop rule: none, first_cycle, first_undirected_cycle, full_acs");
  a->add_option("--mode", f.mode, "equilibrium: flow or analytic");
  a->add_flag("--include-censored", f.include_censored, "Average censored trials at their cap");
}

const std::set<std::string> config_keys = {
    "d",   "p",         "theta",     "seed", "trials", "tol",    "h",      "t_max", "phi",  "max_steps",       "k",
    "cycle_kind", "x0_mode", "jobs", "out",    "format", "matrix", "model", "stop", "mode", "include_censored"};

std::string key_to_flag(std::string key) {
  for (char& ch : key)
    if (ch == '_') ch = '-';
  return "--" + key;
}

// Applies a config value unless the flag was given explicitly.
template <class T>
void merge(const CLI::App* leaf, const json& file, const char* key, const T& flag_value, T& target) {
  if (leaf->count(key_to_flag(key))) {
    target = flag_value;
  } else if (file.contains(key)) {
    try {
      target = file.at(key).get<T>();
    } catch (const json::exception&) {
      throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

template <class T>
void merge(const CLI::App* leaf, const json& file, const char* key, const T& flag_value, std::optional<T>& target) {
  T value{};
  bool set = false;
  if (leaf->count(key_to_flag(key))) {
    value = flag_value;
    set = true;
  } else if (file.contains(key)) {
    try {
      value = file.at(key).get<T>();
      set = true;
    } catch (const json::exception&) {
      throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
  }
  if (set) target = value;
}

json load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  json file;
  try {
    file = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!file.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : file.items())
    if (!config_keys.count(key)) throw UsageError("unknown config key '" + key + "'");
  if (file.contains("d") && file.at("d").is_number()) file["d"] = json::array({file.at("d")});
  return file;
}

std::uint64_t env_seed() {
  const char* raw = std::getenv("JKNET_SEED");
  if (!raw || !*raw) throw UsageError("a seed is required: pass --seed or set JKNET_SEED");
  const std::string_view s(raw);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError("JKNET_SEED is not an unsigned integer");
  return v;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void one_of(const std::string& value, std::initializer_list<const char*> allowed, const char* what) {
  for (const char* a : allowed)
    if (value == a) return;
  throw UsageError(std::string("invalid ") + what + " '" + value + "'");
}

// Exactly one of p and theta may be given; the other is derived from d.
void resolve_p_theta(RunConfig& cfg) {
  if (cfg.p && cfg.theta) throw UsageError("give exactly one of p and theta; the other follows from theta = p*d");
  if (cfg.p && cfg.d.size() == 1) {
    cfg.theta = *cfg.p * static_cast<double>(cfg.d[0]);
  } else if (cfg.theta && cfg.d.size() == 1) {
    cfg.p = *cfg.theta / static_cast<double>(cfg.d[0]);
  }
  if (cfg.p) require(*cfg.p >= 0.0 && *cfg.p <= 1.0, "p must lie in [0, 1]");
  if (cfg.theta) require(*cfg.theta >= 0.0, "theta must be non-negative");
}

void validate(RunConfig& cfg, bool seed_given) {
  one_of(cfg.format, {"json", "csv"}, "format");
  one_of(cfg.cycle_kind, {"directed", "undirected"}, "cycle kind");
  one_of(cfg.x0_mode, {"uniform", "carry"}, "x0 mode");
  one_of(cfg.model, {"jk", "uniform", "permutation"}, "model");
  one_of(cfg.stop, {"none", "first_cycle", "first_undirected_cycle", "full_acs"}, "stop rule");
  one_of(cfg.mode, {"flow", "analytic"}, "mode");
  require(cfg.jobs >= 1, "jobs must be >= 1");
  require(cfg.trials >= 1, "trials must be >= 1");
  require(cfg.tol > 0.0, "tol must be positive");
  require(cfg.h > 0.0, "h must be positive");
  if (cfg.t_max) require(*cfg.t_max > 0.0, "t-max must be positive");
  for (std::size_t d : cfg.d) require(d >= 2, "d must be >= 2");

  const std::string& sub = cfg.subcommand;
  const bool multi_d = sub == "conjecture-scan";
  require(multi_d || cfg.d.size() <= 1, "only conjecture-scan takes several values of d");
  resolve_p_theta(cfg);

  auto need_d = [&] { require(!cfg.d.empty(), sub + " requires --d"); };
  auto need_p = [&] {
    need_d();
    require(cfg.p.has_value(), sub + " requires --p or --theta");
  };
  bool stochastic = true;

  if (sub == "equilibrium" || sub == "integrate") {
    if (cfg.matrix) {
      require(cfg.d.empty() && !cfg.p && !cfg.theta, "--matrix excludes --d, --p and --theta");
      stochastic = false;
    } else {
      need_p();
    }
    if (sub == "equilibrium") require(cfg.format == "json", "equilibrium writes JSON only");
  } else if (sub == "adaptive-run") {
    need_p();
    require(cfg.format == "json", "adaptive-run writes a JSON-lines trace only");
  } else if (sub == "experiment") {
    const std::string& e = cfg.experiment;
    if (e == "cycle-dist") {
      need_d();
      require(cfg.theta.has_value(), "cycle-dist requires --theta or --p");
      require(cfg.k >= 3, "cycle-dist requires k >= 3");
    } else if (e == "first-cycle") {
      if (cfg.model == "jk")
        need_p();
      else
        need_d();
    } else if (e == "acs-growth") {
      need_p();
    } else if (e == "waiting-time") {
      require(cfg.d.empty() && !cfg.theta, "waiting-time takes --k and --p, not --d or --theta");
      require(cfg.p.has_value(), "waiting-time requires --p");
      require(cfg.k >= 1, "waiting-time requires k >= 1");
    }
  } else if (sub == "conjecture-scan") {
    need_d();
    require(cfg.theta.has_value(), "conjecture-scan requires --theta");
    if (cfg.d.size() > 1) require(!cfg.p, "conjecture-scan over several d takes --theta, not --p");
  } else if (sub == "appendix-demo") {
    need_p();
    require(cfg.format == "json", "appendix-demo writes JSON only");
  }

  if (stochastic && !seed_given) cfg.seed = env_seed();
}

}  // namespace

RunConfig parse_and_validate(const std::vector<std::string>& args) {
  CLI::App app{"Catalytic network dynamics and adaptive graph experiments", "jknet"};
  app.set_help_flag("--help", "Print help");  // -h would clash with --h
  app.require_subcommand(1);
  Flags f;
  std::vector<CLI::App*> leaves;
  auto leaf = [&](CLI::App* parent, const char* name, const char* description) {
    CLI::App* a = parent->add_subcommand(name, description);
    a->set_help_flag("--help", "Print help");
    add_options(a, f);
    leaves.push_back(a);
    return a;
  };
  leaf(&app, "equilibrium", "Equilibrium of a given or sampled graph");
  leaf(&app, "integrate", "Trajectory of the simplex ODE from uniform x0");
  leaf(&app, "adaptive-run", "One adaptive run, written as a JSON-lines trace");
  CLI::App* exp = app.add_subcommand("experiment", "Monte Carlo experiments");
  exp->set_help_flag("--help", "Print help");
  exp->require_subcommand(1);
  leaf(exp, "cycle-dist", "k-cycle counts in sparse undirected graphs");
  leaf(exp, "first-cycle", "Edges or steps until the first cycle");
  leaf(exp, "acs-growth", "Steps until the whole graph is an ACS");
  leaf(exp, "waiting-time", "Geometric waiting time for one of k trials");
  leaf(&app, "conjecture-scan", "First-cycle and full-ACS times over a d grid at fixed theta");
  leaf(&app, "appendix-demo", "Boundary witnesses for the signed variant");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (auto* a : leaves)
      if (a->parsed()) target = a;
    if (exp->parsed() && target == &app) target = exp;
    throw HelpRequested{target->help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig cfg;
  cfg.argv = args;
  const CLI::App* chosen = nullptr;
  for (auto* a : leaves)
    if (a->parsed()) chosen = a;
  if (!chosen) throw UsageError("missing subcommand");
  if (chosen->get_parent() == exp) {
    cfg.subcommand = "experiment";
    cfg.experiment = chosen->get_name();
  } else {
    cfg.subcommand = chosen->get_name();
  }

  const json file = chosen->count("--config") ? load_config(f.config) : json::object();
  merge(chosen, file, "d", f.d, cfg.d);
  merge(chosen, file, "p", f.p, cfg.p);
  merge(chosen, file, "theta", f.theta, cfg.theta);
  merge(chosen, file, "seed", f.seed, cfg.seed);
  merge(chosen, file, "trials", f.trials, cfg.trials);
  merge(chosen, file, "tol", f.tol, cfg.tol);
  merge(chosen, file, "h", f.h, cfg.h);
  merge(chosen, file, "t_max", f.t_max, cfg.t_max);
  merge(chosen, file, "phi", f.phi, cfg.phi);
  merge(chosen, file, "max_steps", f.max_steps, cfg.max_steps);
  merge(chosen, file, "k", f.k, cfg.k);
  merge(chosen, file, "cycle_kind", f.cycle_kind, cfg.cycle_kind);
  merge(chosen, file, "x0_mode", f.x0_mode, cfg.x0_mode);
  merge(chosen, file, "jobs", f.jobs, cfg.jobs);
  merge(chosen, file, "out", f.out, cfg.out);
  merge(chosen, file, "format", f.format, cfg.format);
  merge(chosen, file, "matrix", f.matrix, cfg.matrix);
  merge(chosen, file, "model", f.model, cfg.model);
  merge(chosen, file, "stop", f.stop, cfg.stop);
  merge(chosen, file, "mode", f.mode, cfg.mode);
  merge(chosen, file, "include_censored", f.include_censored, cfg.include_censored);
  // A flag for one of p/theta replaces the other from the config file.
  if (chosen->count("--p") && !chosen->count("--theta")) cfg.theta.reset();
  if (chosen->count("--theta") && !chosen->count("--p")) cfg.p.reset();

  validate(cfg, cfg.seed.has_value());
  return cfg;
}

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

InteractionMatrix load_or_sample(const RunConfig& cfg) {
  if (cfg.matrix) return io::read_matrix_file(*cfg.matrix);
  Rng rng = make_stream(*cfg.seed, 0);
  return sample_er_digraph(ModelParams::make(cfg.d[0], *cfg.p), rng);
}

ExperimentOptions experiment_options(const RunConfig& cfg) {
  ExperimentOptions o;
  o.trials = cfg.trials;
  o.seed = *cfg.seed;
  o.jobs = cfg.jobs;
  o.max_steps = cfg.max_steps;
  o.include_censored = cfg.include_censored;
  return o;
}

AdaptiveOptions adaptive_options(const RunConfig& cfg) {
  AdaptiveOptions o;
  o.x0_mode = x0_mode_from_string(cfg.x0_mode);
  o.equilibrium.tol = cfg.tol;
  return o;
}

// The primary file plus optional named sidecars, and the exit status.
struct Artifacts {
  std::string primary;
  std::vector<std::pair<std::string, std::string>> sidecars;  // suffix, content
  int status = 0;
};

Artifacts experiment_artifacts(const RunConfig& cfg, const ExperimentResult& r) {
  Artifacts a;
  if (cfg.format == "csv") {
    a.primary = io::experiment_csv(r);
    a.sidecars.emplace_back(".summary.json", dump(io::to_json(r)));
  } else {
    a.primary = dump(io::to_json(r));
  }
  if (r.trials() > 0 && r.censored_count == r.trials()) a.status = 2;
  return a;
}

Artifacts produce(const RunConfig& cfg) {
  const std::string& sub = cfg.subcommand;
  if (sub == "equilibrium") {
    EquilibriumOptions opts;
    opts.tol = cfg.tol;
    opts.mode = cfg.mode == "analytic" ? EquilibriumMode::analytic : EquilibriumMode::flow;
    return {dump(io::to_json(equilibrium(load_or_sample(cfg), opts))), {}, 0};
  }
  if (sub == "integrate") {
    const auto c = load_or_sample(cfg);
    StepOptions step;
    step.h = cfg.h;
    const double t_end = cfg.t_max.value_or(100.0);
    const Trajectory traj =
        cfg.phi ? integrate_projective(c, Vec::Ones(static_cast<Eigen::Index>(c.size())), *cfg.phi, t_end, step)
                : integrate(c, ConcentrationVector::uniform(c.size()), t_end, step);
    return {cfg.format == "csv" ? io::trajectory_csv(traj) : dump(io::to_json(traj)), {}, 0};
  }
  if (sub == "adaptive-run") {
    const auto trace = run_adaptive(ModelParams::make(cfg.d[0], *cfg.p), *cfg.seed, cfg.max_steps,
                                    stop_rule_from_string(cfg.stop), adaptive_options(cfg));
    return {io::trace_jsonl(trace), {}, 0};
  }
  if (sub == "experiment") {
    const auto opts = experiment_options(cfg);
    const std::string& e = cfg.experiment;
    if (e == "cycle-dist") return experiment_artifacts(cfg, measure_cycle_counts(cfg.d[0], *cfg.theta, cfg.k, opts));
    if (e == "first-cycle") {
      const EdgeModel model = edge_model_from_string(cfg.model);
      if (model == EdgeModel::jk)
        return experiment_artifacts(cfg, first_cycle_time_jk(cfg.d[0], *cfg.p, cycle_kind_from_string(cfg.cycle_kind),
                                                             opts, adaptive_options(cfg)));
      return experiment_artifacts(cfg, first_cycle_edge_model(cfg.d[0], model, opts));
    }
    if (e == "acs-growth")
      return experiment_artifacts(cfg, acs_growth_time_jk(cfg.d[0], *cfg.p, opts, 2, adaptive_options(cfg)));
    return experiment_artifacts(cfg, waiting_time(cfg.k, *cfg.p, opts));
  }
  if (sub == "conjecture-scan") {
    const auto scan = conjecture_scan(*cfg.theta, cfg.d, experiment_options(cfg), adaptive_options(cfg));
    Artifacts a;
    if (cfg.format == "csv") {
      a.primary = io::scan_csv(io::scan_table(scan));
      a.sidecars.emplace_back(".summary.json", dump(io::scan_fit_summary(scan)));
    } else {
      a.primary = dump(io::to_json(scan));
    }
    bool all_censored = true;
    for (const auto& row : scan.rows)
      all_censored = all_censored && row.first_cycle.censored_count == row.first_cycle.trials() &&
                     row.full_acs.censored_count == row.full_acs.trials();
    if (all_censored) a.status = 2;
    return a;
  }
  WitnessOptions w;
  w.h = cfg.h;
  if (cfg.t_max) w.t_max = *cfg.t_max;
  w.jobs = cfg.jobs;
  return {dump(io::to_json(demonstrate_inconsistency(cfg.d[0], *cfg.p, cfg.trials, *cfg.seed, w))), {}, 0};
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int dispatch(const RunConfig& cfg, std::ostream& out) {
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const Artifacts a = produce(cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.out) {
    out << a.primary;
    return a.status;
  }
  io::write_file(*cfg.out, a.primary);
  for (const auto& [suffix, content] : a.sidecars) io::write_file(*cfg.out + suffix, content);
  char host[256] = {};
  gethostname(host, sizeof host - 1);
  const json meta = {{"argv", cfg.argv},     {"started_utc", started}, {"elapsed_seconds", elapsed},
                     {"host", host},         {"jobs", cfg.jobs},       {"exit_status", a.status}};
  io::write_file(*cfg.out + ".meta.json", dump(meta));
  return a.status;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(parse_and_validate(args), out);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const Error& e) {
    err << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
  } catch (const std::invalid_argument& e) {
    err << json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << "\n";
  } catch (const std::exception& e) {
    err << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
  }
  return 1;
}

}  // namespace jknet::cli

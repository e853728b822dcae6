#include "jknet/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jknet/error.hpp"

namespace jknet::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + std::string(s) + "'");
  return v;
}

std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("not a non-negative integer: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> tokens_of(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

template <class T>
json optional_size(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<std::size_t> size_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

void require_header(std::string_view line, std::string_view expected) {
  if (line != expected)
    throw FormatError("unexpected CSV header '" + std::string(line) + "', expected '" + std::string(expected) + "'");
}

}  // namespace

InteractionMatrix parse_matrix(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  for (auto line : lines_of(text)) {
    auto toks = tokens_of(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    rows.push_back(std::move(toks));
  }
  if (rows.empty()) throw FormatError("matrix file is empty");
  if (rows[0][0] == "d") {
    if (rows[0].size() != 2) throw FormatError("edge list header must read 'd <n>'");
    InteractionMatrix c(parse_size(rows[0][1]));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 2) throw FormatError("edge list lines must read '<src> <dst>'");
      const std::size_t src = parse_size(rows[r][0]), dst = parse_size(rows[r][1]);
      if (src >= c.size() || dst >= c.size()) throw FormatError("edge endpoint out of range");
      if (src == dst) throw FormatError("self-loops are not allowed");
      c.add_edge(src, dst);
    }
    return c;
  }
  const std::size_t d = rows.size();
  InteractionMatrix c(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].size() != d) throw FormatError("dense matrix must be square");
    for (std::size_t j = 0; j < d; ++j) {
      if (rows[i][j] != "0" && rows[i][j] != "1") throw FormatError("dense entries must be 0 or 1");
      if (rows[i][j] == "1") {
        if (i == j) throw FormatError("diagonal entries must be 0");
        c.set(i, j, true);
      }
    }
  }
  return c;
}

InteractionMatrix read_matrix_file(const std::string& path) { return parse_matrix(read_file(path)); }

std::string write_edge_list(const InteractionMatrix& c) {
  std::string out = "d " + std::to_string(c.size()) + "\n";
  for (const auto& [src, dst] : c.edges()) out += std::to_string(src) + " " + std::to_string(dst) + "\n";
  return out;
}

std::string write_dense(const InteractionMatrix& c) {
  std::string out;
  for (Vertex i = 0; i < c.size(); ++i) {
    for (Vertex j = 0; j < c.size(); ++j) {
      if (j) out += ' ';
      out += c.at(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const EquilibriumResult& r) {
  return {{"d", r.x_star.size()},
          {"x_star", vec_to_json(r.x_star)},
          {"residual", r.residual},
          {"support", r.support},
          {"zero_set", r.zero_set},
          {"kind", std::string(to_string(r.kind))},
          {"non_unique", r.non_unique},
          {"lambda", r.lambda}};
}

EquilibriumResult equilibrium_from_json(const json& j) {
  EquilibriumResult r;
  r.x_star = vec_from_json(j.at("x_star"));
  r.residual = j.at("residual").get<double>();
  r.support = j.at("support").get<VertexSet>();
  r.zero_set = j.at("zero_set").get<VertexSet>();
  r.kind = equilibrium_kind_from_string(j.at("kind").get<std::string>());
  r.non_unique = j.at("non_unique").get<bool>();
  r.lambda = j.at("lambda").get<double>();
  return r;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "time";
  const Eigen::Index d = traj.states.empty() ? 0 : traj.states.front().size();
  for (Eigen::Index j = 0; j < d; ++j) out += ",x" + std::to_string(j);
  out += ",residual\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out += format_double(traj.times[k]);
    for (Eigen::Index j = 0; j < d; ++j) out += "," + format_double(traj.states[k](j));
    out += "," + format_double(traj.residuals[k]) + "\n";
  }
  return out;
}

Trajectory trajectory_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError("trajectory CSV is empty");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || header.front() != "time" || header.back() != "residual")
    throw FormatError("trajectory CSV header must be time,x0..,residual");
  const std::size_t d = header.size() - 2;
  Trajectory traj;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split(lines[k], ',');
    if (cells.size() != d + 2) throw FormatError("trajectory CSV row has the wrong width");
    traj.times.push_back(parse_double(cells[0]));
    Vec x(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(j)) = parse_double(cells[j + 1]);
    traj.states.push_back(std::move(x));
    traj.residuals.push_back(parse_double(cells.back()));
  }
  traj.steps = traj.states.empty() ? 0 : traj.states.size() - 1;
  return traj;
}

json to_json(const Trajectory& traj) {
  json states = json::array();
  for (const auto& x : traj.states) states.push_back(vec_to_json(x));
  return {{"times", traj.times},
          {"states", states},
          {"residuals", traj.residuals},
          {"max_drift_rate", traj.max_drift_rate},
          {"min_component", traj.min_component},
          {"steps", traj.steps}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory traj;
  traj.times = j.at("times").get<std::vector<double>>();
  for (const auto& x : j.at("states")) traj.states.push_back(vec_from_json(x));
  traj.residuals = j.at("residuals").get<std::vector<double>>();
  traj.max_drift_rate = j.at("max_drift_rate").get<double>();
  traj.min_component = j.at("min_component").get<double>();
  traj.steps = j.at("steps").get<std::size_t>();
  return traj;
}

json to_json(const StepRecord& r) {
  return {{"s", r.s},
          {"j_min_set", r.j_min_set},
          {"chosen", optional_size(r.chosen)},
          {"lambda", r.lambda},
          {"support_size", r.support_size},
          {"directed_cycle", r.directed_cycle},
          {"full_acs", r.full_acs},
          {"undirected_cycle", r.undirected_cycle}};
}

StepRecord step_record_from_json(const json& j) {
  StepRecord r;
  r.s = j.at("s").get<std::size_t>();
  r.j_min_set = j.at("j_min_set").get<VertexSet>();
  r.chosen = size_or_null(j.at("chosen"));
  r.lambda = j.at("lambda").get<double>();
  r.support_size = j.at("support_size").get<std::size_t>();
  r.directed_cycle = j.at("directed_cycle").get<bool>();
  r.full_acs = j.at("full_acs").get<bool>();
  r.undirected_cycle = j.at("undirected_cycle").get<bool>();
  return r;
}

std::string trace_jsonl(const AdaptiveTrace& trace) {
  const auto& o = trace.options;
  const json header = {
      {"type", "header"},
      {"params", {{"d", trace.params.d}, {"p", trace.params.p}, {"theta", trace.params.theta()}}},
      {"seed", trace.seed},
      {"max_steps", trace.max_steps},
      {"stop", std::string(to_string(trace.stop))},
      {"options",
       {{"rel_tol", o.rel_tol},
        {"zero_tol", o.zero_tol},
        {"x0_mode", std::string(to_string(o.x0_mode))},
        {"tol", o.equilibrium.tol},
        {"planted_cycle", o.planted_cycle}}},
      {"steps", trace.steps},
      {"first_cycle_step", optional_size(trace.first_cycle_step)},
      {"first_undirected_cycle_step", optional_size(trace.first_undirected_cycle_step)},
      {"full_acs_step", optional_size(trace.full_acs_step)},
      {"censored", trace.censored()},
      {"preservation_violations", trace.preservation_violations},
      {"min_set_mismatches", trace.min_set_mismatches}};
  std::string out = header.dump() + "\n";
  for (const auto& r : trace.records) out += to_json(r).dump() + "\n";
  return out;
}

AdaptiveTrace trace_from_jsonl(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError("trace is empty");
  const json header = json::parse(lines[0]);
  if (header.value("type", "") != "header") throw FormatError("trace must start with a header line");
  AdaptiveTrace trace;
  const auto& params = header.at("params");
  trace.params = ModelParams::make(params.at("d").get<std::size_t>(), params.at("p").get<double>());
  trace.seed = header.at("seed").get<std::uint64_t>();
  trace.max_steps = header.at("max_steps").get<std::size_t>();
  trace.stop = stop_rule_from_string(header.at("stop").get<std::string>());
  const auto& o = header.at("options");
  trace.options.rel_tol = o.at("rel_tol").get<double>();
  trace.options.zero_tol = o.at("zero_tol").get<double>();
  trace.options.x0_mode = x0_mode_from_string(o.at("x0_mode").get<std::string>());
  trace.options.equilibrium.tol = o.at("tol").get<double>();
  trace.options.planted_cycle = o.at("planted_cycle").get<std::size_t>();
  trace.steps = header.at("steps").get<std::size_t>();
  trace.first_cycle_step = size_or_null(header.at("first_cycle_step"));
  trace.first_undirected_cycle_step = size_or_null(header.at("first_undirected_cycle_step"));
  trace.full_acs_step = size_or_null(header.at("full_acs_step"));
  trace.preservation_violations = header.at("preservation_violations").get<std::size_t>();
  trace.min_set_mismatches = header.at("min_set_mismatches").get<std::size_t>();
  for (std::size_t k = 1; k < lines.size(); ++k) trace.records.push_back(step_record_from_json(json::parse(lines[k])));
  return trace;
}

json to_json(const ExperimentResult& r) {
  json params = json::object();
  for (const auto& [k, v] : r.parameters) params[k] = v;
  std::vector<int> censored(r.censored.begin(), r.censored.end());
  return {{"kind", r.kind},
          {"parameters", params},
          {"parameter_order", [&] {
             json order = json::array();
             for (const auto& kv : r.parameters) order.push_back(kv.first);
             return order;
           }()},
          {"trials", r.trials()},
          {"per_trial", r.per_trial},
          {"censored", censored},
          {"censored_count", r.censored_count},
          {"include_censored", r.include_censored},
          {"used", r.used},
          {"mean", r.mean},
          {"variance", r.variance},
          {"std_error", r.std_error},
          {"median", r.median},
          {"oracle_value", optional_number(r.oracle_value)},
          {"z_score", optional_number(r.z_score)},
          {"preservation_violations", r.preservation_violations},
          {"min_set_mismatches", r.min_set_mismatches}};
}

ExperimentResult experiment_from_json(const json& j) {
  ExperimentResult r;
  r.kind = j.at("kind").get<std::string>();
  const auto& params = j.at("parameters");
  for (const auto& key : j.at("parameter_order")) {
    const auto name = key.get<std::string>();
    r.parameters.emplace_back(name, params.at(name).get<double>());
  }
  r.per_trial = j.at("per_trial").get<std::vector<double>>();
  for (int c : j.at("censored").get<std::vector<int>>()) r.censored.push_back(c != 0);
  r.include_censored = j.at("include_censored").get<bool>();
  r.oracle_value = number_or_null(j.at("oracle_value"));
  r.preservation_violations = j.at("preservation_violations").get<std::size_t>();
  r.min_set_mismatches = j.at("min_set_mismatches").get<std::size_t>();
  summarize(r);
  if (r.censored_count != j.at("censored_count").get<std::size_t>()) throw FormatError("censored count mismatch");
  return r;
}

std::string experiment_csv(const ExperimentResult& r) {
  std::string out = "trial,measurement,censored\n";
  for (std::size_t t = 0; t < r.per_trial.size(); ++t)
    out += std::to_string(t) + "," + format_double(r.per_trial[t]) + "," + (r.censored[t] ? "1" : "0") + "\n";
  return out;
}

ExperimentResult experiment_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError("experiment CSV is empty");
  require_header(lines[0], "trial,measurement,censored");
  ExperimentResult r;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split(lines[k], ',');
    if (cells.size() != 3) throw FormatError("experiment CSV rows need 3 cells");
    if (parse_size(cells[0]) != k - 1) throw FormatError("experiment CSV trials out of order");
    r.per_trial.push_back(parse_double(cells[1]));
    if (cells[2] != "0" && cells[2] != "1") throw FormatError("censored flag must be 0 or 1");
    r.censored.push_back(cells[2] == "1");
  }
  summarize(r);
  return r;
}

json to_json(const ScalingFit& f) {
  return {{"xs", f.xs}, {"ys", f.ys}, {"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

ScalingFit scaling_fit_from_json(const json& j) {
  ScalingFit f;
  f.xs = j.at("xs").get<std::vector<double>>();
  f.ys = j.at("ys").get<std::vector<double>>();
  f.slope = j.at("slope").get<double>();
  f.intercept = j.at("intercept").get<double>();
  f.r_squared = j.at("r_squared").get<double>();
  return f;
}

namespace {

json growth_json(const TotalGrowth& g) {
  return {{"exact_sum", g.exact_sum},
          {"integral_approx", g.integral_approx},
          {"relative_gap", g.relative_gap},
          {"printed_closed_form", g.printed_closed_form}};
}

TotalGrowth growth_from_json(const json& j) {
  TotalGrowth g;
  g.exact_sum = j.at("exact_sum").get<double>();
  g.integral_approx = j.at("integral_approx").get<double>();
  g.relative_gap = j.at("relative_gap").get<double>();
  g.printed_closed_form = j.at("printed_closed_form").get<double>();
  return g;
}

json optional_fit(const std::optional<ScalingFit>& f) { return f ? to_json(*f) : json(nullptr); }

}  // namespace

json to_json(const ConjectureScan& s) {
  json rows = json::array();
  for (const auto& row : s.rows)
    rows.push_back({{"d", row.d},
                    {"p", row.p},
                    {"theta", row.theta},
                    {"first_cycle", to_json(row.first_cycle)},
                    {"full_acs", to_json(row.full_acs)},
                    {"growth_oracle", growth_json(row.growth_oracle)}});
  return {{"theta", s.theta},
          {"rows", rows},
          {"first_cycle_fit", optional_fit(s.first_cycle_fit)},
          {"full_acs_fit", optional_fit(s.full_acs_fit)},
          {"first_cycle_increasing", s.first_cycle_increasing}};
}

ConjectureScan scan_from_json(const json& j) {
  ConjectureScan s;
  s.theta = j.at("theta").get<double>();
  for (const auto& row : j.at("rows")) {
    ScanRow r;
    r.d = row.at("d").get<std::size_t>();
    r.p = row.at("p").get<double>();
    r.theta = row.at("theta").get<double>();
    r.first_cycle = experiment_from_json(row.at("first_cycle"));
    r.full_acs = experiment_from_json(row.at("full_acs"));
    r.growth_oracle = growth_from_json(row.at("growth_oracle"));
    s.rows.push_back(std::move(r));
  }
  if (!j.at("first_cycle_fit").is_null()) s.first_cycle_fit = scaling_fit_from_json(j.at("first_cycle_fit"));
  if (!j.at("full_acs_fit").is_null()) s.full_acs_fit = scaling_fit_from_json(j.at("full_acs_fit"));
  s.first_cycle_increasing = j.at("first_cycle_increasing").get<bool>();
  return s;
}

std::vector<ScanTableRow> scan_table(const ConjectureScan& s) {
  std::vector<ScanTableRow> out;
  for (const auto& row : s.rows) {
    for (const auto* r : {&row.first_cycle, &row.full_acs}) {
      ScanTableRow t;
      t.quantity = r == &row.first_cycle ? "first_cycle" : "full_acs";
      t.d = row.d;
      t.p = row.p;
      t.theta = row.theta;
      t.mean = r->mean;
      t.std_error = r->std_error;
      t.censored = r->censored_count;
      t.oracle = r->oracle_value;
      t.z = r->z_score;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::string scan_csv(const std::vector<ScanTableRow>& rows) {
  std::string out = "quantity,d,p,theta,mean,std_error,censored,oracle,z\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows)
    out += r.quantity + "," + std::to_string(r.d) + "," + format_double(r.p) + "," + format_double(r.theta) + "," +
           format_double(r.mean) + "," + format_double(r.std_error) + "," + std::to_string(r.censored) + "," +
           opt(r.oracle) + "," + opt(r.z) + "\n";
  return out;
}

std::vector<ScanTableRow> scan_table_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError("scan CSV is empty");
  require_header(lines[0], "quantity,d,p,theta,mean,std_error,censored,oracle,z");
  std::vector<ScanTableRow> out;
  auto opt = [](std::string_view s) { return s.empty() ? std::nullopt : std::optional<double>(parse_double(s)); };
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto c = split(lines[k], ',');
    if (c.size() != 9) throw FormatError("scan CSV rows need 9 cells");
    out.push_back({std::string(c[0]), parse_size(c[1]), parse_double(c[2]), parse_double(c[3]), parse_double(c[4]),
                   parse_double(c[5]), parse_size(c[6]), opt(c[7]), opt(c[8])});
  }
  return out;
}

json scan_fit_summary(const ConjectureScan& s) {
  return {{"theta", s.theta},
          {"d_grid",
           [&] {
             json g = json::array();
             for (const auto& r : s.rows) g.push_back(r.d);
             return g;
           }()},
          {"first_cycle_fit", optional_fit(s.first_cycle_fit)},
          {"full_acs_fit", optional_fit(s.full_acs_fit)},
          {"first_cycle_increasing", s.first_cycle_increasing}};
}

namespace {

json signed_to_json(const SignedMatrix& c) {
  json entries = json::array();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      if (c.present(i, j)) entries.push_back({i, j, c.at(i, j)});
  return {{"d", c.size()}, {"entries", entries}};
}

SignedMatrix signed_from_json(const json& j) {
  SignedMatrix c(j.at("d").get<std::size_t>());
  for (const auto& e : j.at("entries")) c.set(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>());
  return c;
}

}  // namespace

json to_json(const WitnessReport& r) {
  json summaries = json::array();
  for (const auto& s : r.summaries)
    summaries.push_back({{"trial", s.trial},
                         {"contact", s.contact},
                         {"witness", s.witness},
                         {"t_contact", s.t_contact},
                         {"mass_derivative", s.mass_derivative},
                         {"max_drift", s.max_drift}});
  json first = nullptr;
  if (r.first) {
    const auto& w = *r.first;
    json drift = json::array();
    for (const auto& [t, v] : w.drift_series) drift.push_back({t, v});
    first = {{"trial", w.trial},
             {"C", signed_to_json(w.c)},
             {"t_contact", w.t_contact},
             {"vertex", w.vertex},
             {"x_at_contact", vec_to_json(w.x_at_contact)},
             {"f_at_contact", w.f_at_contact},
             {"mass_derivative", w.mass_derivative},
             {"proof_expression", w.proof_expression},
             {"max_drift", w.max_drift},
             {"drift_series", drift}};
  }
  return {{"d", r.d},          {"p", r.p},         {"trials", r.trials}, {"seed", r.seed},
          {"witnesses", r.witnesses}, {"witness", first}, {"summaries", summaries}};
}

WitnessReport witness_report_from_json(const json& j) {
  WitnessReport r;
  r.d = j.at("d").get<std::size_t>();
  r.p = j.at("p").get<double>();
  r.trials = j.at("trials").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.witnesses = j.at("witnesses").get<std::size_t>();
  for (const auto& s : j.at("summaries"))
    r.summaries.push_back({s.at("trial").get<std::size_t>(), s.at("contact").get<bool>(), s.at("witness").get<bool>(),
                           s.at("t_contact").get<double>(), s.at("mass_derivative").get<double>(),
                           s.at("max_drift").get<double>()});
  const auto& w = j.at("witness");
  if (!w.is_null()) {
    Witness out;
    out.trial = w.at("trial").get<std::size_t>();
    out.c = signed_from_json(w.at("C"));
    out.t_contact = w.at("t_contact").get<double>();
    out.vertex = w.at("vertex").get<std::size_t>();
    out.x_at_contact = vec_from_json(w.at("x_at_contact"));
    out.f_at_contact = w.at("f_at_contact").get<double>();
    out.mass_derivative = w.at("mass_derivative").get<double>();
    out.proof_expression = w.at("proof_expression").get<double>();
    out.max_drift = w.at("max_drift").get<double>();
    for (const auto& pt : w.at("drift_series")) out.drift_series.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
    r.first = std::move(out);
  }
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace jknet::io

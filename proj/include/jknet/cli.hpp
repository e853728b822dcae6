#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jknet/error.hpp"

namespace jknet::cli {

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

// Thrown by parse_and_validate for --help; carries the rendered text.
struct HelpRequested {
  std::string text;
};

struct RunConfig {
  std::string subcommand;  // equilibrium, integrate, adaptive-run, experiment, conjecture-scan, appendix-demo
  std::string experiment;  // cycle-dist, first-cycle, acs-growth, waiting-time

  std::vector<std::size_t> d;  // several values only for conjecture-scan
  std::optional<double> p;
  std::optional<double> theta;

  double tol = 1e-10;
  double h = 0.01;
  std::optional<double> t_max;  // integrate: 100, appendix-demo: 20
  std::optional<double> phi;  // projective integration when set
  std::string mode = "flow";  // equilibrium: flow or analytic

  std::size_t trials = 100;
  std::size_t max_steps = 10000;
  std::size_t k = 3;
  std::string cycle_kind = "directed";
  std::string x0_mode = "uniform";
  std::string model = "jk";       // first-cycle edge model
  std::string stop = "full_acs";  // adaptive-run stop rule
  bool include_censored = false;

  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::optional<std::string> out;  // stdout when absent
  std::string format = "json";
  std::optional<std::string> matrix;

  std::vector<std::string> argv;  // recorded in the metadata sidecar
};

// args excludes the program name. --config names a JSON file whose keys are
// the long flag names with '-' replaced by '_'; explicit flags win. JKNET_SEED
// is used when neither supplies a seed.
RunConfig parse_and_validate(const std::vector<std::string>& args);

// Runs the subcommand. Primary output goes to cfg.out (or `out` when unset);
// timing and host data go to <out>.meta.json. Returns 0, or 2 when every
// experiment trial was censored.
int dispatch(const RunConfig& cfg, std::ostream& out);

// parse_and_validate + dispatch; errors become a JSON object on `err` and
// exit status 1.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jknet::cli

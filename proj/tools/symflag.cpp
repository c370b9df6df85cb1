// symflag: batch verification driver over libsymflag.
#include "symflag/symflag.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

std::string report_dir() {
  const char* dir = std::getenv("SYMFLAG_REPORT_DIR");
  return dir && *dir ? std::string(dir) : std::string();
}

std::string join(const std::string& dir, const std::string& file) {
  if (dir.empty()) return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

std::string strip_json_suffix(const std::string& path) {
  const std::string ext = ".json";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    return path.substr(0, path.size() - ext.size());
  return path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification harness for symplectic nonlinear flags"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", sf_version());

  std::string fixture_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string suite = "all";
  std::optional<std::string> probes;
  std::optional<std::string> hamiltonian;
  std::optional<std::string> tangent;
  std::string mode = "inductive";
  double t = 1.0, dt = 1e-3;
  bool flip_kks = false, no_timing = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("fixture", fixture_path, "Fixture JSON file")->required();
    sub->add_option("--out", out_path, "Report path (flow: flowed fixture path)");
    sub->add_option("--seed", seed, "Override the fixture RNG seed");
    sub->add_flag("--no-timing", no_timing, "Omit the timing block from the report");
  };
  auto* validate = app.add_subcommand("validate", "Validate a flag fixture");
  common(validate);
  auto* moment = app.add_subcommand("moment", "Pair the flag with probe Hamiltonians");
  common(moment);
  moment->add_option("--probes", probes, "Comma-separated probe expressions, or dict");
  auto* check = app.add_subcommand("check", "Run verification suites");
  common(check);
  check->add_option("--suite", suite, "calc, stokes, equivariance, kks, nondegeneracy, lifting or all");
  check->add_flag("--debug-flip-kks-sign", flip_kks, "Negate the J side of the KKS identity");
  auto* flow = app.add_subcommand("flow", "Flow the flag by a Hamiltonian and record moment trajectories");
  common(flow);
  flow->add_option("--hamiltonian", hamiltonian, "Expression or fixture function name");
  flow->add_option("--t", t, "Final time");
  flow->add_option("--dt", dt, "Time step");
  flow->add_option("--probes", probes, "Comma-separated probe expressions, or dict");
  auto* lift = app.add_subcommand("lift", "Lift a flag tangent to an ambient Hamiltonian");
  common(lift);
  lift->add_option("--tangent", tangent, "Fixture tangent name or hamiltonian:EXPR");
  lift->add_option("--mode", mode, "inductive or direct")->check(CLI::IsMember({"inductive", "direct"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : SF_INPUT_ERROR;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  sf_fixture* fixture = nullptr;
  if (sf_fixture_load(fixture_path.c_str(), &fixture) != SF_OK) {
    std::fprintf(stderr, "symflag %s: %s\n", command.c_str(), sf_last_error());
    return SF_INPUT_ERROR;
  }

  sf_options options;
  sf_options_init(&options);
  if (seed) {
    options.has_seed = 1;
    options.seed = *seed;
  }
  options.flip_kks_sign = flip_kks;
  options.omit_timing = no_timing;
  if (probes) options.probes = probes->c_str();
  options.suite = suite.c_str();
  if (hamiltonian) options.hamiltonian = hamiltonian->c_str();
  options.t = t;
  options.dt = dt;
  if (tangent) options.tangent = tangent->c_str();
  options.mode = mode.c_str();

  sf_result* result = nullptr;
  const sf_status status = sf_run(fixture, command.c_str(), &options, &result);
  const std::string name = sf_fixture_name(fixture);
  sf_fixture_free(fixture);
  if (status == SF_INPUT_ERROR || status == SF_NUMERICAL_ERROR)
    std::fprintf(stderr, "symflag %s: %s\n", command.c_str(), sf_last_error());

  const std::string dir = report_dir();
  std::string report_path;
  if (command == "flow") {
    if (status == SF_OK || status == SF_CHECK_FAILED) {
      const std::string fixture_out = out_path.empty() ? join(dir, name + "_flowed.json") : out_path;
      const std::string csv_out = strip_json_suffix(fixture_out) + ".csv";
      if (!write_file(fixture_out, sf_result_fixture(result)) || !write_file(csv_out, sf_result_csv(result))) {
        std::fprintf(stderr, "symflag flow: cannot write %s\n", fixture_out.c_str());
        sf_result_free(result);
        return SF_INPUT_ERROR;
      }
      std::fprintf(stderr, "wrote %s and %s\n", fixture_out.c_str(), csv_out.c_str());
    }
    if (!dir.empty()) report_path = join(dir, "flow-" + name + ".json");
  } else if (!out_path.empty()) {
    report_path = out_path;
  } else if (!dir.empty()) {
    report_path = join(dir, command + "-" + name + ".json");
  }
  if (report_path.empty()) {
    std::fputs(sf_result_report(result), stdout);
  } else if (!write_file(report_path, sf_result_report(result))) {
    std::fprintf(stderr, "symflag %s: cannot write %s\n", command.c_str(), report_path.c_str());
    sf_result_free(result);
    return SF_INPUT_ERROR;
  }
  sf_result_free(result);
  // Numerical failures (e.g. integrator blow-up) count as failed checks.
  return status == SF_NUMERICAL_ERROR ? SF_CHECK_FAILED : status;
}

#pragma once

#include "symflag/fixture.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace symflag {

// Exit-code contract of the command drivers.
enum class Status { kPass = 0, kCheckFailed = 1, kInputError = 2, kNumericalError = 3 };

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // overrides the fixture seed
  bool flip_kks_sign = false;         // debug: negate the J side of the KKS rows
  bool timing = true;                 // include the "timing" block
  std::optional<std::string> probes;  // comma-separated; fixture probes otherwise
  std::string suite = "all";
  std::optional<std::string> hamiltonian;  // expression or fixture function name
  double t = 1.0;
  double dt = 1e-3;
  std::optional<std::string> tangent;  // fixture tangent name or "hamiltonian:EXPR"
  std::string mode = "inductive";
};

struct CommandResult {
  Status status = Status::kPass;
  Json report;
  std::string fixture_out;  // flow only
  std::string csv;          // flow only
};

inline const std::vector<std::string> kSuites = {"calc", "stokes", "equivariance", "kks", "nondegeneracy", "lifting"};

CommandResult cmd_validate(const Fixture& fixture, const CommandOptions& options = {});
CommandResult cmd_moment(const Fixture& fixture, const CommandOptions& options = {});
CommandResult cmd_check(const Fixture& fixture, const CommandOptions& options = {});
CommandResult cmd_flow(const Fixture& fixture, const CommandOptions& options = {});
CommandResult cmd_lift(const Fixture& fixture, const CommandOptions& options = {});

// Report that carries an error instead of rows.
Json error_report(const std::string& command, const std::string& message, Status status);
Status status_of(ErrorKind kind);

// Rebuilds a grid fixture at another resolution; the lowest submesh levels
// must sit on grid vertices that survive the rescaling.
Fixture with_grid_resolution(const Fixture& fixture, int resolution);

}  // namespace symflag

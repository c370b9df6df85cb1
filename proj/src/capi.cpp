#include "symflag/symflag.h"

#include "symflag/commands.hpp"
#include "symflag/fixture.hpp"

#include <memory>
#include <string>

struct sf_fixture {
  symflag::Fixture fixture;
};

struct sf_result {
  std::string report;
  std::string fixture;
  std::string csv;
};

namespace {

thread_local std::string g_last_error;

sf_status record(sf_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
sf_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const symflag::Error& e) {
    return record(static_cast<sf_status>(symflag::status_of(e.kind())), e.what());
  } catch (const std::exception& e) {
    return record(SF_NUMERICAL_ERROR, std::string("internal error: ") + e.what());
  }
}

symflag::CommandOptions convert(const sf_options* o) {
  symflag::CommandOptions out;
  if (!o) return out;
  if (o->has_seed) out.seed = o->seed;
  out.flip_kks_sign = o->flip_kks_sign != 0;
  out.timing = o->omit_timing == 0;
  if (o->probes) out.probes = std::string(o->probes);
  if (o->suite) out.suite = o->suite;
  if (o->hamiltonian) out.hamiltonian = std::string(o->hamiltonian);
  out.t = o->t;
  out.dt = o->dt;
  if (o->tangent) out.tangent = std::string(o->tangent);
  if (o->mode) out.mode = o->mode;
  return out;
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "1.0.0"; }

void sf_options_init(sf_options* options) {
  if (!options) return;
  *options = sf_options{};
  options->t = 1.0;
  options->dt = 1e-3;
}

const char* sf_last_error(void) { return g_last_error.c_str(); }

sf_status sf_fixture_load(const char* path, sf_fixture** out) {
  if (!path || !out) return record(SF_INPUT_ERROR, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new sf_fixture{symflag::load_fixture(path)};
    return SF_OK;
  });
}

sf_status sf_fixture_parse(const char* json, sf_fixture** out) {
  if (!json || !out) return record(SF_INPUT_ERROR, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new sf_fixture{symflag::parse_fixture(json)};
    return SF_OK;
  });
}

void sf_fixture_free(sf_fixture* fixture) { delete fixture; }

const char* sf_fixture_name(const sf_fixture* fixture) { return fixture ? fixture->fixture.name.c_str() : ""; }

int sf_fixture_depth(const sf_fixture* fixture) { return fixture ? fixture->fixture.flag.depth() : 0; }

sf_status sf_moment_pairing(const sf_fixture* fixture, const char* expression, double* value) {
  if (!fixture || !expression || !value) return record(SF_INPUT_ERROR, "null argument");
  return guarded([&] {
    const auto& fx = fixture->fixture;
    const auto f = symflag::parse_function(symflag::Json(expression), fx.flag.ambient());
    *value = symflag::moment_pairing(fx.flag, symflag::FormField::from_trig(f), fx.config.quadrature_order);
    return SF_OK;
  });
}

sf_status sf_run(const sf_fixture* fixture, const char* command, const sf_options* options, sf_result** out) {
  if (!fixture || !command || !out) return record(SF_INPUT_ERROR, "null argument");
  auto result = std::make_unique<sf_result>();
  const std::string cmd = command;
  const sf_status status = guarded([&] {
    const symflag::CommandOptions o = convert(options);
    const auto& fx = fixture->fixture;
    symflag::CommandResult r;
    if (cmd == "validate") r = symflag::cmd_validate(fx, o);
    else if (cmd == "moment") r = symflag::cmd_moment(fx, o);
    else if (cmd == "check") r = symflag::cmd_check(fx, o);
    else if (cmd == "flow") r = symflag::cmd_flow(fx, o);
    else if (cmd == "lift") r = symflag::cmd_lift(fx, o);
    else symflag::fail(symflag::ErrorKind::kSchema, "unknown command \"" + cmd + "\"");
    result->report = symflag::dump_json(r.report);
    result->fixture = std::move(r.fixture_out);
    result->csv = std::move(r.csv);
    return static_cast<sf_status>(r.status);
  });
  if (result->report.empty())
    result->report = symflag::dump_json(symflag::error_report(cmd, g_last_error, static_cast<symflag::Status>(status)));
  *out = result.release();
  return status;
}

const char* sf_result_report(const sf_result* result) { return result ? result->report.c_str() : ""; }
const char* sf_result_fixture(const sf_result* result) { return result ? result->fixture.c_str() : ""; }
const char* sf_result_csv(const sf_result* result) { return result ? result->csv.c_str() : ""; }
void sf_result_free(sf_result* result) { delete result; }

}  // extern "C"

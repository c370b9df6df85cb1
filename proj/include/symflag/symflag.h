/* C interface of libsymflag: fixtures in, JSON reports out. */
#ifndef SYMFLAG_SYMFLAG_H
#define SYMFLAG_SYMFLAG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SYMFLAG_BUILD)
#define SF_API __attribute__((visibility("default")))
#else
#define SF_API
#endif

typedef struct sf_fixture sf_fixture;
typedef struct sf_result sf_result;

/* Also the CLI exit codes. */
typedef enum sf_status {
  SF_OK = 0,
  SF_CHECK_FAILED = 1,
  SF_INPUT_ERROR = 2,
  SF_NUMERICAL_ERROR = 3
} sf_status;

typedef struct sf_options {
  int has_seed;
  uint64_t seed;
  int flip_kks_sign;   /* debug: negate the J side of the KKS rows */
  int omit_timing;     /* drop the "timing" block from reports */
  const char* probes;  /* comma-separated expressions; NULL selects the fixture probes */
  const char* suite;   /* check suite; NULL selects "all" */
  const char* hamiltonian;
  double t;
  double dt;
  const char* tangent; /* fixture tangent name or "hamiltonian:EXPR" */
  const char* mode;    /* "inductive" or "direct" */
} sf_options;

SF_API const char* sf_version(void);
SF_API void sf_options_init(sf_options* options);

/* Message of the last failed call on this thread; empty when none. */
SF_API const char* sf_last_error(void);

SF_API sf_status sf_fixture_load(const char* path, sf_fixture** out);
SF_API sf_status sf_fixture_parse(const char* json, sf_fixture** out);
SF_API void sf_fixture_free(sf_fixture* fixture);
SF_API const char* sf_fixture_name(const sf_fixture* fixture);
SF_API int sf_fixture_depth(const sf_fixture* fixture);

/* <J, f> for an expression f in the ambient coordinates. */
SF_API sf_status sf_moment_pairing(const sf_fixture* fixture, const char* expression, double* value);

/* command: "validate", "moment", "check", "flow" or "lift". A result is
   produced whenever *out is set, including input and numerical errors. */
SF_API sf_status sf_run(const sf_fixture* fixture, const char* command, const sf_options* options, sf_result** out);
SF_API const char* sf_result_report(const sf_result* result);
/* flow only; empty otherwise. */
SF_API const char* sf_result_fixture(const sf_result* result);
SF_API const char* sf_result_csv(const sf_result* result);
SF_API void sf_result_free(sf_result* result);

#ifdef __cplusplus
}
#endif

#endif

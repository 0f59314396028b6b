#ifndef IFSLDP_H
#define IFSLDP_H

/* C interface to libifsldp. Handles are opaque; every call returns a status
 * and, on failure, leaves a message in ifsldp_last_error() (per thread).
 * Strings handed out through char** belong to the caller and are released
 * with ifsldp_string_free. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define IFSLDP_API __attribute__((visibility("default")))
#else
#define IFSLDP_API
#endif

typedef enum ifsldp_status {
  IFSLDP_OK = 0,
  IFSLDP_PARSE = 1,
  IFSLDP_VALIDATION = 2,
  IFSLDP_SOLVER = 3,
  IFSLDP_CONTRADICTION = 4,
  IFSLDP_ARGUMENT = 5,
  IFSLDP_IO = 6,
  IFSLDP_INTERNAL = 7
} ifsldp_status;

typedef struct ifsldp_config ifsldp_config;
typedef struct ifsldp_system ifsldp_system;
typedef struct ifsldp_potential ifsldp_potential;

IFSLDP_API const char* ifsldp_version(void);
IFSLDP_API const char* ifsldp_last_error(void);
IFSLDP_API void ifsldp_string_free(char* s);
/* Process exit code for a status: 0 ok, 1 parse/argument/io/internal,
 * 2 validation, 3 solver, 4 contradiction. */
IFSLDP_API int ifsldp_exit_code(ifsldp_status status);

/* ---- experiment configs ---- */

IFSLDP_API ifsldp_status ifsldp_config_load(const char* path, ifsldp_config** out);
IFSLDP_API ifsldp_status ifsldp_config_parse(const char* yaml, const char* source_name,
                                             ifsldp_config** out);
/* "dotted.key=value" on a scalar field; the config is re-parsed. */
IFSLDP_API ifsldp_status ifsldp_config_override(ifsldp_config* cfg, const char* assignment);
IFSLDP_API ifsldp_status ifsldp_config_set_output_dir(ifsldp_config* cfg, const char* dir);
IFSLDP_API ifsldp_status ifsldp_config_hash(const ifsldp_config* cfg, char** out);
IFSLDP_API ifsldp_status ifsldp_config_effective_json(const ifsldp_config* cfg, char** out);
IFSLDP_API void ifsldp_config_free(ifsldp_config* cfg);

/* Commands. On IFSLDP_OK, *result_json holds
 * {"exit_code": int, "summary": {...}, "messages": [...], "files": [...]}. */
IFSLDP_API ifsldp_status ifsldp_run_validate(const ifsldp_config* cfg, char** result_json);
IFSLDP_API ifsldp_status ifsldp_run_thermo(const ifsldp_config* cfg, double beta,
                                           char** result_json);
IFSLDP_API ifsldp_status ifsldp_run_tropical(const ifsldp_config* cfg, char** result_json);
IFSLDP_API ifsldp_status ifsldp_run_ldp(const ifsldp_config* cfg, size_t threads,
                                        char** result_json);
/* target: "mane", "density" or "rate"; depth 0 uses the config's symbolic depth. */
IFSLDP_API ifsldp_status ifsldp_run_oracle(const ifsldp_config* cfg, const char* target,
                                           size_t depth, char** result_json);

/* ---- direct access ---- */

IFSLDP_API ifsldp_status ifsldp_system_create(size_t n_maps, const double* slopes,
                                              const double* offsets, const double* weights,
                                              double gamma, ifsldp_system** out);
/* IFSLDP_VALIDATION with the violations in *report (may be NULL) when invalid. */
IFSLDP_API ifsldp_status ifsldp_system_validate(const ifsldp_system* sys, char** report);
IFSLDP_API void ifsldp_system_free(ifsldp_system* sys);

/* letters[0] is applied last: phi_{w1} o ... o phi_{wn}(x). */
IFSLDP_API ifsldp_status ifsldp_eval_word(const ifsldp_system* sys, const size_t* letters,
                                          size_t length, double x, double* out);

IFSLDP_API ifsldp_status ifsldp_potential_constant(size_t n_maps, const double* values,
                                                   ifsldp_potential** out);
IFSLDP_API ifsldp_status ifsldp_potential_affine(size_t n_maps, const double* intercepts,
                                                 const double* slopes, double lip_bound,
                                                 ifsldp_potential** out);
IFSLDP_API void ifsldp_potential_free(ifsldp_potential* pot);

IFSLDP_API ifsldp_status ifsldp_word_sum(const ifsldp_system* sys, const ifsldp_potential* pot,
                                         const size_t* letters, size_t length, double x,
                                         double mA, double* out);

/* Leading eigenpair on an n_points grid; h (length n_points, sup 1) may be NULL. */
IFSLDP_API ifsldp_status ifsldp_eigen(const ifsldp_system* sys, const ifsldp_potential* pot,
                                      double beta, size_t n_points, double* lambda,
                                      double* log_lambda, double* h);
IFSLDP_API ifsldp_status ifsldp_max_cycle_mean(const ifsldp_system* sys,
                                               const ifsldp_potential* pot, size_t n_points,
                                               double* out);
/* Rate function I = -lambda on the grid (length n_points; -lambda may be +inf). */
IFSLDP_API ifsldp_status ifsldp_rate_function(const ifsldp_system* sys,
                                              const ifsldp_potential* pot, size_t n_points,
                                              double* I);

#ifdef __cplusplus
}
#endif

#endif

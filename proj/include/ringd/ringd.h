/* ringd: simulated storage-ring control system, C interface.
 *
 * Every call returning int returns RINGD_OK (0) or one of the RINGD_E_*
 * codes; ringd_last_error() then holds a message for the calling thread.
 * Objects are opaque handles released with their matching free/close/stop
 * call. Strings handed out by the library are released with
 * ringd_free_string().
 *
 * Bus addresses are "host:port"; NULL or "" means $RINGD_BUS_ADDR, falling
 * back to 127.0.0.1:5064.
 */
#ifndef RINGD_RINGD_H
#define RINGD_RINGD_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#pragma GCC visibility push(default)
#endif

enum {
  RINGD_OK = 0,
  RINGD_E_INTERNAL = 1,
  RINGD_E_UNKNOWN_CHANNEL = 2,
  RINGD_E_SHAPE_MISMATCH = 3,
  RINGD_E_READ_ONLY = 4,
  RINGD_E_PARSE = 5,
  RINGD_E_CONNECTION = 6,
  RINGD_E_PROTOCOL = 7,
  RINGD_E_IO = 8,
  RINGD_E_INVALID_ARGUMENT = 9,
  RINGD_E_DUPLICATE_NAME = 10,
  RINGD_E_BAD_NAME = 11,
  RINGD_E_BIND = 12,
  RINGD_E_INSUFFICIENT_DATA = 13,
  RINGD_E_NON_POSITIVE_CURRENT = 14,
  RINGD_E_NEGATIVE_INJECTION = 15,
  RINGD_E_BAD_THRESHOLD = 16,
  RINGD_E_DEGENERATE_TUNE = 17,
  RINGD_E_SINGULAR_FIT = 18,
  RINGD_E_RANK_DEFICIENT = 19,
  RINGD_E_CONVERGENCE = 20,
  RINGD_E_ALL_DISABLED = 21,
  RINGD_E_BAD_TRANSITION = 22,
  RINGD_E_BAD_MASK = 23
};

enum { RINGD_SCALAR = 0, RINGD_VECTOR = 1, RINGD_TEXT = 2 };

const char* ringd_status_name(int status);
const char* ringd_last_error(void);
const char* ringd_version(void);
void ringd_free_string(char* s);

/* ---- values ---- */

typedef struct ringd_value ringd_value;

int ringd_value_kind(const ringd_value* v);
double ringd_value_timestamp(const ringd_value* v);
int ringd_value_valid(const ringd_value* v); /* 0 when the status is INVALID */
/* Number of doubles (scalar: 1) or bytes of text. */
size_t ringd_value_length(const ringd_value* v);
/* Scalar or vector data; NULL for text. Valid until ringd_value_free. */
const double* ringd_value_data(const ringd_value* v);
/* Value as printed on the wire: shortest round-trip numbers separated by
 * spaces, or the text itself. Valid until ringd_value_free. */
const char* ringd_value_text(const ringd_value* v);
void ringd_value_free(ringd_value* v);

/* ---- client ---- */

typedef struct ringd_client ringd_client;

int ringd_client_connect(const char* address, double timeout_s, ringd_client** out);
void ringd_client_close(ringd_client* c);
int ringd_client_connected(const ringd_client* c);

int ringd_get(ringd_client* c, const char* name, ringd_value** out);
/* Value tokens are parsed against the channel's shape by the bus. */
int ringd_put_text(ringd_client* c, const char* name, const char* value_text);
int ringd_put_scalar(ringd_client* c, const char* name, double value);
int ringd_put_vector(ringd_client* c, const char* name, const double* values, size_t n);
/* Newline-separated names matching glob (NULL: all). */
int ringd_list(ringd_client* c, const char* glob, char** names_out);

typedef struct ringd_monitor ringd_monitor;
/* Runs on a library thread, first with the current value, then once per
 * put in order. The value is only valid during the call. */
typedef void (*ringd_monitor_fn)(void* user, const char* name, const ringd_value* value);
int ringd_monitor_start(ringd_client* c, const char* name, ringd_monitor_fn fn, void* user, ringd_monitor** out);
void ringd_monitor_stop(ringd_monitor* m);

/* ---- snapshots ---- */

/* Saves every channel matching any of the patterns (globs or names). */
int ringd_snapshot_save(ringd_client* c, const char* const* patterns, size_t n_patterns, const char* path,
                        const char* optics_name, size_t* saved, size_t* warnings);
int ringd_snapshot_restore(ringd_client* c, const char* path, size_t* applied, size_t* failed);

/* ---- optics ---- */

typedef struct ringd_optics_params {
  double d_nu_x, d_nu_y, d_xi_x, d_xi_y, s_sext, s_energy;
} ringd_optics_params;

typedef struct ringd_optics_inferred {
  ringd_optics_params params;
  double quad_residual, sext_residual, bend_residual;
} ringd_optics_inferred;

void ringd_optics_params_default(ringd_optics_params* p);
/* key: d_nu_x, d_nu_y, d_xi_x, d_xi_y, s_sext, s_energy */
int ringd_optics_set_param(ringd_optics_params* p, const char* key, double value);
int ringd_optics_read_params(ringd_client* c, ringd_optics_params* out);
int ringd_optics_apply(ringd_client* c, const char* optics_path, const ringd_optics_params* p);
int ringd_optics_infer(ringd_client* c, const char* optics_path, ringd_optics_inferred* out);

/* ---- generated files (config_path NULL: built-in machine) ---- */

int ringd_write_optics_file(const char* config_path, const char* optics_name, const char* out_path);
int ringd_write_response_file(const char* config_path, const char* out_path);
/* The built-in machine configuration in config-file syntax. */
int ringd_default_config(char** text_out);

/* ---- archive ---- */

/* CSV of the records of `name` within [t0, t1]. */
int ringd_archive_query_csv(const char* store_path, const char* name, double t0, double t1, char** csv_out,
                            size_t* rows, size_t* corrupt_lines);

/* ---- services ---- */

typedef struct ringd_service ringd_service;

/* Bus server plus the simulated ring in this process. `overrides` holds
 * extra "key = value" lines applied after the config file (either may be
 * NULL). */
int ringd_machine_start(const char* address, const char* config_path, const char* overrides, ringd_service** out);
int ringd_service_port(const ringd_service* s);

int ringd_lifetime_start(const char* address, size_t window, ringd_service** out);

enum { RINGD_OFB_STOPPED = 0, RINGD_OFB_PASSIVE = 1, RINGD_OFB_ACTIVE = 2 };
typedef struct ringd_ofb_options {
  double period;  /* s */
  double f_step;  /* Hz */
  double gain;
  int mode;       /* RINGD_OFB_* */
  int vertical;   /* also run the vertical plane */
} ringd_ofb_options;
void ringd_ofb_options_default(ringd_ofb_options* o);
int ringd_ofb_start(const char* address, const char* response_path, const ringd_ofb_options* o,
                    ringd_service** out);

int ringd_optics_serve(const char* address, const char* optics_path, ringd_service** out);

int ringd_archive_start(const char* address, const char* policy_path, const char* store_path, ringd_service** out);

/* 1 while the service is attached to its bus. */
int ringd_service_attached(const ringd_service* s);
/* Stops the service and frees the handle. */
void ringd_service_stop(ringd_service* s);

#if defined(__GNUC__)
#pragma GCC visibility pop
#endif

#ifdef __cplusplus
}
#endif

#endif /* RINGD_RINGD_H */

#ifndef DADIN_DADIN_H
#define DADIN_DADIN_H

/*
 * C interface to the DADIN library.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * fallible call returns a dadin_status; on failure dadin_last_error() holds a
 * message for the calling thread until its next failing call.
 */

#include <stddef.h>

#if defined(_WIN32)
#define DADIN_API __declspec(dllexport)
#else
#define DADIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dadin_status {
  DADIN_OK = 0,
  DADIN_ERR_INVALID_ARGUMENT = 1, /* null handle or pointer */
  DADIN_ERR_CONFIG = 2,
  DADIN_ERR_DATA = 3,
  DADIN_ERR_SCHEMA = 4,
  DADIN_ERR_DIMENSION = 5,
  DADIN_ERR_DEGENERATE_INPUT = 6,
  DADIN_ERR_CONTRACT = 7,
  DADIN_ERR_LOOKUP = 8,
  DADIN_ERR_DIVERGENCE = 9,
  DADIN_ERR_CHECKPOINT = 10,
  DADIN_ERR_UNDEFINED_METRIC = 11,
  DADIN_ERR_NOT_APPLICABLE = 12,
  DADIN_ERR_IO = 13,
  DADIN_ERR_BUFFER_TOO_SMALL = 14,
  DADIN_ERR_INTERNAL = 15
} dadin_status;

typedef struct dadin_config dadin_config;
typedef struct dadin_result dadin_result;

DADIN_API const char* dadin_version(void);
DADIN_API const char* dadin_status_name(dadin_status status);
/* Message of the calling thread's most recent failure; "" if none. */
DADIN_API const char* dadin_last_error(void);

/* Configuration with all defaults. */
DADIN_API dadin_status dadin_config_create(dadin_config** out);
DADIN_API void dadin_config_destroy(dadin_config* config);
DADIN_API dadin_status dadin_config_set(dadin_config* config, const char* key, const char* value);
/*
 * Copies the value of key into buf (NUL-terminated). *needed, when given,
 * receives the length including the terminator; a short buffer yields
 * DADIN_ERR_BUFFER_TOO_SMALL.
 */
DADIN_API dadin_status dadin_config_get(const dadin_config* config, const char* key, char* buf, size_t capacity,
                                        size_t* needed);
/* Applies `key = value` lines from a file on top of the current values. */
DADIN_API dadin_status dadin_config_load(dadin_config* config, const char* path);
/* Full `key = value` listing; valid until the config is destroyed or changed. */
DADIN_API const char* dadin_config_snapshot(const dadin_config* config);
DADIN_API dadin_status dadin_config_validate(const dadin_config* config);

/* Key catalogue, in snapshot order. Out-of-range indices return NULL. */
DADIN_API size_t dadin_config_key_count(void);
DADIN_API const char* dadin_config_key_name(size_t index);
DADIN_API const char* dadin_config_key_help(size_t index);

DADIN_API size_t dadin_command_count(void);
DADIN_API const char* dadin_command_name(size_t index);
DADIN_API const char* dadin_command_help(size_t index);

/* Runs a command ("toy", "resample", "train", ...). *out is set only on success. */
DADIN_API dadin_status dadin_run(const dadin_config* config, const char* command, dadin_result** out);
DADIN_API void dadin_result_destroy(dadin_result* result);
/* Human-readable summary and a JSON digest; owned by the result. */
DADIN_API const char* dadin_result_summary(const dadin_result* result);
DADIN_API const char* dadin_result_json(const dadin_result* result);
DADIN_API size_t dadin_result_file_count(const dadin_result* result);
DADIN_API const char* dadin_result_file(const dadin_result* result, size_t index);

/* Metrics on caller-owned arrays of length n; labels are 0/1. */
DADIN_API dadin_status dadin_auc(const double* scores, const double* labels, size_t n, double* out);
DADIN_API dadin_status dadin_logloss(const double* scores, const double* labels, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* DADIN_DADIN_H */

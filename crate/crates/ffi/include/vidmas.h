#ifndef VIDMAS_H
#define VIDMAS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum VidmasStatus {
  VIDMAS_STATUS_OK = 0,
  VIDMAS_STATUS_NULL_POINTER = 1,
  VIDMAS_STATUS_INVALID_UTF8 = 2,
  VIDMAS_STATUS_PANIC = 3,
  VIDMAS_STATUS_INVALID_ARGUMENT = 10,
  VIDMAS_STATUS_INVALID_CONFIG = 11,
  VIDMAS_STATUS_INVALID_RATING = 12,
  VIDMAS_STATUS_INVALID_DESCRIPTOR = 13,
  VIDMAS_STATUS_EMPTY_FRAMES = 14,
  VIDMAS_STATUS_OUT_OF_RANGE_PERFORMANCE = 15,
  VIDMAS_STATUS_UNKNOWN_USER = 20,
  VIDMAS_STATUS_UNKNOWN_DOMAIN = 21,
  VIDMAS_STATUS_UNKNOWN_DOCUMENT = 22,
  VIDMAS_STATUS_UNKNOWN_CONCEPT = 23,
  VIDMAS_STATUS_UNKNOWN_COMMUNITY = 24,
  VIDMAS_STATUS_UNKNOWN_STRATEGY = 25,
  VIDMAS_STATUS_DUPLICATE_USER = 30,
  VIDMAS_STATUS_DUPLICATE_DOCUMENT = 31,
  VIDMAS_STATUS_MODEL_MISSING = 40,
  VIDMAS_STATUS_EMPTY_TRAINING_SET = 41,
  VIDMAS_STATUS_INSUFFICIENT_CLASSES = 42,
  VIDMAS_STATUS_EMPTY_EVALUATION_SET = 43,
  VIDMAS_STATUS_IO_FAILURE = 50,
  VIDMAS_STATUS_CORRUPT_STORE = 51,
  VIDMAS_STATUS_FETCH_FAILED = 52,
  VIDMAS_STATUS_RUNTIME_FAILURE = 60,
} VidmasStatus;

// Opaque engine handle.
typedef struct VidmasEngine VidmasEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Opens an engine. `config_path` (TOML or JSON) and `data_dir` may be null;
// a null `data_dir` keeps the configured directory, and with none the
// engine runs in memory. On success `*out` receives a handle to release with
// [`vidmas_engine_free`].
//
// # Safety
// String arguments must be null or valid NUL-terminated strings; `out` must
// be writable.
enum VidmasStatus vidmas_engine_open(const char *config_path,
                                     const char *data_dir,
                                     struct VidmasEngine **out);

// Releases an engine handle. Null is ignored.
//
// # Safety
// `engine` must come from [`vidmas_engine_open`] and not be used afterwards.
void vidmas_engine_free(struct VidmasEngine *engine);

// Ingests a descriptor file or a directory of them. `*out_json` receives
// the ingest report.
//
// # Safety
// `engine` must be a live handle, `path` a valid string, `out_json` writable.
enum VidmasStatus vidmas_ingest(struct VidmasEngine *engine, const char *path, char **out_json);

// Trains the classifier from a JSONL labels file and reclassifies the
// store. `*out_json` receives the training report.
//
// # Safety
// `engine` must be a live handle, `labels_path` a valid string, `out_json`
// writable.
enum VidmasStatus vidmas_train(struct VidmasEngine *engine,
                               const char *labels_path,
                               char **out_json);

// Creates a user avatar seeded from its geographic community.
//
// # Safety
// `engine` must be a live handle and the strings valid.
enum VidmasStatus vidmas_create_user(struct VidmasEngine *engine,
                                     const char *user,
                                     const char *country,
                                     const char *language);

// Runs a query. `*out_json` receives the strategy, ranked results and the
// per-stage performance report.
//
// # Safety
// `engine` must be a live handle, the strings valid, `out_json` writable.
enum VidmasStatus vidmas_query(struct VidmasEngine *engine,
                               const char *user,
                               const char *domain,
                               const char *text,
                               size_t k,
                               char **out_json);

// Records a 0..=5 rating. `*out_tau` receives the document's new pheromone.
//
// # Safety
// `engine` must be a live handle, the strings valid, `out_tau` writable.
enum VidmasStatus vidmas_feedback(struct VidmasEngine *engine,
                                  const char *user,
                                  const char *doc,
                                  int64_t rating,
                                  double *out_tau);

// Up to `k` query suggestions as a JSON array.
//
// # Safety
// `engine` must be a live handle, the strings valid, `out_json` writable.
enum VidmasStatus vidmas_suggest(struct VidmasEngine *engine,
                                 const char *user,
                                 const char *domain,
                                 size_t k,
                                 char **out_json);

// Tier counts and mean pheromone as JSON.
//
// # Safety
// `engine` must be a live handle and `out_json` writable.
enum VidmasStatus vidmas_stats(struct VidmasEngine *engine, char **out_json);

// One organizer cycle. `*out_migrations` receives the number of documents
// that changed tier.
//
// # Safety
// `engine` must be a live handle and `out_migrations` writable.
enum VidmasStatus vidmas_reorganize(struct VidmasEngine *engine,
                                    bool evaporate,
                                    size_t *out_migrations);

// Persists the store. A no-op for in-memory engines.
//
// # Safety
// `engine` must be a live handle.
enum VidmasStatus vidmas_save(struct VidmasEngine *engine);

// Product of `len` stage performances in `[0, 1]`.
//
// # Safety
// `values` must point to `len` readable doubles (or be null when `len` is
// 0) and `out` must be writable.
enum VidmasStatus vidmas_global_performance(const double *values, size_t len, double *out);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void vidmas_string_free(char *s);

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *vidmas_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VIDMAS_H */

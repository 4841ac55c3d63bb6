#ifndef SYNLEX_H
#define SYNLEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SynlexMode {
  SYNLEX_MODE_VERBOSE = 0,
  SYNLEX_MODE_XTAG = 1,
} SynlexMode;

/**
 * Result code of every call. Zero is success.
 */
typedef enum SynlexStatus {
  SYNLEX_STATUS_OK = 0,
  SYNLEX_STATUS_NULL_ARGUMENT = 1,
  SYNLEX_STATUS_INVALID_UTF8 = 2,
  SYNLEX_STATUS_IO = 3,
  SYNLEX_STATUS_INTEGRITY = 4,
  SYNLEX_STATUS_VERSION_MISMATCH = 5,
  SYNLEX_STATUS_REGISTRY_MISMATCH = 6,
  SYNLEX_STATUS_READ_ONLY = 7,
  SYNLEX_STATUS_DUPLICATE = 8,
  SYNLEX_STATUS_NOT_FOUND = 9,
  SYNLEX_STATUS_INVALID_ENTRY = 10,
  SYNLEX_STATUS_QUERY = 11,
  SYNLEX_STATUS_PARSE = 12,
  SYNLEX_STATUS_PANIC = 99,
} SynlexStatus;

/**
 * Opaque store handle.
 */
typedef struct SynlexStore SynlexStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Open a store. A writable open creates the file when it is missing.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SynlexStatus synlex_open(const char *path, bool writable, struct SynlexStore **out);

/**
 * Flush and release a handle. Null is accepted and ignored.
 *
 * # Safety
 * `store` must come from [`synlex_open`] and not be used afterwards.
 */
enum SynlexStatus synlex_close(struct SynlexStore *store);

/**
 * Number of live entries.
 *
 * # Safety
 * `store` must be a live handle; `out` must be writable.
 */
enum SynlexStatus synlex_len(const struct SynlexStore *store, uint64_t *out);

/**
 * Store mutation counter; it changes whenever entries are added or
 * removed.
 *
 * # Safety
 * `store` must be a live handle; `out` must be writable.
 */
enum SynlexStatus synlex_mutation_counter(const struct SynlexStore *store, uint64_t *out);

/**
 * All entries under `index`, as flat-file lines (empty string if none).
 *
 * # Safety
 * `store` must be a live handle, `index` NUL-terminated, `out` writable.
 */
enum SynlexStatus synlex_lookup_flat(const struct SynlexStore *store,
                                     const char *index,
                                     enum SynlexMode mode,
                                     char **out);

/**
 * Entries matching a query such as `POS=Noun FS=wh+`, as flat-file lines.
 *
 * # Safety
 * `store` must be a live handle, `query` NUL-terminated, `out` writable.
 */
enum SynlexStatus synlex_query_flat(const struct SynlexStore *store,
                                    const char *query,
                                    enum SynlexMode mode,
                                    char **out);

/**
 * Add one entry given as a flat-file line.
 *
 * # Safety
 * `store` must be a live handle and `line` NUL-terminated.
 */
enum SynlexStatus synlex_put_flat(struct SynlexStore *store, const char *line);

/**
 * Remove the entry equal to a flat-file line.
 *
 * # Safety
 * `store` must be a live handle and `line` NUL-terminated.
 */
enum SynlexStatus synlex_delete_flat(struct SynlexStore *store, const char *line);

/**
 * Write pending changes so another process can open the file.
 *
 * # Safety
 * `store` must be a live handle.
 */
enum SynlexStatus synlex_flush(struct SynlexStore *store);

/**
 * Display block for a flat-file line (`INDEX: ...` one field per line).
 *
 * # Safety
 * `store` must be a live handle, `line` NUL-terminated, `out` writable.
 */
enum SynlexStatus synlex_render(const struct SynlexStore *store,
                                const char *line,
                                enum SynlexMode mode,
                                char **out);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *synlex_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void synlex_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SYNLEX_H */

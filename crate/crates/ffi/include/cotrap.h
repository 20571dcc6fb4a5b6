#ifndef COTRAP_H
#define COTRAP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CotrapStatus {
  COTRAP_STATUS_OK = 0,
  COTRAP_STATUS_NULL_POINTER = 1,
  COTRAP_STATUS_INVALID_UTF8 = 2,
  COTRAP_STATUS_INVALID_ARGUMENT = 3,
  COTRAP_STATUS_OUT_OF_RANGE = 4,
  COTRAP_STATUS_ZERO_DENOMINATOR = 5,
  COTRAP_STATUS_PANIC = 99,
} CotrapStatus;

typedef enum CotrapSparsity {
  COTRAP_SPARSITY_SURROUNDED_BLANK = 0,
  COTRAP_SPARSITY_LEADING_BLANK = 1,
  COTRAP_SPARSITY_TRAILING_BLANK = 2,
  COTRAP_SPARSITY_TIGHT = 3,
  COTRAP_SPARSITY_MISALIGNED = 4,
} CotrapSparsity;

/**
 * Commented-out code blocks found in one source text.
 */
typedef struct CotrapDetection CotrapDetection;

/**
 * A prompt with a block inserted relative to its completion point.
 */
typedef struct CotrapVariant CotrapVariant;

/**
 * One comment block judged to be commented-out code.
 */
typedef struct CotrapBlock {
  uintptr_t start_line;
  uintptr_t end_line;
  uintptr_t co_line_count;
} CotrapBlock;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into the library on the same thread.
 */
const char *cotrap_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cotrap_version(void);

/**
 * Relative increase of `count` over `blank`, in hundredths of a percent.
 *
 * # Safety
 * `out_hundredths` must be null or valid for writes.
 */
enum CotrapStatus cotrap_rel_incr(uint64_t count, uint64_t blank, int64_t *out_hundredths);

/**
 * Relative decrease from `before` to `after`, in hundredths of a percent.
 *
 * # Safety
 * `out_hundredths` must be null or valid for writes.
 */
enum CotrapStatus cotrap_decrease_ratio(uint64_t before, uint64_t after, int64_t *out_hundredths);

/**
 * Finds the commented-out code blocks of a Python source text.
 *
 * # Safety
 * `source` must be null or a NUL-terminated string; `out_detection` must
 * be null or valid for writes.
 */
enum CotrapStatus cotrap_detect(const char *source, struct CotrapDetection **out_detection);

/**
 * Number of blocks in a detection; 0 for a null handle.
 *
 * # Safety
 * `detection` must be null or a live handle from `cotrap_detect`.
 */
uintptr_t cotrap_detection_len(const struct CotrapDetection *detection);

/**
 * # Safety
 * `detection` must be null or a live handle; `out_block` must be null or
 * valid for writes.
 */
enum CotrapStatus cotrap_detection_get(const struct CotrapDetection *detection,
                                       uintptr_t index,
                                       struct CotrapBlock *out_block);

/**
 * # Safety
 * `detection` must be null or a handle not yet freed.
 */
void cotrap_detection_free(struct CotrapDetection *detection);

/**
 * Inserts `co_block` so its first line lands on context line
 * `completion_point + offset`. Offsets run from -8 to -1 and 1 to 3.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out_variant` must be
 * null or valid for writes.
 */
enum CotrapStatus cotrap_insert_block(const char *context,
                                      const char *co_block,
                                      uintptr_t completion_point,
                                      int32_t offset,
                                      struct CotrapVariant **out_variant);

/**
 * The prompt text, owned by the handle. Null for a null handle.
 *
 * # Safety
 * `variant` must be null or a live handle.
 */
const char *cotrap_variant_text(const struct CotrapVariant *variant);

/**
 * Inserted line range and the completion point within the prompt.
 *
 * # Safety
 * `variant` must be null or a live handle; out-pointers must be null or
 * valid for writes.
 */
enum CotrapStatus cotrap_variant_geometry(const struct CotrapVariant *variant,
                                          uintptr_t *out_start_line,
                                          uintptr_t *out_end_line,
                                          uintptr_t *out_completion_point);

/**
 * # Safety
 * `variant` must be null or a live handle; `out_class` must be null or
 * valid for writes.
 */
enum CotrapStatus cotrap_variant_sparsity(const struct CotrapVariant *variant,
                                          enum CotrapSparsity *out_class);

/**
 * # Safety
 * `variant` must be null or a handle not yet freed.
 */
void cotrap_variant_free(struct CotrapVariant *variant);

/**
 * Drops the trailing `fraction` of the block's characters, then any
 * trailing line left without its `#`. Release the result with
 * `cotrap_string_free`.
 *
 * # Safety
 * `co_block` must be null or NUL-terminated; `out_text` must be null or
 * valid for writes.
 */
enum CotrapStatus cotrap_truncate_block(const char *co_block, double fraction, char **out_text);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void cotrap_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COTRAP_H */

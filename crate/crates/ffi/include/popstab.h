/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef POPSTAB_H
#define POPSTAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum PopstabStatus {
  POPSTAB_STATUS_OK = 0,
  /**
   * The function is not subset-closed, or a verdict is violated.
   */
  POPSTAB_STATUS_FAILURE = 1,
  /**
   * Malformed text, unknown symbol, or mismatched alphabets.
   */
  POPSTAB_STATUS_INVALID_INPUT = 2,
  /**
   * The configuration graph exceeds the node budget.
   */
  POPSTAB_STATUS_RESOURCE = 3,
  POPSTAB_STATUS_NULL_POINTER = 4,
  POPSTAB_STATUS_INTERNAL = 5,
} PopstabStatus;

/**
 * A protocol, synthesized or parsed from a protocol file.
 */
typedef struct PopstabProtocol PopstabProtocol;

/**
 * A parsed function specification.
 */
typedef struct PopstabSpec PopstabSpec;

/**
 * Summary of one verification run.
 */
typedef struct PopstabVerdict {
  bool self_stabilizing;
  /**
   * Index of `f(A)` in the output alphabet.
   */
  size_t expected_output;
  uint64_t nodes;
  uint64_t edges;
  uint64_t sccs;
  uint64_t bottom_sccs;
} PopstabVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message for the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *popstab_last_error(void);

/**
 * Parses a specification file's contents.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PopstabStatus popstab_spec_parse(const char *text, struct PopstabSpec **out);

/**
 * # Safety
 * `spec` must come from [`popstab_spec_parse`] and not be used afterwards.
 */
void popstab_spec_free(struct PopstabSpec *spec);

/**
 * `POPSTAB_STATUS_OK` if the function is subset-closed, `POPSTAB_STATUS_FAILURE`
 * with the violating pair in the last error otherwise.
 *
 * # Safety
 * `spec` must be a live handle.
 */
enum PopstabStatus popstab_spec_check(const struct PopstabSpec *spec);

/**
 * Number of roots in the minimal root set.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum PopstabStatus popstab_spec_root_count(const struct PopstabSpec *spec, size_t *out);

/**
 * Builds the self-stabilizing protocol for a subset-closed spec.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum PopstabStatus popstab_synthesize(const struct PopstabSpec *spec, struct PopstabProtocol **out);

/**
 * Parses a protocol file's contents.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PopstabStatus popstab_protocol_parse(const char *text, struct PopstabProtocol **out);

/**
 * # Safety
 * `protocol` must come from this library and not be used afterwards.
 */
void popstab_protocol_free(struct PopstabProtocol *protocol);

/**
 * # Safety
 * `protocol` must be a live handle and `out` a valid pointer.
 */
enum PopstabStatus popstab_protocol_state_count(const struct PopstabProtocol *protocol,
                                                uint32_t *out);

/**
 * Renders the protocol in the protocol file format.
 *
 * # Safety
 * `protocol` must be a live handle and `out` a valid pointer. Release the
 * string with [`popstab_string_free`].
 */
enum PopstabStatus popstab_protocol_render(const struct PopstabProtocol *protocol, char **out);

/**
 * Model-checks `protocol` on one input of `spec`. A `budget` of 0 uses the
 * spec file's budget, or the default. Returns `POPSTAB_STATUS_FAILURE` when
 * the verdict is violated. `report` may be NULL; otherwise it receives the
 * rendered verdict.
 *
 * # Safety
 * Handles must be live, `input` NUL-terminated, `verdict` valid, and
 * `report` NULL or valid.
 */
enum PopstabStatus popstab_verify(const struct PopstabProtocol *protocol,
                                  const struct PopstabSpec *spec,
                                  const char *input,
                                  uint64_t budget,
                                  struct PopstabVerdict *verdict,
                                  char **report);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void popstab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POPSTAB_H */

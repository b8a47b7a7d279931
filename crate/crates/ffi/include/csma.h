#ifndef CSMA_H
#define CSMA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CsmaStatus {
  CSMA_STATUS_OK = 0,
  CSMA_STATUS_NULL_POINTER = 1,
  CSMA_STATUS_INVALID_INPUT = 2,
  CSMA_STATUS_CAP_EXCEEDED = 3,
  CSMA_STATUS_SOLVER_FAILED = 4,
  /**
   * The quantity does not exist for this network, e.g. a height index
   * with a single dominant state.
   */
  CSMA_STATUS_UNDEFINED = 5,
  CSMA_STATUS_PANIC = 6,
} CsmaStatus;

/**
 * Opaque network handle.
 */
typedef struct CsmaNetwork CsmaNetwork;

/**
 * Opaque handle to an enumerated state space.
 */
typedef struct CsmaStateSpace CsmaStateSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *csma_last_error(void);

/**
 * Library version as a static string.
 */
const char *csma_version(void);

/**
 * Parses a network from the JSON file format.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum CsmaStatus csma_network_from_json(const char *json, struct CsmaNetwork **out_net);

/**
 * Builds a network with one conflict graph shared by all channels and
 * homogeneous activation rate `nu`. `edges` holds `2 * num_edges` node
 * indices.
 *
 * # Safety
 * `edges` must point to `2 * num_edges` readable values (or be null when
 * `num_edges` is zero) and `out_net` must be valid for writes.
 */
enum CsmaStatus csma_network_shared(uintptr_t num_nodes,
                                    const uint32_t *edges,
                                    uintptr_t num_edges,
                                    uintptr_t num_channels,
                                    double nu,
                                    struct CsmaNetwork **out_net);

/**
 * # Safety
 * `net` must be null or a handle from this library not yet freed.
 */
void csma_network_free(struct CsmaNetwork *net);

/**
 * # Safety
 * The handle must be null or live.
 */
uintptr_t csma_network_num_nodes(const struct CsmaNetwork *net);

/**
 * # Safety
 * The handle must be null or live.
 */
uintptr_t csma_network_num_channels(const struct CsmaNetwork *net);

/**
 * Enumerates the feasible states, refusing more than `cap` of them.
 *
 * # Safety
 * `net` must be a live network handle and `out_space` valid for writes.
 */
enum CsmaStatus csma_state_space_new(const struct CsmaNetwork *net,
                                     uintptr_t cap,
                                     struct CsmaStateSpace **out_space);

/**
 * # Safety
 * `space` must be null or a handle from this library not yet freed.
 */
void csma_state_space_free(struct CsmaStateSpace *space);

/**
 * Number of states; zero for a null handle.
 *
 * # Safety
 * The handle must be null or live.
 */
uintptr_t csma_state_space_len(const struct CsmaStateSpace *space);

/**
 * Largest number of simultaneously active nodes; zero for a null handle.
 *
 * # Safety
 * The handle must be null or live.
 */
uintptr_t csma_max_activity(const struct CsmaStateSpace *space);

/**
 * # Safety
 * The handle must be null or live.
 */
uintptr_t csma_dominant_count(const struct CsmaStateSpace *space);

/**
 * Asymptotic aggregate throughput per channel as a reduced fraction.
 *
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum CsmaStatus csma_throughput(const struct CsmaStateSpace *space,
                                uint64_t *numer,
                                uint64_t *denom);

/**
 * Jain index of the asymptotic per-node throughputs.
 *
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum CsmaStatus csma_jain(const struct CsmaStateSpace *space, uint64_t *numer, uint64_t *denom);

/**
 * Worst communication height between two dominant states.
 *
 * # Safety
 * `space` must be a live handle and `value` writable.
 */
enum CsmaStatus csma_gamma(const struct CsmaStateSpace *space, double *value);

/**
 * Network starvation index: the worst per-node index.
 *
 * # Safety
 * `space` must be a live handle and `value` writable.
 */
enum CsmaStatus csma_upsilon(const struct CsmaStateSpace *space, double *value);

/**
 * Expected time to reach any of `num_targets` states from `start` at rate
 * scale `nu`. States are `num_nodes` channel numbers each; the targets are
 * stored back to back.
 *
 * # Safety
 * `start` must hold `num_nodes` values and `targets` `num_targets * num_nodes`.
 */
enum CsmaStatus csma_hitting_time(const struct CsmaStateSpace *space,
                                  double nu,
                                  const uint8_t *start,
                                  const uint8_t *targets,
                                  uintptr_t num_targets,
                                  double *value);

/**
 * Full analysis report as JSON. Release the string with
 * [`csma_string_free`].
 *
 * # Safety
 * `net` must be a live handle and `json_out` writable.
 */
enum CsmaStatus csma_analyze_json(const struct CsmaNetwork *net, uintptr_t cap, char **json_out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void csma_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSMA_H */

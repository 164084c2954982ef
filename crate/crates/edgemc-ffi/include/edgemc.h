/* C interface to the edgemc edge-state MCMC sampler. */

#ifndef EDGEMC_H
#define EDGEMC_H

/* Generated by cbindgen from edgemc-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code returned by every fallible function in this interface.
typedef enum EmcStatus {
  // The call succeeded.
  EMC_STATUS_OK = 0,
  // A required pointer argument was null.
  EMC_STATUS_NULL_ARGUMENT = 1,
  // An argument failed validation: bad graph, data, prior, options, or an
  // out-of-range index.
  EMC_STATUS_INVALID_ARGUMENT = 2,
  // A string argument was not valid UTF-8.
  EMC_STATUS_UTF8 = 3,
  // A file could not be opened, read, or written.
  EMC_STATUS_IO = 4,
  // The computation failed after its inputs validated, for example a
  // rank-deficient regression; see `emc_last_error`.
  EMC_STATUS_RUNTIME = 5,
  // A panic was caught at the boundary. No output was written.
  EMC_STATUS_PANIC = 6,
} EmcStatus;

// Opaque handle to a data matrix: N observations of b named columns.
typedef struct EmcData EmcData;

// Opaque handle to a candidate graph: a node count plus an unordered
// candidate-edge list.
typedef struct EmcGraph EmcGraph;

// Opaque handle to a posterior table: per-edge probabilities of the
// forward, reverse, and absent states.
typedef struct EmcPosterior EmcPosterior;

// Sampler settings for `emc_infer`. Obtain defaults from
// `emc_infer_options_default`, then override fields as needed.
typedef struct EmcInferOptions {
  // Total Metropolis-Hastings iterations; must be at least 1.
  uint64_t iterations;
  // Fraction of iterations discarded from the front, in [0, 1).
  double burn_in_fraction;
  // Thinning interval: every step_size-th post-burn-in sample is kept.
  uint64_t step_size;
  // Seed of the chain RNG; equal seeds reproduce the run exactly.
  uint64_t seed;
  // Prior probability that an edge points lo -> hi.
  double prior_forward;
  // Prior probability that an edge points hi -> lo.
  double prior_reverse;
  // Prior probability that an edge is absent.
  double prior_absent;
} EmcInferOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from the most recent failing call on this thread, or an empty
// string if nothing has failed yet. The pointer stays valid until the next
// failing call on the same thread.
const char *emc_last_error(void);

// Library version as a static nul-terminated string.
const char *emc_version(void);

// Loads a data matrix from a CSV file with a header row of column names
// and one observation per row; every field must be a finite float.
//
// # Safety
// `path` must point to a nul-terminated string. `out` must point to a
// writable pointer slot; on success `*out` owns the matrix and must be
// released with `emc_data_free`.
enum EmcStatus emc_data_read_csv(const char *path, struct EmcData **out);

// Builds a data matrix from `n_cols` columns of `n_rows` values each,
// stored back to back in `values` (column-major, n_rows * n_cols entries).
// `names` may be null, in which case the columns are named T1, T2, ...;
// otherwise it must hold `n_cols` non-null nul-terminated strings.
//
// # Safety
// `values` must be readable for n_rows * n_cols doubles and `names`, when
// non-null, for `n_cols` pointers. On success `*out` owns the matrix and
// must be released with `emc_data_free`.
enum EmcStatus emc_data_from_columns(const char *const *names,
                                     const double *values,
                                     size_t n_rows,
                                     size_t n_cols,
                                     struct EmcData **out);

// Number of observations, or 0 when `data` is null.
//
// # Safety
// `data` must be null or a live handle from this library.
size_t emc_data_n_rows(const struct EmcData *data);

// Number of columns, or 0 when `data` is null.
//
// # Safety
// `data` must be null or a live handle from this library.
size_t emc_data_n_cols(const struct EmcData *data);

// Releases a data handle; null is ignored.
//
// # Safety
// `data` must be null or a handle not freed before; it is invalid after.
void emc_data_free(struct EmcData *data);

// Builds a candidate graph from an edge list over `node_count` nodes.
// `endpoints` holds 2 * edge_count zero-based node indices: candidate edge
// k joins endpoints[2k] and endpoints[2k+1]. Order within a pair does not
// matter. Self-loops, duplicate pairs, and out-of-range nodes are
// rejected. `endpoints` may be null only when `edge_count` is 0.
//
// # Safety
// `endpoints`, when non-null, must be readable for 2 * edge_count values.
// On success `*out` owns the graph and must be released with
// `emc_graph_free`.
enum EmcStatus emc_graph_from_edge_list(size_t node_count,
                                        const size_t *endpoints,
                                        size_t edge_count,
                                        struct EmcGraph **out);

// Builds the fully connected candidate graph on `node_count` nodes: all
// node_count * (node_count - 1) / 2 unordered pairs.
//
// # Safety
// On success `*out` owns the graph and must be released with
// `emc_graph_free`.
enum EmcStatus emc_graph_fully_connected(size_t node_count, struct EmcGraph **out);

// Number of nodes, or 0 when `graph` is null.
//
// # Safety
// `graph` must be null or a live handle from this library.
size_t emc_graph_node_count(const struct EmcGraph *graph);

// Number of candidate edges, or 0 when `graph` is null.
//
// # Safety
// `graph` must be null or a live handle from this library.
size_t emc_graph_edge_count(const struct EmcGraph *graph);

// Writes candidate edge `index`'s endpoints (lo < hi, zero-based). Edges
// are sorted lexicographically, so the index is a pure function of the
// edge set.
//
// # Safety
// `graph` must be a live handle; `lo` and `hi` must be writable.
enum EmcStatus emc_graph_edge(const struct EmcGraph *graph, size_t index, size_t *lo, size_t *hi);

// Releases a graph handle; null is ignored.
//
// # Safety
// `graph` must be null or a handle not freed before; it is invalid after.
void emc_graph_free(struct EmcGraph *graph);

// Default sampler settings: 30000 iterations, 20% burn-in, thinning step
// 120, seed 0, prior (0.05, 0.05, 0.9) over (forward, reverse, absent).
struct EmcInferOptions emc_infer_options_default(void);

// Runs the Metropolis-Hastings sampler over the candidate graph's edge
// states and returns the posterior state frequencies per edge. The data
// must have exactly one column per graph node, in node order. Equal seeds
// and inputs reproduce the table exactly.
//
// # Safety
// `data`, `graph`, and `options` must be live handles or readable structs
// from this library. On success `*out` owns the table and must be released
// with `emc_posterior_free`.
enum EmcStatus emc_infer(const struct EmcData *data,
                         const struct EmcGraph *graph,
                         const struct EmcInferOptions *options,
                         struct EmcPosterior **out);

// Number of candidate edges in the table, or 0 when `posterior` is null.
//
// # Safety
// `posterior` must be null or a live handle from this library.
size_t emc_posterior_edge_count(const struct EmcPosterior *posterior);

// Writes edge `index`'s endpoints (lo < hi, zero-based) and its three
// state probabilities to probs[0..3]: forward (lo -> hi), reverse
// (hi -> lo), absent. Rows sum to 1.
//
// # Safety
// `posterior` must be a live handle; `lo` and `hi` must be writable and
// `probs` writable for three doubles.
enum EmcStatus emc_posterior_edge(const struct EmcPosterior *posterior,
                                  size_t index,
                                  size_t *lo,
                                  size_t *hi,
                                  double *probs);

// Posterior probability that edge `index` is present (forward plus
// reverse).
//
// # Safety
// `posterior` must be a live handle and `presence` writable.
enum EmcStatus emc_posterior_presence(const struct EmcPosterior *posterior,
                                      size_t index,
                                      double *presence);

// Writes the posterior table as CSV with one-based node labels, in the
// same format as the command-line tool.
//
// # Safety
// `posterior` must be a live handle and `path` a nul-terminated string.
enum EmcStatus emc_posterior_write_csv(const struct EmcPosterior *posterior, const char *path);

// Releases a posterior handle; null is ignored.
//
// # Safety
// `posterior` must be null or a handle not freed before; it is invalid
// after.
void emc_posterior_free(struct EmcPosterior *posterior);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDGEMC_H */

#ifndef DISTNN_H
#define DISTNN_H

/* Generated from the distnn-ffi crate sources; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C API call. `Ok` is zero; everything else is a failure and
 * leaves a message for [`distnn_last_error_message`].
 */
typedef enum {
  DistnnStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  DistnnStatus_NullPointer = 1,
  /**
   * Invalid input: malformed document, unknown identifier, bad parameter.
   */
  DistnnStatus_InvalidArgument = 2,
  /**
   * A data file could not be read or decoded.
   */
  DistnnStatus_DataFile = 3,
  /**
   * Internal failure; file a bug if one of these escapes.
   */
  DistnnStatus_Internal = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  DistnnStatus_Utf8 = 5,
  /**
   * A caller-supplied buffer was too small for the string plus NUL.
   */
  DistnnStatus_BufferTooSmall = 6,
} DistnnStatus;

/**
 * Cost accounting used for the figure of merit.
 */
typedef enum {
  /**
   * Analytic multiply-accumulate counts.
   */
  DistnnCostMode_Analytic = 0,
  /**
   * Hardware block counts for the configured schedule.
   */
  DistnnCostMode_Table = 1,
} DistnnCostMode;

/**
 * Whether the figure of merit scores each layer alone or cumulatively.
 */
typedef enum {
  DistnnFomScope_PerLayer = 0,
  DistnnFomScope_Cumulative = 1,
} DistnnFomScope;

/**
 * Layer operation kind.
 */
typedef enum {
  DistnnLayerKind_Conv2d = 0,
  DistnnLayerKind_ConvTranspose2d = 1,
  DistnnLayerKind_Dense = 2,
  DistnnLayerKind_MaxPool = 3,
  DistnnLayerKind_Flatten = 4,
  DistnnLayerKind_BatchNorm = 5,
  DistnnLayerKind_Dropout = 6,
  DistnnLayerKind_Activation = 7,
} DistnnLayerKind;

/**
 * MAC-array schedule.
 */
typedef enum {
  DistnnImplementation_Parallel = 0,
  DistnnImplementation_Serial = 1,
} DistnnImplementation;

/**
 * A computed per-layer cost table.
 */
typedef struct DistnnCostTable DistnnCostTable;

/**
 * A parsed network architecture.
 */
typedef struct DistnnNetwork DistnnNetwork;

/**
 * One row of a cost table. Layer ids are fetched separately with
 * [`distnn_cost_table_row_id`].
 */
typedef struct {
  DistnnLayerKind kind;
  uint32_t out_h;
  uint32_t out_w;
  uint32_t out_c;
  /**
   * Elements in the layer's output feature map.
   */
  uint64_t dv;
  /**
   * Analytic multiply-accumulate count.
   */
  uint64_t macs;
  uint64_t blocks_parallel;
  uint64_t blocks_serial;
  /**
   * Data volume times computational cost; the split minimizes this.
   */
  double fom;
  double dv_rel;
  double cc_rel;
  double fom_rel;
} DistnnCostRow;

/**
 * Scalar hardware parameters. Obtained from [`distnn_hw_config_default`]
 * and adjusted field by field; the measured per-block energy table keeps
 * its built-in entries, with `energy_per_mac_j` covering every other
 * kernel geometry.
 */
typedef struct {
  DistnnImplementation implementation;
  double energy_per_mac_j;
  double clock_hz;
  double fps;
  double mem_overhead_factor;
  bool overhead_applied;
  bool per_mac_fallback;
} DistnnHwConfig;

/**
 * Node-segment totals up to and including the split layer.
 */
typedef struct {
  uint64_t blocks;
  double energy_j;
  double power_w;
  double latency_s;
} DistnnNodeTotals;

/**
 * A communication link. The `_point` fields drive all cost math; the
 * range fields record the registry entry they were condensed from.
 */
typedef struct {
  double energy_point_j_per_bit;
  double rate_point_bps;
  double energy_min_j_per_bit;
  double energy_max_j_per_bit;
  double rate_min_bps;
  double rate_max_bps;
} DistnnProtocol;

/**
 * Cost of shipping one boundary tensor.
 */
typedef struct {
  uint64_t bits;
  double energy_j;
  double time_s;
} DistnnCommCost;

/**
 * Energy accounting for one candidate split.
 */
typedef struct {
  uint64_t dv;
  uint64_t node_macs;
  uint64_t hub_macs;
  double e_node_j;
  double e_comm_j;
  double e_hub_j;
  double e_full_node_j;
  uint64_t comm_bits;
  double comm_time_s;
  /**
   * Node compute costs less than hub compute for the same layers.
   */
  bool node_lt_hub;
  /**
   * Node energy plus link energy beats running everything on the node.
   */
  bool dist_saves;
  /**
   * Link energy divided by the node energy it displaces.
   */
  double balance;
} DistnnFeasibility;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message from the most recent failing call on this thread. Never null;
 * empty when the last call succeeded. The pointer stays valid until the
 * next failing call on the same thread.
 */
const char *distnn_last_error_message(void);

/**
 * Parse a network architecture from a JSON document.
 */
DistnnStatus distnn_network_parse_json(const char *json, DistnnNetwork **out);

/**
 * Parse a network architecture from a JSON file on disk.
 */
DistnnStatus distnn_network_parse_file(const char *path, DistnnNetwork **out);

/**
 * Release a network handle. Null is ignored.
 */
void distnn_network_free(DistnnNetwork *net);

/**
 * Number of layers in the network; zero for a null handle.
 */
size_t distnn_network_layer_count(const DistnnNetwork *net);

/**
 * Copy the id of layer `index` into `buf` (NUL-terminated).
 */
DistnnStatus distnn_network_layer_id(const DistnnNetwork *net,
                                     size_t index,
                                     char *buf,
                                     size_t buf_len);

/**
 * Build the per-layer cost table for a network.
 */
DistnnStatus distnn_cost_table_build(const DistnnNetwork *net,
                                     DistnnCostMode mode,
                                     DistnnFomScope scope,
                                     DistnnCostTable **out);

/**
 * Release a cost table. Null is ignored.
 */
void distnn_cost_table_free(DistnnCostTable *table);

/**
 * Number of rows in the table; zero for a null handle.
 */
size_t distnn_cost_table_len(const DistnnCostTable *table);

/**
 * Copy row `index` into `out`.
 */
DistnnStatus distnn_cost_table_row(const DistnnCostTable *table, size_t index, DistnnCostRow *out);

/**
 * Copy the layer id of row `index` into `buf` (NUL-terminated).
 */
DistnnStatus distnn_cost_table_row_id(const DistnnCostTable *table,
                                      size_t index,
                                      char *buf,
                                      size_t buf_len);

/**
 * Pick the split layer: the table row with the smallest figure of merit
 * among MAC-bearing layers, earliest on ties. Writes the row index.
 */
DistnnStatus distnn_select_split(const DistnnCostTable *table, size_t *out_index);

/**
 * Built-in hardware operating point.
 */
DistnnHwConfig distnn_hw_config_default(void);

/**
 * Energy, power, and latency of the node segment ending at `split_id`.
 */
DistnnStatus distnn_node_report_totals(const DistnnNetwork *net,
                                       const DistnnCostTable *table,
                                       const char *split_id,
                                       const DistnnHwConfig *config,
                                       DistnnNodeTotals *out);

/**
 * Look up a protocol in the built-in registry by name (case-insensitive).
 */
DistnnStatus distnn_protocol_by_name(const char *name, DistnnProtocol *out);

/**
 * Link cost of shipping `dv` elements at `bits_per_element` (8, 16, or 32).
 */
DistnnStatus distnn_comm_cost(uint64_t dv,
                              uint32_t bits_per_element,
                              const DistnnProtocol *protocol,
                              DistnnCommCost *out);

/**
 * Energy accounting for splitting at `split_id` over the given link.
 * `hub_energy_per_mac_j` is the hub accelerator's per-MAC energy in joules.
 */
DistnnStatus distnn_feasibility(const DistnnNetwork *net,
                                const DistnnCostTable *table,
                                const char *split_id,
                                const DistnnHwConfig *config,
                                const DistnnProtocol *protocol,
                                double hub_energy_per_mac_j,
                                uint32_t bits_per_element,
                                DistnnFeasibility *out);

/**
 * Quantize a real weight to the 10-bit sign-magnitude word (round to
 * nearest, ties to even, saturating at the format limits).
 */
DistnnStatus distnn_quantize_weight(float value, uint16_t *out_word);

/**
 * Decode a 10-bit weight word back to its real value. Words with bits
 * above bit 9 set are rejected.
 */
DistnnStatus distnn_dequantize_weight(uint16_t word, float *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISTNN_H */

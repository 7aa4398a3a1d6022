#ifndef FDMAC_H
#define FDMAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FdmacStatus {
  FDMAC_STATUS_OK = 0,
  FDMAC_STATUS_INVALID_ARGUMENT = 1,
  FDMAC_STATUS_INFEASIBLE = 2,
  FDMAC_STATUS_IO = 3,
  FDMAC_STATUS_PANIC = 4,
  FDMAC_STATUS_NULL_POINTER = 5,
} FdmacStatus;

/**
 * Simulation parameters. Create with `fdmac_config_new`.
 */
typedef struct FdmacConfig FdmacConfig;

/**
 * Results of one run. Create with `fdmac_run`.
 */
typedef struct FdmacReport FdmacReport;

/**
 * Aggregate figures of a run.
 */
typedef struct FdmacSummary {
  double tput_total_mbps;
  double tput_down_mbps;
  double tput_up_mbps;
  double collision_prob;
  double fd_time_frac;
  double hd_time_frac;
  double mean_contention_us;
  uint64_t txops;
} FdmacSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fdmac_last_error(char *buf, size_t len);

/**
 * A configuration with every parameter at its default.
 */
struct FdmacConfig *fdmac_config_new(void);

/**
 * Parses a TOML configuration into `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FdmacStatus fdmac_config_from_toml(const char *text, struct FdmacConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void fdmac_config_free(struct FdmacConfig *cfg);

/**
 * Scheme by name: proposed, oracle, max-rate, greedy, random, half-duplex.
 *
 * # Safety
 * `cfg` must be a live handle and `name` a NUL-terminated string.
 */
enum FdmacStatus fdmac_config_set_scheme(struct FdmacConfig *cfg, const char *name);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FdmacStatus fdmac_config_set_clients(struct FdmacConfig *cfg, size_t n);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FdmacStatus fdmac_config_set_epochs(struct FdmacConfig *cfg, size_t epochs);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FdmacStatus fdmac_config_set_seed(struct FdmacConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FdmacStatus fdmac_config_set_delta_db(struct FdmacConfig *cfg, double delta_db);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FdmacStatus fdmac_config_set_sic_db(struct FdmacConfig *cfg, double sic_db);

/**
 * Frames per second per client and direction; a negative value means
 * backlogged.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum FdmacStatus fdmac_config_set_arrival_fps(struct FdmacConfig *cfg, double fps);

/**
 * Validates `cfg`, runs it and stores a new report in `*out`.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum FdmacStatus fdmac_run(const struct FdmacConfig *cfg, struct FdmacReport **out);

/**
 * # Safety
 * `report` must come from `fdmac_run` and not be used afterwards.
 */
void fdmac_report_free(struct FdmacReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum FdmacStatus fdmac_report_summary(const struct FdmacReport *report, struct FdmacSummary *out);

/**
 * Uplink transmissions and deliveries of client `k` (1-based).
 *
 * # Safety
 * `report` must be a live handle; `tx` and `ok` valid pointers.
 */
enum FdmacStatus fdmac_report_client_uplink(const struct FdmacReport *report,
                                            size_t k,
                                            uint64_t *tx,
                                            uint64_t *ok);

/**
 * Delivery ratio of `rate_mbps` at `sinr_db` under the default rate table.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FdmacStatus fdmac_pdr(double rate_mbps, double sinr_db, double *out);

/**
 * Best rate at `sinr_db` and its expected throughput (rate × delivery ratio).
 *
 * # Safety
 * `rate_mbps` and `tput_mbps` must be valid pointers.
 */
enum FdmacStatus fdmac_effective_throughput(double sinr_db, double *rate_mbps, double *tput_mbps);

/**
 * Max-min fair minimum shares for `n` clients. The arrays hold `n + 1`
 * entries indexed by client id (entry 0 unused); rates are frames/s.
 *
 * # Safety
 * All four arrays must hold `n + 1` elements.
 */
enum FdmacStatus fdmac_min_fair_shares(size_t n,
                                       const double *lambda_d,
                                       const double *lambda_u,
                                       double epoch_s,
                                       double t_bar_s,
                                       double *eta_d,
                                       double *eta_u);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDMAC_H */

#ifndef CTG_H
#define CTG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CtgMetric {
  CTG_METRIC_EUCLIDEAN = 0,
  CTG_METRIC_MANHATTAN = 1,
} CtgMetric;

typedef enum CtgNotion {
  CTG_NOTION_NONE = 0,
  CTG_NOTION_TNE = 1,
  CTG_NOTION_RHE = 2,
  CTG_NOTION_RUE = 3,
  CTG_NOTION_RSIE = 4,
  CTG_NOTION_TSE = 5,
} CtgNotion;

typedef enum CtgObjective {
  CTG_OBJECTIVE_MINIMIZE = 0,
  CTG_OBJECTIVE_MAXIMIZE = 1,
} CtgObjective;

typedef enum CtgProtocol {
  CTG_PROTOCOL_EXTERNALITY = 0,
  CTG_PROTOCOL_EXTERNALITY_OVERCHARGED = 1,
  CTG_PROTOCOL_RESIDUAL_PROPORTIONAL = 2,
  CTG_PROTOCOL_RESIDUAL_UNIFORM = 3,
  CTG_PROTOCOL_SUBGROUP = 4,
} CtgProtocol;

typedef enum CtgStatus {
  CTG_STATUS_OK = 0,
  CTG_STATUS_NULL_ARGUMENT = 1,
  CTG_STATUS_INVALID_UTF8 = 2,
  CTG_STATUS_INVALID_INPUT = 3,
  CTG_STATUS_UNKNOWN_GROUP = 4,
  CTG_STATUS_TOO_LARGE = 5,
  CTG_STATUS_UNSUPPORTED = 6,
  CTG_STATUS_INFEASIBLE = 7,
  CTG_STATUS_BUFFER_TOO_SMALL = 8,
  CTG_STATUS_INTERNAL = 9,
} CtgStatus;

// Catalog of feasible groups with their costs.
typedef struct CtgCatalog CtgCatalog;

// A set of disjoint groups covering every rider.
typedef struct CtgMatching CtgMatching;

// Per-rider cost shares aligned with one catalog.
typedef struct CtgShares CtgShares;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *ctg_last_error(void);

// Parses a catalog from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum CtgStatus ctg_catalog_from_json(const char *json, struct CtgCatalog **out);

// Builds the feasible-group catalog of a JSON instance.
//
// # Safety
// `instance_json` must be a NUL-terminated string and `out` a valid pointer.
enum CtgStatus ctg_catalog_generate(const char *instance_json,
                                    size_t capacity,
                                    double detour_factor,
                                    enum CtgMetric metric,
                                    double speed_kmh,
                                    struct CtgCatalog **out);

// # Safety
// `catalog` must come from this library and not be used afterwards.
void ctg_catalog_free(struct CtgCatalog *catalog);

// Number of groups; 0 for a null handle.
//
// # Safety
// `catalog` must be null or a live handle.
size_t ctg_catalog_len(const struct CtgCatalog *catalog);

// Number of riders; 0 for a null handle.
//
// # Safety
// `catalog` must be null or a live handle.
size_t ctg_catalog_riders(const struct CtgCatalog *catalog);

// Total cost of the group with the given members.
//
// # Safety
// `members_ptr` must point to `len` ids and `out` must be valid.
enum CtgStatus ctg_catalog_total_cost(const struct CtgCatalog *catalog,
                                      const size_t *members_ptr,
                                      size_t len,
                                      double *out);

// JSON form of the catalog; release with [`ctg_string_free`].
//
// # Safety
// `catalog` must be a live handle and `out` valid.
enum CtgStatus ctg_catalog_to_json(const struct CtgCatalog *catalog, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void ctg_string_free(char *s);

// Prices every group. `overcharge_d` is used only by the overcharged
// protocol; pass NaN for the largest group cost.
//
// # Safety
// `catalog` must be a live handle and `out` valid.
enum CtgStatus ctg_shares_build(const struct CtgCatalog *catalog,
                                enum CtgProtocol protocol,
                                double overcharge_d,
                                struct CtgShares **out);

// Share of `rider` in the group with the given members.
//
// # Safety
// Handles must be live and belong together; `members_ptr` must point to `len` ids.
enum CtgStatus ctg_shares_get(const struct CtgShares *shares,
                              const struct CtgCatalog *catalog,
                              const size_t *members_ptr,
                              size_t len,
                              size_t rider,
                              double *out);

// # Safety
// `shares` must come from this library and not be used afterwards.
void ctg_shares_free(struct CtgShares *shares);

// Best or worst matching under `notion`. `shares` may be null only for
// `CTG_NOTION_NONE`. Returns `CTG_STATUS_INFEASIBLE` when no matching
// satisfies the notion.
//
// # Safety
// Handles must be live and belong together; `out` must be valid.
enum CtgStatus ctg_solve(const struct CtgCatalog *catalog,
                         const struct CtgShares *shares,
                         enum CtgNotion notion,
                         enum CtgObjective objective,
                         struct CtgMatching **out);

// Number of groups in the matching; 0 for a null handle.
//
// # Safety
// `matching` must be null or a live handle.
size_t ctg_matching_len(const struct CtgMatching *matching);

// Total cost of the matching; NaN for a null handle.
//
// # Safety
// `matching` must be null or a live handle.
double ctg_matching_objective(const struct CtgMatching *matching);

// Copies the sorted members of group `k` into `buf`. `out_len` receives the
// group size even when `cap` is too small.
//
// # Safety
// `buf` must hold `cap` ids and `out_len` must be valid.
enum CtgStatus ctg_matching_group(const struct CtgMatching *matching,
                                  size_t k,
                                  size_t *buf,
                                  size_t cap,
                                  size_t *out_len);

// # Safety
// `matching` must come from this library and not be used afterwards.
void ctg_matching_free(struct CtgMatching *matching);

// Checks a matching against a notion; `CTG_NOTION_NONE` checks only that it
// is a valid partition.
//
// # Safety
// Handles must be live and belong together; `out` must be valid.
enum CtgStatus ctg_verify(const struct CtgCatalog *catalog,
                          const struct CtgShares *shares,
                          const struct CtgMatching *matching,
                          enum CtgNotion notion,
                          bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTG_H */

#ifndef UNFITTED_H
#define UNFITTED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every entry point.
 */
typedef enum UfStatus {
  UF_STATUS_OK = 0,
  UF_STATUS_NULL_POINTER = 1,
  UF_STATUS_INVALID_ARGUMENT = 2,
  UF_STATUS_IO = 3,
  /**
   * Mesh does not resolve the geometry, or the deformation degenerates.
   */
  UF_STATUS_GEOMETRY = 4,
  /**
   * Not SPD, or the iterative solver did not converge.
   */
  UF_STATUS_SOLVER = 5,
  /**
   * A study stopped early. The report holds the completed levels.
   */
  UF_STATUS_STUDY_INCOMPLETE = 6,
  UF_STATUS_OUT_OF_RANGE = 7,
  UF_STATUS_INTERNAL = 8,
  UF_STATUS_PANIC = 9,
} UfStatus;

/**
 * Error norm selector for [`uf_report_eoc`].
 */
typedef enum UfNorm {
  UF_NORM_L2 = 0,
  UF_NORM_H1_SEMI = 1,
  UF_NORM_L2_BOUNDARY = 2,
  UF_NORM_INTERFACE_DISTANCE = 3,
} UfNorm;

/**
 * Study configuration handle.
 */
typedef struct UfConfig UfConfig;

/**
 * Mesh handle.
 */
typedef struct UfMesh UfMesh;

/**
 * Finished study handle.
 */
typedef struct UfReport UfReport;

/**
 * One refinement level of a study.
 */
typedef struct UfLevel {
  size_t level;
  double h_max;
  size_t elements;
  size_t active_elements;
  size_t cut_elements;
  size_t ndof;
  double err_l2;
  double err_h1;
  double err_l2_boundary;
  double interface_distance;
  double max_displacement;
  size_t iterations;
  double residual;
  double solve_seconds;
} UfLevel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated version string of the library.
 */
const char *uf_version(void);

/**
 * Copy the last error message of the calling thread into `buf`.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t uf_last_error_message(char *buf, size_t len);

/**
 * New configuration with default values (ring, k = 2, 3 levels).
 */
struct UfConfig *uf_config_new(void);

/**
 * # Safety
 * `config` must be null or a handle from [`uf_config_new`] not yet freed.
 */
void uf_config_free(struct UfConfig *config);

/**
 * Set one option by name, with the same keys as the config file
 * (`geometry`, `order`, `levels`, `deformation`, `lambda_scale`, ...).
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum UfStatus uf_config_set(struct UfConfig *config, const char *key, const char *value);

/**
 * Apply a `key = value` file on top of the current values.
 *
 * # Safety
 * `config` must be a live handle; `path` a NUL-terminated string.
 */
enum UfStatus uf_config_load(struct UfConfig *config, const char *path);

/**
 * Run the study described by `config`. On `Ok` and `StudyIncomplete`,
 * `*out` receives a report handle; otherwise `*out` is null.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum UfStatus uf_study_run(const struct UfConfig *config, struct UfReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`uf_study_run`] not yet freed.
 */
void uf_report_free(struct UfReport *report);

/**
 * Number of completed levels; 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t uf_report_num_levels(const struct UfReport *report);

/**
 * Copy level `index` into `*out`.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum UfStatus uf_report_level(const struct UfReport *report, size_t index, struct UfLevel *out);

/**
 * EOC between levels `pair` and `pair + 1` for the chosen norm. A
 * saturated (zero) error gives NaN.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum UfStatus uf_report_eoc(const struct UfReport *report,
                            enum UfNorm norm,
                            size_t pair,
                            double *out);

/**
 * Copy the CSV report into `buf`; returns its full length, 0 for a null
 * handle.
 *
 * # Safety
 * `report` must be null or a live handle; `buf` null or valid for `len` bytes.
 */
size_t uf_report_csv(const struct UfReport *report, char *buf, size_t len);

/**
 * Write `<tag>.csv` and `<tag>.svg` into directory `dir`.
 *
 * # Safety
 * `report` must be a live handle; `dir` a NUL-terminated string.
 */
enum UfStatus uf_report_write(const struct UfReport *report, const char *dir);

/**
 * Mesh of refinement level `level` for a built-in geometry
 * (`ring`, `ellipse` or `circle`).
 *
 * # Safety
 * `geometry` must be a NUL-terminated string and `out` a valid pointer.
 */
enum UfStatus uf_mesh_new(const char *geometry, size_t level, struct UfMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from [`uf_mesh_new`] not yet freed.
 */
void uf_mesh_free(struct UfMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t uf_mesh_num_vertices(const struct UfMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t uf_mesh_num_elements(const struct UfMesh *mesh);

/**
 * Copy vertex coordinates as `x0, y0, x1, y1, ...`; `len` counts doubles
 * and must be at least `2 * uf_mesh_num_vertices`.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for `len` doubles.
 */
enum UfStatus uf_mesh_vertices(const struct UfMesh *mesh, double *out, size_t len);

/**
 * Copy counterclockwise element vertex indices, three per element; `len`
 * must be at least `3 * uf_mesh_num_elements`.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for `len` values.
 */
enum UfStatus uf_mesh_elements(const struct UfMesh *mesh, size_t *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNFITTED_H */

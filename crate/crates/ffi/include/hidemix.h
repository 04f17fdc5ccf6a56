#ifndef HIDEMIX_H
#define HIDEMIX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define HIDEMIX_OK 0

#define HIDEMIX_NULL_POINTER 1

#define HIDEMIX_INVALID_ARGUMENT 2

#define HIDEMIX_NUMERICAL 3

#define HIDEMIX_INTERNAL 4

/**
 * Space pair selector: lowest order.
 */
#define HIDEMIX_PAIR_RT0_DG0 0

/**
 * Space pair selector: linear.
 */
#define HIDEMIX_PAIR_RT1_DG1 1

#define HIDEMIX_METHOD_EXTENDED 0

#define HIDEMIX_METHOD_STANDARD 1

/**
 * A triangulated rectangle.
 */
typedef struct HidemixMesh HidemixMesh;

/**
 * Result of a spatial convergence study.
 */
typedef struct HidemixReport HidemixReport;

/**
 * Scalar callback `g(s, user_data)`.
 */
typedef double (*HidemixScalarFn)(double s, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread (empty after a success).
 * Valid until the next call into the library on this thread.
 */
const char *hidemix_last_error(void);

/**
 * Structured `nx × ny` mesh of `[x0, x1] × [y0, y1]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
int32_t hidemix_mesh_structured(uintptr_t nx,
                                uintptr_t ny,
                                double x0,
                                double y0,
                                double x1,
                                double y1,
                                struct HidemixMesh **out);

/**
 * Uniform red refinement: a new mesh with four times the triangles.
 *
 * # Safety
 * `mesh` must come from this library; `out` must be valid for writes.
 */
int32_t hidemix_mesh_refine(const struct HidemixMesh *mesh, struct HidemixMesh **out);

/**
 * Vertex, edge and triangle counts. Any output pointer may be null.
 *
 * # Safety
 * `mesh` must come from this library; non-null outputs must be writable.
 */
int32_t hidemix_mesh_counts(const struct HidemixMesh *mesh,
                            uintptr_t *vertices,
                            uintptr_t *edges,
                            uintptr_t *triangles);

/**
 * Longest edge length.
 *
 * # Safety
 * `mesh` must come from this library; `out` must be valid for writes.
 */
int32_t hidemix_mesh_size(const struct HidemixMesh *mesh, double *out);

/**
 * Frees a mesh. Null is a no-op.
 *
 * # Safety
 * `mesh` must come from this library and not be used afterwards.
 */
void hidemix_mesh_free(struct HidemixMesh *mesh);

/**
 * Composite midpoint error `∫₀^{nk} g − k Σ g(midpoints)` over `n` panels.
 *
 * # Safety
 * `g` must be safe to call with `user_data`; `out` must be writable.
 */
int32_t hidemix_quadrature_error(HidemixScalarFn g,
                                 void *user_data,
                                 uintptr_t n,
                                 double k,
                                 double *out);

/**
 * The same error computed from the second derivative `g2` of the integrand.
 *
 * # Safety
 * As for [`hidemix_quadrature_error`].
 */
int32_t hidemix_peano_error(HidemixScalarFn g2,
                            void *user_data,
                            uintptr_t n,
                            double k,
                            double *out);

/**
 * Spatial convergence study on a catalog problem with `k = coupling · h`
 * and final time 1.
 *
 * # Safety
 * `problem` must be a NUL-terminated string; `out` must be writable.
 */
int32_t hidemix_convergence_study(const char *problem,
                                  int32_t pair,
                                  int32_t method,
                                  uintptr_t base_cells,
                                  uintptr_t levels,
                                  double coupling,
                                  uintptr_t workers,
                                  struct HidemixReport **out);

/**
 * Number of levels in a report.
 *
 * # Safety
 * `report` must come from this library.
 */
int32_t hidemix_report_level_count(const struct HidemixReport *report, uintptr_t *out);

/**
 * `max_n ‖u − U‖` on level `level`.
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
int32_t hidemix_report_error_u(const struct HidemixReport *report, uintptr_t level, double *out);

/**
 * Observed order of the `u` error between `level - 1` and `level`;
 * NaN on level 0 or when an error is at round-off.
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
int32_t hidemix_report_order_u(const struct HidemixReport *report, uintptr_t level, double *out);

/**
 * The report as CSV. Free the string with [`hidemix_string_free`].
 *
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
int32_t hidemix_report_csv(const struct HidemixReport *report, char **out);

/**
 * Frees a report. Null is a no-op.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void hidemix_report_free(struct HidemixReport *report);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hidemix_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HIDEMIX_H */

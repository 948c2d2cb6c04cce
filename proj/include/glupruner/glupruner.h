#ifndef GLUPRUNER_H
#define GLUPRUNER_H

/*
 * C interface to the glupruner library: dependency-aware (DaSS), Wanda and
 * magnitude pruning of GLU MLP weight triplets, with unstructured and N:M
 * masks, calibration statistics, reconstruction diagnostics and an N:M
 * compressed matrix-vector kernel.
 *
 * Conventions:
 *  - Every fallible call returns gp_status. On failure a message is kept
 *    per thread and is readable through gp_last_error().
 *  - Objects are opaque handles released with their *_free function.
 *    Passing NULL to a *_free function is a no-op.
 *  - Strings returned through char** are owned by the caller and released
 *    with gp_string_free().
 *  - Matrices are row-major float32.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GLUPRUNER_BUILD)
#    define GP_API __declspec(dllexport)
#  else
#    define GP_API __declspec(dllimport)
#  endif
#else
#  define GP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gp_status {
    GP_OK = 0,
    GP_ERR_IO = 1,
    GP_ERR_FORMAT = 2,
    GP_ERR_UNSUPPORTED_DTYPE = 3,
    GP_ERR_UNSUPPORTED_SHAPE = 4,
    GP_ERR_DATA = 5,
    GP_ERR_DIMENSION = 6,
    GP_ERR_SHAPE = 7,
    GP_ERR_CONFIG = 8,
    GP_ERR_CONSTRAINT = 9,
    GP_ERR_EMPTY_CALIBRATION = 10,
    GP_ERR_INVALID_ARGUMENT = 11,
    GP_ERR_NOT_FOUND = 12,
    GP_ERR_INTERNAL = 13
} gp_status;

typedef enum gp_variant { GP_SWIGLU = 0, GP_GEGLU = 1, GP_REGLU = 2 } gp_variant;

typedef enum gp_metric { GP_METRIC_MAGNITUDE = 0, GP_METRIC_WANDA = 1, GP_METRIC_DASS = 2 } gp_metric;

/*
 * Orientation of MLP tensors inside a tensor file.
 * GP_LAYOUT_MATH:   gate/up are (d_hidden, d_int), down is (d_int, d_hidden).
 * GP_LAYOUT_LINEAR: transposed, as stored by nn.Linear checkpoints
 *                   (gate/up (d_int, d_hidden), down (d_hidden, d_int)).
 */
typedef enum gp_layout { GP_LAYOUT_MATH = 0, GP_LAYOUT_LINEAR = 1 } gp_layout;

typedef enum gp_projection { GP_GATE = 0, GP_UP = 1, GP_DOWN = 2 } gp_projection;

typedef struct gp_prune_config {
    gp_variant variant;
    gp_metric metric;
    double alpha;    /* DaSS group importance strength, default 0.5 */
    double sparsity; /* unstructured fraction, used when nm_m == 0 */
    uint32_t nm_n;   /* zeros per window */
    uint32_t nm_m;   /* window length; 0 selects unstructured */
    uint64_t seed;
} gp_prune_config;

typedef struct gp_synthetic_spec {
    uint64_t tokens;
    uint64_t dim;
    uint64_t outliers;
    double scale;
    uint64_t seed;
    uint64_t batch_tokens; /* 0 selects 2048 */
} gp_synthetic_spec;

typedef struct gp_tensor_file gp_tensor_file;
typedef struct gp_calib_source gp_calib_source;
typedef struct gp_mlp gp_mlp;
typedef struct gp_calib_stats gp_calib_stats;
typedef struct gp_prune_result gp_prune_result;
typedef struct gp_nm_matrix gp_nm_matrix;

GP_API const char* gp_version(void);
GP_API const char* gp_last_error(void);
GP_API const char* gp_status_name(gp_status status);
GP_API void gp_string_free(char* s);
/* Caps worker threads for this process; 0 defers to GLUPRUNER_THREADS. */
GP_API void gp_set_threads(size_t threads);

/* ---- tensor files (safetensors) ---- */
GP_API gp_status gp_tensor_file_new(gp_tensor_file** out);
GP_API gp_status gp_tensor_file_load(const char* path, gp_tensor_file** out);
GP_API gp_status gp_tensor_file_load_memory(const uint8_t* bytes, size_t len, gp_tensor_file** out);
GP_API gp_status gp_tensor_file_save(const gp_tensor_file* tf, const char* path);
GP_API void gp_tensor_file_free(gp_tensor_file* tf);
GP_API size_t gp_tensor_file_count(const gp_tensor_file* tf);
/* Names are sorted; the pointer stays valid until the file is modified. */
GP_API const char* gp_tensor_file_name(const gp_tensor_file* tf, size_t index);
GP_API gp_status gp_tensor_file_get(const gp_tensor_file* tf, const char* name, size_t* rows, size_t* cols,
                                    const float** data);
GP_API gp_status gp_tensor_file_put(gp_tensor_file* tf, const char* name, size_t rows, size_t cols,
                                    const float* data);
/* Copies every tensor and metadata entry of src into dst, replacing clashes. */
GP_API gp_status gp_tensor_file_merge(gp_tensor_file* dst, const gp_tensor_file* src);
GP_API gp_status gp_tensor_file_set_metadata(gp_tensor_file* tf, const char* key, const char* value);

/* ---- calibration sources ---- */
/* Batches are the tensors "<prefix>.<k>" for k = 0, 1, ... in numeric order. */
GP_API gp_status gp_calib_source_from_file(const gp_tensor_file* tf, const char* prefix, gp_calib_source** out);
GP_API gp_status gp_calib_source_synthetic(const gp_synthetic_spec* spec, gp_calib_source** out);
GP_API void gp_calib_source_free(gp_calib_source* src);
/* Writes the batches as "<prefix>.<k>" tensors. */
GP_API gp_status gp_calib_source_store(const gp_calib_source* src, gp_tensor_file* dst, const char* prefix);

/* ---- MLP triplets ---- */
GP_API gp_status gp_mlp_new(size_t d_hidden, size_t d_int, const float* gate, const float* up, const float* down,
                            gp_variant variant, gp_mlp** out);
GP_API gp_status gp_mlp_from_file(const gp_tensor_file* tf, const char* gate, const char* up, const char* down,
                                  gp_variant variant, gp_layout layout, gp_mlp** out);
GP_API void gp_mlp_free(gp_mlp* mlp);
GP_API size_t gp_mlp_d_hidden(const gp_mlp* mlp);
GP_API size_t gp_mlp_d_int(const gp_mlp* mlp);
/* Forward pass: x is (tokens, d_hidden); y must hold tokens*d_int floats and
 * z tokens*d_hidden floats (either may be NULL). */
GP_API gp_status gp_mlp_forward(const gp_mlp* mlp, const float* x, size_t tokens, float* y, float* z);

/* ---- calibration statistics ---- */
GP_API gp_status gp_calibrate(const gp_mlp* mlp, const gp_calib_source* src, gp_calib_stats** out);
GP_API gp_status gp_calib_stats_new(const double* input_norms, size_t d_hidden, const double* intermediate_norms,
                                    size_t d_int, uint64_t token_count, gp_calib_stats** out);
GP_API void gp_calib_stats_free(gp_calib_stats* stats);
GP_API gp_status gp_calib_stats_get(const gp_calib_stats* stats, const double** input_norms, size_t* d_hidden,
                                    const double** intermediate_norms, size_t* d_int, uint64_t* token_count);
/* Stores "<label>.input_norms" (1 x d_hidden) and "<label>.intermediate_norms"
 * (1 x d_int), plus "<label>.token_count" metadata. */
GP_API gp_status gp_calib_stats_store(const gp_calib_stats* stats, gp_tensor_file* dst, const char* label);
GP_API gp_status gp_calib_stats_load(const gp_tensor_file* tf, const char* label, gp_calib_stats** out);
GP_API gp_status gp_calib_stats_report_json(const gp_calib_stats* stats, char** json);

/* ---- pruning ---- */
GP_API void gp_prune_config_init(gp_prune_config* cfg);
GP_API gp_status gp_prune_mlp(const gp_mlp* mlp, const gp_calib_stats* stats, const gp_prune_config* cfg,
                              gp_prune_result** out);
GP_API void gp_prune_result_free(gp_prune_result* result);
/* Keep mask (1 kept, 0 pruned) in math-layout orientation. */
GP_API gp_status gp_prune_result_mask(const gp_prune_result* result, gp_projection projection,
                                      const uint8_t** keep, size_t* rows, size_t* cols);
GP_API gp_status gp_prune_result_weights(const gp_prune_result* result, gp_projection projection,
                                         const float** data, size_t* rows, size_t* cols);
/* Writes pruned weights under the given names in the given layout; when
 * with_masks is non-zero also writes "<name>.mask" 0/1 tensors. */
GP_API gp_status gp_prune_result_store(const gp_prune_result* result, gp_tensor_file* dst, const char* gate,
                                       const char* up, const char* down, gp_layout layout, int with_masks);
/* Masks, realized sparsity, constraint violations and dependency alignment. */
GP_API gp_status gp_prune_result_report_json(const gp_prune_result* result, int per_neuron, char** json);
/* Reconstruction error of the MLP output over every batch of src. */
GP_API gp_status gp_evaluate(const gp_mlp* dense, const gp_prune_result* result, const gp_calib_source* src,
                             char** json);
/* Importance scores for cfg's metric, written as "<name>.scores" in layout. */
GP_API gp_status gp_scores_store(const gp_mlp* mlp, const gp_calib_stats* stats, const gp_prune_config* cfg,
                                 gp_tensor_file* dst, const char* gate, const char* up, const char* down,
                                 gp_layout layout);
/* Wanda on a single (d_out, d_in) linear weight. pruned and keep receive
 * d_out*d_in entries each (either may be NULL). */
GP_API gp_status gp_prune_linear_wanda(const float* w, size_t d_out, size_t d_in, const double* input_norms,
                                       double sparsity, uint32_t nm_n, uint32_t nm_m, float* pruned,
                                       uint8_t* keep);

/* ---- N:M compressed execution ---- */
GP_API gp_status gp_nm_encode(const float* w, const uint8_t* keep, size_t rows, size_t cols, uint32_t n,
                              uint32_t m, gp_nm_matrix** out);
/* Compresses one projection of an N:M result. Gate/up are encoded as
 * (d_hidden, d_int) and down as its transpose (d_hidden, d_int), the
 * orientations in which their windows run along rows. */
GP_API gp_status gp_prune_result_encode(const gp_prune_result* result, gp_projection projection,
                                        gp_nm_matrix** out);
GP_API void gp_nm_free(gp_nm_matrix* c);
GP_API gp_status gp_nm_shape(const gp_nm_matrix* c, size_t* rows, size_t* cols, uint32_t* n, uint32_t* m);
GP_API gp_status gp_nm_values(const gp_nm_matrix* c, const float** values, size_t* count);
GP_API gp_status gp_nm_decode(const gp_nm_matrix* c, float* out, size_t len);
GP_API gp_status gp_nm_spmv(const gp_nm_matrix* c, const float* x, size_t x_len, float* y, size_t y_len);
GP_API gp_status gp_nm_bench(const gp_nm_matrix* c, size_t iters, char** json);
GP_API gp_status gp_nm_save_index(const gp_nm_matrix* c, const char* path);
GP_API gp_status gp_nm_load(const char* index_path, const float* values, size_t count, gp_nm_matrix** out);

#ifdef __cplusplus
}
#endif

#endif /* GLUPRUNER_H */

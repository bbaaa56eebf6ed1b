/* C interface to the stochastic video prediction library.
 *
 * Every function returns an svp_status; on failure svp_last_error() holds a
 * message for the calling thread. Handles are opaque and owned by the caller
 * once returned. Strings returned through char** are released with
 * svp_string_free. Frame buffers are float32 in [0, 1], laid out
 * [..., C, H, W] row-major.
 */
#ifndef SVP_H
#define SVP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SVP_API __declspec(dllexport)
#else
#define SVP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum svp_status {
  SVP_OK = 0,
  SVP_ERR_INVALID_ARGUMENT = 1,
  SVP_ERR_CONFIG = 2,
  SVP_ERR_IO = 3,
  SVP_ERR_CHECKSUM = 4,
  SVP_ERR_VERSION = 5,
  SVP_ERR_INCOMPATIBLE = 6,
  SVP_ERR_NUMERIC = 7,
  SVP_ERR_SHAPE = 8,
  SVP_ERR_INTERNAL = 9
} svp_status;

typedef enum svp_decode_mask {
  SVP_DECODE_JOINT = 0,
  SVP_DECODE_APPEARANCE_ONLY = 1, /* motion latent zeroed */
  SVP_DECODE_MOTION_ONLY = 2      /* appearance latent zeroed */
} svp_decode_mask;

typedef struct svp_dataset svp_dataset;
typedef struct svp_trainer svp_trainer;

SVP_API const char* svp_version(void);
SVP_API const char* svp_last_error(void);
SVP_API const char* svp_status_name(svp_status status);
SVP_API void svp_string_free(char* s);

/* Configuration: parses a (possibly partial) run config, fills defaults and
 * validates. The normalised JSON is returned when `normalized` is non-null. */
SVP_API svp_status svp_config_normalize(const char* config_json, char** normalized);

/* Datasets. `spec_json` holds {"kind": "sprites"|"panning", "seed", "n", "t",
 * "size", ...generator parameters}. */
SVP_API svp_status svp_dataset_generate(const char* spec_json, svp_dataset** out);
SVP_API svp_status svp_dataset_load(const char* path, svp_dataset** out);
SVP_API svp_status svp_dataset_save(const svp_dataset* ds, const char* path);
/* shape receives {N, T, C, H, W}. */
SVP_API svp_status svp_dataset_shape(const svp_dataset* ds, int64_t shape[5]);
SVP_API svp_status svp_dataset_metadata(const svp_dataset* ds, char** json);
/* Copies `count` frames of sequence `index` starting at frame `first`. */
SVP_API svp_status svp_dataset_frames(const svp_dataset* ds, int64_t index, int64_t first,
                                      int64_t count, float* out);
SVP_API svp_status svp_dataset_split(const svp_dataset* ds, const double ratios[3],
                                     svp_dataset** train, svp_dataset** val,
                                     svp_dataset** test);
SVP_API void svp_dataset_free(svp_dataset* ds);

/* Model + optimiser state. */
SVP_API svp_status svp_trainer_create(const char* config_json, svp_trainer** out);
/* expected_model_json may be null; otherwise the checkpoint's model section
 * must match it (mode included). */
SVP_API svp_status svp_trainer_load(const char* path, const char* expected_model_json,
                                    svp_trainer** out);
SVP_API svp_status svp_trainer_save(const svp_trainer* tr, const char* path);
SVP_API svp_status svp_trainer_config(const svp_trainer* tr, char** json);
SVP_API svp_status svp_trainer_step(const svp_trainer* tr, int64_t* step);
/* Runs `steps` updates; metrics_path (JSON lines, appended) and
 * checkpoint_path may be null. val may be null. */
SVP_API svp_status svp_trainer_train(svp_trainer* tr, const svp_dataset* train,
                                     const svp_dataset* val, int64_t steps,
                                     const char* metrics_path, const char* checkpoint_path);
SVP_API void svp_trainer_free(svp_trainer* tr);

/* Evaluation; eval_json overrides the checkpoint's eval section. report_json
 * and curves_tsv may be null. */
SVP_API svp_status svp_evaluate(svp_trainer* tr, const svp_dataset* ds, const char* eval_json,
                                char** report_json, char** curves_tsv);

/* Generates `horizon` frames for each of `batch` conditioning clips
 * cond [batch, k, C, H, W] into out [batch, horizon, C, H, W]. */
SVP_API svp_status svp_rollout(svp_trainer* tr, const float* cond, int64_t batch, int64_t k,
                               int64_t horizon, uint64_t seed, svp_decode_mask mask,
                               float* out);
/* Flow decoded from the posterior recurrence over frames [t, C, H, W];
 * out is [t - 1, 2, H, W]. */
SVP_API svp_status svp_posterior_flow(svp_trainer* tr, const float* frames, int64_t t,
                                      float* out);

/* Images. frames are [rows * cols, C, H, W] tiled row-major. */
SVP_API svp_status svp_write_frame_grid_png(const char* path, const float* frames, int64_t rows,
                                            int64_t cols, int64_t c, int64_t h, int64_t w);
/* frames are [n, rows, C, H, W]: frame i of the animation stacks the rows. */
SVP_API svp_status svp_write_gif(const char* path, const float* frames, int64_t n, int64_t rows,
                                 int64_t c, int64_t h, int64_t w, int delay_cs);
/* flows are [n, 2, H, W], drawn side by side with a shared scale. */
SVP_API svp_status svp_write_flow_png(const char* path, const float* flows, int64_t n,
                                      int64_t h, int64_t w);
/* values are [n_series, length]; series 0 black, then blue, red, green. */
SVP_API svp_status svp_write_plot_png(const char* path, const double* values, int64_t n_series,
                                      int64_t length);

#ifdef __cplusplus
}
#endif

#endif /* SVP_H */

#ifndef HOICUE_H
#define HOICUE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by every function.
 */
typedef enum HoiStatus {
  HOI_STATUS_OK = 0,
  /**
   * A required pointer was NULL or a string was not UTF-8.
   */
  HOI_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Parameter outside its domain or failed precondition.
   */
  HOI_STATUS_DOMAIN = 2,
  HOI_STATUS_IO = 3,
  /**
   * Malformed input data.
   */
  HOI_STATUS_FORMAT = 4,
  /**
   * Inputs that disagree with each other, such as mask and frame sizes.
   */
  HOI_STATUS_CONTRACT = 5,
  HOI_STATUS_CONFIG = 6,
  /**
   * Inference backend failure.
   */
  HOI_STATUS_BACKEND = 7,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  HOI_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * Internal panic. The library state is still usable.
   */
  HOI_STATUS_PANIC = 9,
} HoiStatus;

/**
 * An RGB frame.
 */
typedef struct HoiFrame HoiFrame;

/**
 * A gaze track: fixations in normalized coordinates, ordered by time.
 */
typedef struct HoiGazeTrack HoiGazeTrack;

/**
 * Region masks of one frame.
 */
typedef struct HoiMaskSet HoiMaskSet;

/**
 * Gaze trail drawing parameters. Colors are RGB.
 */
typedef struct HoiGazeConfig {
  size_t window;
  uint32_t circle_radius;
  uint32_t line_width;
  uint8_t recent_color[3];
  uint8_t oldest_color[3];
} HoiGazeConfig;

/**
 * Set-of-mark drawing parameters.
 */
typedef struct HoiSomConfig {
  double fill_alpha;
  uint64_t palette_seed;
  bool draw_contours;
  uint32_t contour_width;
} HoiSomConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *hoi_last_error_message(void);

/**
 * Library version, a static string.
 */
const char *hoi_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void hoi_string_free(char *s);

/**
 * Selection probabilities of frames `0..sequence_length-1` (the final frame is
 * always kept and has no weight). Writes `sequence_length - 1` values.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
enum HoiStatus hoi_compute_weights(size_t sequence_length,
                                   double lambda,
                                   double *out,
                                   size_t out_len);

/**
 * Draws a sorted frame index plan that always ends with the final frame.
 * `*out_len` receives the plan length, also when the buffer is too small.
 *
 * # Safety
 * `out_indices` must point to `capacity` writable elements; `out_len` must be valid.
 */
enum HoiStatus hoi_draw_plan(size_t sequence_length,
                             double lambda,
                             size_t sample_size,
                             uint64_t seed,
                             size_t *out_indices,
                             size_t capacity,
                             size_t *out_len);

/**
 * Creates a frame from packed RGB rows (`width * height * 3` bytes).
 *
 * # Safety
 * `rgb` must point to `len` readable bytes; `out` must be valid.
 */
enum HoiStatus hoi_frame_new(uint32_t width,
                             uint32_t height,
                             const uint8_t *rgb,
                             size_t len,
                             double timestamp,
                             struct HoiFrame **out);

/**
 * Loads a PNG or JPEG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum HoiStatus hoi_frame_load(const char *path, double timestamp, struct HoiFrame **out);

/**
 * # Safety
 * `frame` and `path` must be valid.
 */
enum HoiStatus hoi_frame_save_png(const struct HoiFrame *frame, const char *path);

/**
 * # Safety
 * `frame` must be a valid handle.
 */
uint32_t hoi_frame_width(const struct HoiFrame *frame);

/**
 * # Safety
 * `frame` must be a valid handle.
 */
uint32_t hoi_frame_height(const struct HoiFrame *frame);

/**
 * Copies the packed RGB pixels into `buf`, which needs `width * height * 3` bytes.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum HoiStatus hoi_frame_copy_pixels(const struct HoiFrame *frame, uint8_t *buf, size_t len);

/**
 * Hex SHA-256 of the raw pixel buffer, as a newly allocated string.
 *
 * # Safety
 * `frame` and `out` must be valid.
 */
enum HoiStatus hoi_frame_digest(const struct HoiFrame *frame, char **out);

/**
 * # Safety
 * `frame` must be NULL or a handle not yet freed.
 */
void hoi_frame_free(struct HoiFrame *frame);

/**
 * Builds a track from parallel arrays of timestamps (seconds) and normalized
 * coordinates. Fixations are sorted by time.
 *
 * # Safety
 * The three arrays must each hold `count` elements.
 */
enum HoiStatus hoi_gaze_track_new(const char *clip_id,
                                  const double *timestamps,
                                  const double *xs,
                                  const double *ys,
                                  size_t count,
                                  struct HoiGazeTrack **out);

/**
 * Loads a gaze CSV (`timestamp,x,y` with a header row).
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be valid.
 */
enum HoiStatus hoi_gaze_track_load_csv(const char *path,
                                       const char *clip_id,
                                       struct HoiGazeTrack **out);

/**
 * # Safety
 * `track` must be a valid handle.
 */
size_t hoi_gaze_track_len(const struct HoiGazeTrack *track);

/**
 * # Safety
 * `track` must be NULL or a handle not yet freed.
 */
void hoi_gaze_track_free(struct HoiGazeTrack *track);

/**
 * Parses an RLE mask document (`{"width","height","regions":[{"id","counts"}]}`).
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be valid.
 */
enum HoiStatus hoi_mask_set_from_json(const char *json, struct HoiMaskSet **out);

/**
 * Loads masks from an RLE `.json` file or an indexed `.png` image.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
enum HoiStatus hoi_mask_set_load(const char *path, struct HoiMaskSet **out);

/**
 * # Safety
 * `masks` must be a valid handle.
 */
size_t hoi_mask_set_len(const struct HoiMaskSet *masks);

/**
 * # Safety
 * `masks` must be NULL or a handle not yet freed.
 */
void hoi_mask_set_free(struct HoiMaskSet *masks);

/**
 * Default gaze trail parameters.
 */
struct HoiGazeConfig hoi_gaze_config_default(void);

/**
 * Default set-of-mark parameters.
 */
struct HoiSomConfig hoi_som_config_default(void);

/**
 * Draws the gaze trail up to the frame's timestamp onto a copy of `frame`.
 * `config` may be NULL for the defaults.
 *
 * # Safety
 * Handles must be valid; `out` receives a new frame handle.
 */
enum HoiStatus hoi_render_gaze_trail(const struct HoiFrame *frame,
                                     const struct HoiGazeTrack *track,
                                     const struct HoiGazeConfig *config,
                                     struct HoiFrame **out);

/**
 * Blends region colors and contours onto a copy of `frame`. `config` may be
 * NULL for the defaults.
 *
 * # Safety
 * Handles must be valid; `out` receives a new frame handle.
 */
enum HoiStatus hoi_apply_som_overlay(const struct HoiFrame *frame,
                                     const struct HoiMaskSet *masks,
                                     const struct HoiSomConfig *config,
                                     struct HoiFrame **out);

/**
 * Builds the prompt for a question given as a manifest JSON line
 * (`id`, `clip_id`, `question`, `candidates`, `correct_index`).
 * `strategy` is one of `vllm_only`, `som`, `gaze`, `som_gaze`.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` receives a string to free with `hoi_string_free`.
 */
enum HoiStatus hoi_build_prompt(const char *record_json, const char *strategy, char **out);

/**
 * Maps model text to a candidate. `*out_index` is the chosen index, or -1
 * when no candidate matches.
 *
 * # Safety
 * `candidates` must hold `count` NUL-terminated strings.
 */
enum HoiStatus hoi_parse_answer(const char *raw_text,
                                const char *const *candidates,
                                size_t count,
                                int64_t *out_index);

/**
 * Evaluates a suite directory under a run configuration given as JSON (the
 * shape printed by `hoicue run --dump-config`; omitted fields take their
 * defaults). Writes the report JSON to `*out_report`.
 *
 * # Safety
 * Strings must be NUL-terminated; `out_report` receives a string to free with `hoi_string_free`.
 */
enum HoiStatus hoi_run_eval_json(const char *suite_dir, const char *config_json, char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOICUE_H */

/* auscult: seed-deterministic cardiac audio augmentation toolkit.
 *
 * Plain C interface over the C++ core.  Every function that can fail returns
 * an auscult_status; AUSCULT_OK means success and anything else leaves a
 * human-readable message in auscult_last_error() (thread-local).  Objects
 * returned through out-parameters are owned by the caller and released with
 * the matching _free function.
 */

#ifndef AUSCULT_H
#define AUSCULT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AUSCULT_API __declspec(dllexport)
#else
#define AUSCULT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum auscult_status {
    AUSCULT_OK = 0,
    AUSCULT_E_INVALID_ARGUMENT = 1,
    AUSCULT_E_INVALID_BAND = 2,
    AUSCULT_E_IO = 3,
    AUSCULT_E_FORMAT = 4,
    AUSCULT_E_CONFIG = 5,
    AUSCULT_E_INTERNAL = 6,
} auscult_status;

AUSCULT_API const char* auscult_version(void);

/* Message describing the most recent failure on this thread; never NULL. */
AUSCULT_API const char* auscult_last_error(void);

/* ------------------------------------------------------------------ */
/* signals                                                             */

typedef struct auscult_signal auscult_signal;

AUSCULT_API auscult_status auscult_signal_create(const double* samples, size_t count,
                                                 double rate_hz, auscult_signal** out);
AUSCULT_API auscult_status auscult_signal_load_wav(const char* path, auscult_signal** out);

/* float32 != 0 writes IEEE float samples (bit-exact round trip);
 * 0 writes 16-bit PCM. */
AUSCULT_API auscult_status auscult_signal_save_wav(const auscult_signal* sig, const char* path,
                                                   int float32);

AUSCULT_API size_t auscult_signal_len(const auscult_signal* sig);
AUSCULT_API double auscult_signal_rate(const auscult_signal* sig);

/* Copies up to capacity samples into out; fails if capacity is short. */
AUSCULT_API auscult_status auscult_signal_samples(const auscult_signal* sig, double* out,
                                                  size_t capacity);
AUSCULT_API void auscult_signal_free(auscult_signal* sig);

AUSCULT_API auscult_status auscult_signal_normalize(const auscult_signal* in,
                                                    auscult_signal** out);
AUSCULT_API auscult_status auscult_signal_bandpass(const auscult_signal* in, double lo_hz,
                                                   double hi_hz, auscult_signal** out);
AUSCULT_API auscult_status auscult_signal_resample(const auscult_signal* in, double rate_hz,
                                                   auscult_signal** out);
AUSCULT_API auscult_status auscult_signal_time_stretch(const auscult_signal* in, double factor,
                                                       auscult_signal** out);

/* ------------------------------------------------------------------ */
/* random streams                                                      */

typedef struct auscult_rng auscult_rng;

AUSCULT_API auscult_status auscult_rng_create(uint64_t seed, auscult_rng** out);

/* Child stream derived from the parent's seed and the label; independent of
 * how much the parent has been consumed. */
AUSCULT_API auscult_status auscult_rng_split(const auscult_rng* rng, const char* label,
                                             auscult_rng** out);
AUSCULT_API void auscult_rng_free(auscult_rng* rng);

/* ------------------------------------------------------------------ */
/* one-shot transforms                                                 */

AUSCULT_API auscult_status auscult_hpss_augment(const auscult_signal* in, auscult_rng* rng,
                                                auscult_signal** out, int* passed_through);

/* boundaries: interior cycle boundaries, strictly increasing, inside the
 * signal.  mode: -1 gated random mode, else 0 half-groups / 1 random-groups /
 * 2 every-cycle, forced.  new_boundaries (capacity n_boundaries) receives the
 * output segmentation; rearranged reports whether anything moved. */
AUSCULT_API auscult_status auscult_rearrange(const auscult_signal* in, const size_t* boundaries,
                                             size_t n_boundaries, int mode, double probability,
                                             auscult_rng* rng, auscult_signal** out,
                                             size_t* new_boundaries, int* rearranged);

/* ------------------------------------------------------------------ */
/* metrics                                                             */

typedef struct auscult_confusion {
    uint64_t tp, fn, fp, tn;
} auscult_confusion;

/* Renders the rate table (text) or raw fractions (json) into buf.  Fails with
 * AUSCULT_E_INVALID_ARGUMENT if the buffer is too small. */
AUSCULT_API auscult_status auscult_metrics_text(const auscult_confusion* cm, char* buf,
                                                size_t cap);
AUSCULT_API auscult_status auscult_metrics_json(const auscult_confusion* cm, char* buf,
                                                size_t cap);

/* ------------------------------------------------------------------ */
/* batch runners (the CLI subcommands in library form)                 */

/* rate_hz 0 means the 2 kHz default. */
AUSCULT_API auscult_status auscult_make_fixtures(const char* out_dir, size_t count,
                                                 double rate_hz, int with_noise_bank,
                                                 uint64_t seed);

/* config_path NULL uses defaults; noise_dir NULL disables the noise bank.
 * Any of the three out-counters may be NULL. */
AUSCULT_API auscult_status auscult_run_augment(const char* manifest, const char* out_dir,
                                               const char* noise_dir, const char* config_path,
                                               uint64_t seed, size_t copies,
                                               double fragment_seconds, size_t fragments,
                                               size_t* records, size_t* copies_written,
                                               size_t* fragments_written);

AUSCULT_API auscult_status auscult_run_ddpm_train(const char* manifest,
                                                  const char* checkpoint_out,
                                                  const char* config_path, uint64_t seed,
                                                  size_t* steps_run, double* initial_val,
                                                  double* best_val, size_t* records_used);

AUSCULT_API auscult_status auscult_run_ddpm_sample(const char* checkpoint, const char* ecg_wav,
                                                   const char* out_wav, int label, uint64_t seed,
                                                   int stochastic);

AUSCULT_API auscult_status auscult_run_metrics_files(const char* predictions, const char* labels,
                                                     double threshold, int json_output, char* buf,
                                                     size_t cap);

/* split != 0 writes <output stem>_h.wav and _p.wav from one deterministic
 * decomposition; otherwise the randomized two-stage augmentation writes to
 * output and passed_through reports a too-short input. */
AUSCULT_API auscult_status auscult_run_hpss_file(const char* input, const char* output,
                                                 uint64_t seed, int split, size_t window_len,
                                                 size_t hop, double lambda, size_t median_half,
                                                 int* passed_through);

/* cycles_out NULL skips writing the new boundaries. */
AUSCULT_API auscult_status auscult_run_rearrange_file(const char* input, const char* cycles_csv,
                                                      const char* output, const char* cycles_out,
                                                      uint64_t seed, int mode, double probability,
                                                      int* rearranged);

/* Default configuration as pretty-printed JSON. */
AUSCULT_API auscult_status auscult_default_config_json(char* buf, size_t cap);

#ifdef __cplusplus
}
#endif

#endif /* AUSCULT_H */

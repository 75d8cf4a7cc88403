#include "auscult.h"

#include <cstring>
#include <new>
#include <string>

#include "config.hpp"
#include "cycles.hpp"
#include "errors.hpp"
#include "fixtures.hpp"
#include "hpss.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "signal.hpp"
#include "wav.hpp"

struct auscult_signal {
    auscult::Signal s;
};

struct auscult_rng {
    auscult::RandomStream r;
};

namespace {

thread_local std::string g_last_error;

auscult_status status_from(auscult::Errc c) {
    using auscult::Errc;
    switch (c) {
        case Errc::invalid_argument: return AUSCULT_E_INVALID_ARGUMENT;
        case Errc::invalid_band: return AUSCULT_E_INVALID_BAND;
        case Errc::io: return AUSCULT_E_IO;
        case Errc::format: return AUSCULT_E_FORMAT;
        case Errc::config: return AUSCULT_E_CONFIG;
        case Errc::internal: return AUSCULT_E_INTERNAL;
    }
    return AUSCULT_E_INTERNAL;
}

// Runs fn inside the C boundary: exceptions become status codes and a
// thread-local message.
template <typename Fn>
auscult_status guarded(Fn&& fn) {
    try {
        fn();
        return AUSCULT_OK;
    } catch (const auscult::Error& e) {
        g_last_error = e.what();
        return status_from(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return AUSCULT_E_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return AUSCULT_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return AUSCULT_E_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) auscult::fail(auscult::Errc::invalid_argument, what);
}

void copy_to_buffer(const std::string& text, char* buf, size_t cap) {
    require(buf != nullptr, "null buffer");
    if (text.size() + 1 > cap)
        auscult::fail(auscult::Errc::invalid_argument,
                      "buffer too small: need " + std::to_string(text.size() + 1) + " bytes");
    std::memcpy(buf, text.c_str(), text.size() + 1);
}

auscult::ToolConfig config_or_default(const char* config_path) {
    if (config_path == nullptr || config_path[0] == '\0') return auscult::default_config();
    return auscult::load_config(config_path);
}

} // namespace

extern "C" {

const char* auscult_version(void) { return "0.1.0"; }

const char* auscult_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ */

auscult_status auscult_signal_create(const double* samples, size_t count, double rate_hz,
                                     auscult_signal** out) {
    return guarded([&] {
        require(out != nullptr, "null out pointer");
        require(samples != nullptr || count == 0, "null samples");
        require(rate_hz > 0.0, "rate must be positive");
        auto* h = new auscult_signal;
        h->s.sample_rate_hz = rate_hz;
        h->s.samples.assign(samples, samples + count);
        *out = h;
    });
}

auscult_status auscult_signal_load_wav(const char* path, auscult_signal** out) {
    return guarded([&] {
        require(out != nullptr && path != nullptr, "null argument");
        *out = new auscult_signal{auscult::read_wav(path)};
    });
}

auscult_status auscult_signal_save_wav(const auscult_signal* sig, const char* path,
                                       int float32) {
    return guarded([&] {
        require(sig != nullptr && path != nullptr, "null argument");
        auscult::write_wav(path, sig->s,
                           float32 ? auscult::WavFormat::float32 : auscult::WavFormat::pcm16);
    });
}

size_t auscult_signal_len(const auscult_signal* sig) {
    return sig ? sig->s.samples.size() : 0;
}

double auscult_signal_rate(const auscult_signal* sig) {
    return sig ? sig->s.sample_rate_hz : 0.0;
}

auscult_status auscult_signal_samples(const auscult_signal* sig, double* out, size_t capacity) {
    return guarded([&] {
        require(sig != nullptr && out != nullptr, "null argument");
        require(capacity >= sig->s.samples.size(), "capacity too small");
        std::memcpy(out, sig->s.samples.data(), sig->s.samples.size() * sizeof(double));
    });
}

void auscult_signal_free(auscult_signal* sig) { delete sig; }

auscult_status auscult_signal_normalize(const auscult_signal* in, auscult_signal** out) {
    return guarded([&] {
        require(in != nullptr && out != nullptr, "null argument");
        *out = new auscult_signal{auscult::normalize(in->s)};
    });
}

auscult_status auscult_signal_bandpass(const auscult_signal* in, double lo_hz, double hi_hz,
                                       auscult_signal** out) {
    return guarded([&] {
        require(in != nullptr && out != nullptr, "null argument");
        *out = new auscult_signal{auscult::bandpass(in->s, lo_hz, hi_hz)};
    });
}

auscult_status auscult_signal_resample(const auscult_signal* in, double rate_hz,
                                       auscult_signal** out) {
    return guarded([&] {
        require(in != nullptr && out != nullptr, "null argument");
        *out = new auscult_signal{auscult::resample(in->s, rate_hz)};
    });
}

auscult_status auscult_signal_time_stretch(const auscult_signal* in, double factor,
                                           auscult_signal** out) {
    return guarded([&] {
        require(in != nullptr && out != nullptr, "null argument");
        *out = new auscult_signal{auscult::time_stretch(in->s, factor)};
    });
}

/* ------------------------------------------------------------------ */

auscult_status auscult_rng_create(uint64_t seed, auscult_rng** out) {
    return guarded([&] {
        require(out != nullptr, "null out pointer");
        *out = new auscult_rng{auscult::RandomStream(seed)};
    });
}

auscult_status auscult_rng_split(const auscult_rng* rng, const char* label, auscult_rng** out) {
    return guarded([&] {
        require(rng != nullptr && label != nullptr && out != nullptr, "null argument");
        *out = new auscult_rng{rng->r.split(label)};
    });
}

void auscult_rng_free(auscult_rng* rng) { delete rng; }

/* ------------------------------------------------------------------ */

auscult_status auscult_hpss_augment(const auscult_signal* in, auscult_rng* rng,
                                    auscult_signal** out, int* passed_through) {
    return guarded([&] {
        require(in != nullptr && rng != nullptr && out != nullptr, "null argument");
        auscult::RngParamSource ps(rng->r);
        bool passed = false;
        *out = new auscult_signal{auscult::hpss_augment(in->s, ps, &passed)};
        if (passed_through) *passed_through = passed ? 1 : 0;
    });
}

auscult_status auscult_rearrange(const auscult_signal* in, const size_t* boundaries,
                                 size_t n_boundaries, int mode, double probability,
                                 auscult_rng* rng, auscult_signal** out, size_t* new_boundaries,
                                 int* rearranged) {
    return guarded([&] {
        require(in != nullptr && rng != nullptr && out != nullptr, "null argument");
        require(boundaries != nullptr || n_boundaries == 0, "null boundaries");
        require(mode >= -1 && mode <= 2, "mode must be -1..2");
        std::vector<size_t> b(boundaries, boundaries + n_boundaries);
        auscult::RearrangeResult res =
            mode < 0 ? auscult::rearrange_cycles(in->s, b, rng->r, probability)
                     : auscult::rearrange_cycles_mode(
                           in->s, b, static_cast<auscult::RearrangeMode>(mode), rng->r);
        if (new_boundaries) {
            require(res.boundaries.size() <= n_boundaries, "boundary buffer too small");
            std::memcpy(new_boundaries, res.boundaries.data(),
                        res.boundaries.size() * sizeof(size_t));
        }
        if (rearranged) *rearranged = res.rearranged ? 1 : 0;
        *out = new auscult_signal{std::move(res.signal)};
    });
}

/* ------------------------------------------------------------------ */

auscult_status auscult_metrics_text(const auscult_confusion* cm, char* buf, size_t cap) {
    return guarded([&] {
        require(cm != nullptr, "null confusion matrix");
        auscult::ConfusionMatrix m{cm->tp, cm->fn, cm->fp, cm->tn};
        copy_to_buffer(auscult::format_rates_table(auscult::compute_rates(m)), buf, cap);
    });
}

auscult_status auscult_metrics_json(const auscult_confusion* cm, char* buf, size_t cap) {
    return guarded([&] {
        require(cm != nullptr, "null confusion matrix");
        auscult::ConfusionMatrix m{cm->tp, cm->fn, cm->fp, cm->tn};
        copy_to_buffer(auscult::rates_to_json(auscult::compute_rates(m), m), buf, cap);
    });
}

/* ------------------------------------------------------------------ */

auscult_status auscult_make_fixtures(const char* out_dir, size_t count, double rate_hz,
                                     int with_noise_bank, uint64_t seed) {
    return guarded([&] {
        require(out_dir != nullptr, "null out_dir");
        require(count > 0, "count must be positive");
        auscult::FixtureSpec spec;
        spec.count = count;
        if (rate_hz > 0.0) spec.rate_hz = rate_hz;
        spec.with_noise_bank = with_noise_bank != 0;
        auscult::make_fixtures(out_dir, spec, seed);
    });
}

auscult_status auscult_run_augment(const char* manifest, const char* out_dir,
                                   const char* noise_dir, const char* config_path, uint64_t seed,
                                   size_t copies, double fragment_seconds, size_t fragments,
                                   size_t* records, size_t* copies_written,
                                   size_t* fragments_written) {
    return guarded([&] {
        require(manifest != nullptr && out_dir != nullptr, "null path");
        require(copies > 0, "copies must be positive");
        auscult::AugmentJob job;
        job.manifest = manifest;
        job.out_dir = out_dir;
        if (noise_dir && noise_dir[0]) job.noise_dir = noise_dir;
        job.config = config_or_default(config_path);
        job.seed = seed;
        job.copies = copies;
        job.fragment_seconds = fragment_seconds;
        job.fragments = fragments;
        auscult::AugmentSummary s = auscult::run_augment(job);
        if (records) *records = s.records;
        if (copies_written) *copies_written = s.copies_written;
        if (fragments_written) *fragments_written = s.fragments_written;
    });
}

auscult_status auscult_run_ddpm_train(const char* manifest, const char* checkpoint_out,
                                      const char* config_path, uint64_t seed, size_t* steps_run,
                                      double* initial_val, double* best_val,
                                      size_t* records_used) {
    return guarded([&] {
        require(manifest != nullptr && checkpoint_out != nullptr, "null path");
        auscult::TrainJob job;
        job.manifest = manifest;
        job.checkpoint_out = checkpoint_out;
        job.config = config_or_default(config_path);
        job.seed = seed;
        auscult::TrainSummary s = auscult::run_ddpm_train(job);
        if (steps_run) *steps_run = s.stats.steps_run;
        if (initial_val) *initial_val = s.stats.initial_val;
        if (best_val) *best_val = s.stats.best_val;
        if (records_used) *records_used = s.records_used;
    });
}

auscult_status auscult_run_ddpm_sample(const char* checkpoint, const char* ecg_wav,
                                       const char* out_wav, int label, uint64_t seed,
                                       int stochastic) {
    return guarded([&] {
        require(checkpoint != nullptr && ecg_wav != nullptr && out_wav != nullptr, "null path");
        require(label >= 0 && label <= 2, "label must be 0..2");
        auscult::SampleJob job;
        job.checkpoint = checkpoint;
        job.ecg_wav = ecg_wav;
        job.out_wav = out_wav;
        job.label = label;
        job.seed = seed;
        job.stochastic = stochastic != 0;
        auscult::run_ddpm_sample(job);
    });
}

auscult_status auscult_run_metrics_files(const char* predictions, const char* labels,
                                         double threshold, int json_output, char* buf,
                                         size_t cap) {
    return guarded([&] {
        require(predictions != nullptr && labels != nullptr, "null path");
        auscult::MetricsJob job;
        job.predictions = predictions;
        job.labels = labels;
        job.threshold = threshold;
        job.json_output = json_output != 0;
        copy_to_buffer(auscult::run_metrics(job), buf, cap);
    });
}

auscult_status auscult_run_hpss_file(const char* input, const char* output, uint64_t seed,
                                     int split, size_t window_len, size_t hop, double lambda,
                                     size_t median_half, int* passed_through) {
    return guarded([&] {
        require(input != nullptr && output != nullptr, "null path");
        auscult::HpssJob job;
        job.input = input;
        job.output = output;
        job.seed = seed;
        job.split = split != 0;
        job.window_len = window_len;
        job.hop = hop;
        job.lambda = lambda;
        job.median_half = median_half;
        bool passed = auscult::run_hpss_file(job);
        if (passed_through) *passed_through = passed ? 1 : 0;
    });
}

auscult_status auscult_run_rearrange_file(const char* input, const char* cycles_csv,
                                          const char* output, const char* cycles_out,
                                          uint64_t seed, int mode, double probability,
                                          int* rearranged) {
    return guarded([&] {
        require(input != nullptr && cycles_csv != nullptr && output != nullptr, "null path");
        require(mode >= -1 && mode <= 2, "mode must be -1..2");
        auscult::RearrangeJob job;
        job.input = input;
        job.cycles = cycles_csv;
        job.output = output;
        if (cycles_out && cycles_out[0]) job.cycles_out = cycles_out;
        job.seed = seed;
        if (mode >= 0) job.mode = static_cast<auscult::RearrangeMode>(mode);
        job.probability = probability;
        auscult::RearrangeResult res = auscult::run_rearrange_file(job);
        if (rearranged) *rearranged = res.rearranged ? 1 : 0;
    });
}

auscult_status auscult_default_config_json(char* buf, size_t cap) {
    return guarded([&] { copy_to_buffer(auscult::config_to_json(auscult::default_config()), buf, cap); });
}

} // extern "C"

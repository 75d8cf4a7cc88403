#ifndef AUSCULT_PIPELINE_HPP
#define AUSCULT_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "cycles.hpp"
#include "dataset.hpp"
#include "ddpm.hpp"
#include "metrics.hpp"
#include "params.hpp"

namespace auscult {

std::string base64_encode(const uint8_t* data, size_t n);
std::vector<uint8_t> base64_decode(const std::string& text);

// ---------------------------------------------------------------------------
// augment: every record in the manifest gets `copies` independent augmented
// versions at the canonical 2 kHz rate.  Each copy derives its own stream,
// RandomStream(seed).split("record:<id>").split("copy:<k>"), so outputs do
// not depend on manifest order or on other records.  Outputs per copy:
//   <id>__aug<k>.wav        float32 PCG (when the record has one)
//   <id>__ecg__aug<k>.wav   float32 ECG (when the record has one)
//   <id>__aug<k>.json       provenance sidecar with the full draw log
// plus optional evenly spaced PCG fragments <id>__aug<k>__frag<j>.wav.
// Every file lands via temp-and-rename so readers never see partial writes.

struct AugmentJob {
    std::filesystem::path manifest;
    std::filesystem::path out_dir;
    std::filesystem::path noise_dir; // empty = no external-noise bank
    ToolConfig config;
    uint64_t seed = 0;
    size_t copies = 1;
    double fragment_seconds = 0.0; // 0 disables fragments
    size_t fragments = 0;
};

struct AugmentSummary {
    size_t records = 0;
    size_t copies_written = 0;
    size_t fragments_written = 0;
};

AugmentSummary run_augment(const AugmentJob& job);

// Reconstructs the draw log from a provenance sidecar.
DrawLog sidecar_draw_log(const std::filesystem::path& sidecar);

// ---------------------------------------------------------------------------
// ddpm

struct TrainJob {
    std::filesystem::path manifest;
    std::filesystem::path checkpoint_out;
    ToolConfig config;
    uint64_t seed = 0;
};

struct TrainSummary {
    TrainStats stats;
    size_t records_used = 0;
    size_t records_skipped = 0; // missing channel or too short
};

TrainSummary run_ddpm_train(const TrainJob& job);

struct SampleJob {
    std::filesystem::path checkpoint;
    std::filesystem::path ecg_wav;
    std::filesystem::path out_wav;
    int label = 0;
    uint64_t seed = 0;
    bool stochastic = true;
};

void run_ddpm_sample(const SampleJob& job);

// ---------------------------------------------------------------------------
// metrics: either explicit confusion counts or per-fragment predictions
// aggregated to subjects against a label table.

struct MetricsJob {
    std::optional<ConfusionMatrix> counts;
    std::filesystem::path predictions; // used when counts is empty
    std::filesystem::path labels;
    double threshold = 0.5;
    bool json_output = false;
};

std::string run_metrics(const MetricsJob& job);

// ---------------------------------------------------------------------------
// single-file tools

struct HpssJob {
    std::filesystem::path input;
    std::filesystem::path output;       // augment mode: the reconstruction
    uint64_t seed = 0;
    bool split = false;                 // write <output stem>_h/_p instead
    size_t window_len = 1024;
    size_t hop = 128;
    double lambda = 1.5;
    size_t median_half = 15;
};

// Returns true when the augmentation passed the signal through unchanged.
bool run_hpss_file(const HpssJob& job);

struct RearrangeJob {
    std::filesystem::path input;
    std::filesystem::path cycles;
    std::filesystem::path output;
    std::filesystem::path cycles_out; // empty = skip writing boundaries
    uint64_t seed = 0;
    std::optional<RearrangeMode> mode; // unset = gated draw
    double probability = 0.75;
};

RearrangeResult run_rearrange_file(const RearrangeJob& job);

// 4 kHz preparation shared by training and sampling.
Signal prep_channel_4k(const Signal& raw, bool is_pcg);

} // namespace auscult

#endif

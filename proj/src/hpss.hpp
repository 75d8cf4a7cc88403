#ifndef AUSCULT_HPSS_HPP
#define AUSCULT_HPSS_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "params.hpp"
#include "signal.hpp"

namespace auscult {

// Median-filter harmonic/percussive separation.  Harmonic evidence is a
// running median across time per bin, percussive across frequency per frame,
// both over 2*half + 1 cells with shrinking edge windows.
struct HpssParams {
    size_t half_frames = 15; // time median half-width
    size_t half_bins = 15;   // frequency median half-width
    double lambda_h = 1.5;
    double lambda_p = 1.5;
};

constexpr double kHpssEta = 1e-10;

struct HpssMasks {
    std::vector<uint8_t> harmonic;   // [frame][bin], 0/1
    std::vector<uint8_t> percussive;
    size_t frames = 0;
    size_t n_bins = 0;
};

// M_h = [med_t / (med_f + eta) >  lambda_h]
// M_p = [med_f / (med_t + eta) >= lambda_p]
// With lambda_h, lambda_p >= 1 the two masks never overlap.
HpssMasks hpss_masks(const Spectrogram& spec, const HpssParams& p);

// Masks applied to the complex cells.
std::pair<Spectrogram, Spectrogram> hpss_split(const Spectrogram& spec, const HpssParams& p);

// stft -> split -> istft, on input reflect-padded so every sample is covered,
// cropped back to the input length.
std::pair<Signal, Signal> hpss_decompose(const Signal& x, size_t window_len, size_t hop,
                                         const HpssParams& p);

// One randomized two-stage reconstruction: stage 1 splits the signal, stage 2
// re-splits each masked spectrogram in place (no second analysis pass), and
// the four resyntheses are mixed with random weights.
struct TwoStageParams {
    size_t window_len = 1024;
    size_t hop = 128;
    HpssParams stage1;
    HpssParams stage2;
    double a_hh = 1.0, a_hp = 1.0, a_ph = 1.0, a_pp = 1.0;
};

Signal hpss_reconstruct_with_params(const Signal& x, const TwoStageParams& p);

// Draws window, hop, per-stage lambda and median width, and the four mix
// weights through ps (prefix names the construction in the draw log).
TwoStageParams draw_two_stage_params(ParamSource& ps, const std::string& prefix);

// Full augmentation: two independent constructions, s1 + a * s2 with
// a ~ rand(0.01, 0.05), renormalized.  A signal shorter than the drawn
// window passes through unchanged; *passed_through reports it when non-null.
Signal hpss_augment(const Signal& x, ParamSource& ps, bool* passed_through = nullptr);

} // namespace auscult

#endif

#ifndef AUSCULT_AUGMENT_HPP
#define AUSCULT_AUGMENT_HPP

#include <string>
#include <vector>

#include "params.hpp"
#include "signal.hpp"

namespace auscult {

enum class Label : int { normal = 0, abnormal = 1, unsure = 2 };

struct PairedRecord {
    std::string id;
    Signal pcg;
    Signal ecg;
    std::vector<size_t> boundaries; // cycle boundaries, PCG sample indices
    Label label = Label::normal;
};

enum class StretchMode {
    shared,      // one gate and one PCG-rule factor applied to both channels
    independent, // per-channel gates; ECG draws its own continuous factor
};

struct AugmentConfig {
    double pcg_hpss = 0.75;
    double pcg_noise = 0.075; // the chain applies this stage twice
    double pcg_stretch = 0.75;
    double pcg_am = 0.75;
    double pcg_eq = 0.25;
    double pcg_ext_noise = 0.5;
    double ecg_noise = 0.075;
    double ecg_wander = 0.30;
    double ecg_stretch = 0.25;
    double ecg_eq = 0.25;
    double ecg_ext_noise = 0.5;

    StretchMode stretch_mode = StretchMode::shared;

    double pcg_eq_lo_hz = 2.0, pcg_eq_hi_hz = 500.0;
    double ecg_eq_lo_hz = 0.25, ecg_eq_hi_hz = 100.0;
    double eq_gain_lo = 0.1, eq_gain_hi = 1.0;
};

struct NoiseBank {
    std::vector<Signal> clips;
    std::vector<std::string> names;
    bool empty() const { return clips.empty(); }
};

// sigma picked from {0.01, 0.001, 0.0001}, mean from rand(0, 0.1); the noise
// vector itself goes through the ParamSource so a replay is bit-exact.
Signal add_gaussian_noise(const Signal& x, ParamSource& ps, const std::string& prefix);

// x(t) scaled by 1 + b1 sin(2 pi c1 t + d1) + b2 sin(2 pi c2 t + d2), t in
// seconds; b in (0.01, 0.25), c1 in (0.05, 0.5), c2 in (0.001, 0.05).
Signal amplitude_modulate(const Signal& x, ParamSource& ps, const std::string& prefix);

// Additive version of the same two-sine form with b in (0.01, 0.2).
Signal baseline_wander(const Signal& x, ParamSource& ps, const std::string& prefix);

// Five random pass-bands (width 5..20% of the range, placed inside it) are
// filtered, scaled, summed onto the input, and the result renormalized.
Signal parametric_eq(const Signal& x, double lo_hz, double hi_hz, const AugmentConfig& cfg,
                     ParamSource& ps, const std::string& prefix);

// A random bank clip, resampled to the signal rate, looped or cropped to
// length, mixed at an SNR drawn from 5..20 dB, renormalized.
Signal mix_external_noise(const Signal& x, const NoiseBank& bank, ParamSource& ps,
                          const std::string& prefix);

struct AugmentOutcome {
    PairedRecord record;
    bool hpss_passed_through = false;
    double stretch_factor = 1.0; // 1.0 when no stretch fired
};

// PCG chain: HPSS, noise, stretch, AM, noise, EQ, external noise.
// ECG chain: noise, wander, stretch, EQ, external noise.
// Gates and parameters are drawn in chain order; a null/empty noise bank
// skips the external-noise stages (their gates still consume a draw so the
// log keeps one shape per configuration).
AugmentOutcome augment_pair(const PairedRecord& in, const AugmentConfig& cfg,
                            const NoiseBank* bank, ParamSource& ps);

} // namespace auscult

#endif

#ifndef AUSCULT_SIGNAL_HPP
#define AUSCULT_SIGNAL_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace auscult {

struct Signal {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;

    size_t size() const { return samples.size(); }
    double duration_s() const { return sample_rate_hz > 0 ? samples.size() / sample_rate_hz : 0.0; }
};

// In-place radix-2 FFT, length must be a power of two.  sign = -1 forward,
// +1 inverse; inverse applies the 1/N scale.
void fft_pow2(std::vector<std::complex<double>>& a, int sign);

bool is_pow2(size_t n);

// Complex one-sided STFT.  Frame t covers samples [t*hop, t*hop + window_len);
// no centering pad, so frames = floor((len - window_len) / hop) + 1.
struct Spectrogram {
    std::vector<std::complex<double>> bins; // row-major [frame][bin]
    size_t frames = 0;
    size_t n_bins = 0;     // window_len / 2 + 1
    size_t window_len = 0;
    size_t hop = 0;
    size_t source_len = 0;
    double sample_rate_hz = 0.0;

    std::complex<double>& at(size_t t, size_t k) { return bins[t * n_bins + k]; }
    const std::complex<double>& at(size_t t, size_t k) const { return bins[t * n_bins + k]; }
};

// w(n) = sin(pi * (n + 0.5) / n_total); strictly positive, so per-sample
// synthesis normalization never divides by zero.
std::vector<double> sine_window(size_t n_total);

// window_len in {512, 1024, 2048}, hop in 1..window_len.  A signal shorter
// than one window analyzes as a single zero-padded frame.
Spectrogram stft(const Signal& x, size_t window_len, size_t hop);

// Overlap-add inverse with per-sample window-squared normalization.  Exact on
// the covered region [0, (frames-1)*hop + window_len); the uncovered tail up
// to source_len comes back as zeros.
Signal istft(const Spectrogram& spec);

// Subtract mean, then scale so max |sample| == 1.  Constant input maps to
// zeros.  Already-centered input is left unshifted, which makes the operation
// bitwise idempotent.
Signal normalize(const Signal& x);

// Zero-phase FIR bandpass (Kaiser-windowed sinc, reflect padding).  Tap count
// scales with the sample rate from 1025 taps at 2 kHz.  lo_hz == 0 degrades
// to a plain lowpass.
Signal bandpass(const Signal& x, double lo_hz, double hi_hz);

// Polyphase windowed-sinc resampler (Kaiser beta 8.6, 16 zero crossings per
// side).  Output length = round(len * target / source).  Identity rate is a
// bitwise copy.
Signal resample(const Signal& x, double target_rate_hz);

// Same interpolator, but the rate tag is kept: output length = round(len *
// factor), contents slowed down (factor > 1) or sped up.  factor == 1 is a
// bitwise copy.
Signal time_stretch(const Signal& x, double factor);

struct MelSpectrogram {
    std::vector<double> bands; // row-major [frame][mel]
    size_t frames = 0;
    size_t n_mels = 0;
    size_t window_len = 0;
    size_t hop = 0;
    double sample_rate_hz = 0.0;
    double fmin_hz = 0.0;
    double fmax_hz = 0.0;

    double& at(size_t t, size_t m) { return bands[t * n_mels + m]; }
    double at(size_t t, size_t m) const { return bands[t * n_mels + m]; }
};

// Identifies the mel variant for checkpoints and sidecars.
extern const char* const kMelVariant;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular Slaney-style filterbank rows over the one-sided bin grid,
// area-normalized, fmin 0 to fmax Nyquist.
std::vector<std::vector<double>> mel_filterbank(size_t n_mels, size_t window_len,
                                                double sample_rate_hz, double fmin_hz,
                                                double fmax_hz);

// Power-spectrogram mel.  Input is resampled to 4 kHz internally if needed;
// window 1024, hop 256, 80 bands by default.
MelSpectrogram mel_spectrogram(const Signal& x, size_t n_mels = 80,
                               size_t window_len = 1024, size_t hop = 256);

} // namespace auscult

#endif

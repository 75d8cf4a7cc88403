#include "signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace auscult {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(std::vector<std::complex<double>>& a, int sign) {
    const size_t n = a.size();
    if (!is_pow2(n)) fail(Errc::invalid_argument, "fft length must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wstep(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wstep;
            }
        }
    }
    if (sign > 0) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= inv;
    }
}

std::vector<double> sine_window(size_t n_total) {
    std::vector<double> w(n_total);
    for (size_t n = 0; n < n_total; ++n)
        w[n] = std::sin(M_PI * (static_cast<double>(n) + 0.5) / static_cast<double>(n_total));
    return w;
}

namespace {

constexpr size_t kStftWindows[] = {512, 1024, 2048};

void check_stft_params(size_t window_len, size_t hop) {
    if (std::find(std::begin(kStftWindows), std::end(kStftWindows), window_len) ==
        std::end(kStftWindows))
        fail(Errc::invalid_argument, "stft: window length must be 512, 1024, or 2048");
    if (hop == 0 || hop > window_len)
        fail(Errc::invalid_argument, "stft: hop must be in 1..window_len");
}

} // namespace

Spectrogram stft(const Signal& x, size_t window_len, size_t hop) {
    check_stft_params(window_len, hop);

    // A signal shorter than one window analyzes as a single zero-padded frame.
    const double* data = x.samples.data();
    size_t len = x.size();
    std::vector<double> padded;
    if (len < window_len) {
        padded.assign(window_len, 0.0);
        std::copy(x.samples.begin(), x.samples.end(), padded.begin());
        data = padded.data();
        len = window_len;
    }

    const std::vector<double> w = sine_window(window_len);
    Spectrogram spec;
    spec.window_len = window_len;
    spec.hop = hop;
    spec.n_bins = window_len / 2 + 1;
    spec.frames = (len - window_len) / hop + 1;
    spec.source_len = x.size();
    spec.sample_rate_hz = x.sample_rate_hz;
    spec.bins.resize(spec.frames * spec.n_bins);

    std::vector<std::complex<double>> buf(window_len);
    for (size_t t = 0; t < spec.frames; ++t) {
        const double* src = data + t * hop;
        for (size_t n = 0; n < window_len; ++n) buf[n] = {src[n] * w[n], 0.0};
        fft_pow2(buf, -1);
        std::copy(buf.begin(), buf.begin() + spec.n_bins, spec.bins.begin() + t * spec.n_bins);
    }
    return spec;
}

Signal istft(const Spectrogram& spec) {
    if (spec.frames == 0 || spec.n_bins != spec.window_len / 2 + 1)
        fail(Errc::invalid_argument, "istft: malformed spectrogram");
    check_stft_params(spec.window_len, spec.hop);

    const size_t n = spec.window_len;
    const size_t covered = (spec.frames - 1) * spec.hop + n;
    const size_t out_len = std::max(spec.source_len, covered);
    const std::vector<double> w = sine_window(n);

    std::vector<double> acc(out_len, 0.0), wsum(out_len, 0.0);
    std::vector<std::complex<double>> buf(n);
    for (size_t t = 0; t < spec.frames; ++t) {
        const std::complex<double>* row = spec.bins.data() + t * spec.n_bins;
        for (size_t k = 0; k < spec.n_bins; ++k) buf[k] = row[k];
        for (size_t k = spec.n_bins; k < n; ++k) buf[k] = std::conj(row[n - k]);
        fft_pow2(buf, +1);
        double* dst = acc.data() + t * spec.hop;
        double* wdst = wsum.data() + t * spec.hop;
        for (size_t i = 0; i < n; ++i) {
            dst[i] += w[i] * buf[i].real();
            wdst[i] += w[i] * w[i];
        }
    }
    for (size_t i = 0; i < out_len; ++i) acc[i] = wsum[i] > 0.0 ? acc[i] / wsum[i] : 0.0;

    acc.resize(out_len);
    return Signal{std::move(acc), spec.sample_rate_hz};
}

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// Neumaier-compensated mean; keeps the residual small enough that centering
// converges in one or two passes.
double mean_of(const std::vector<double>& v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double t = sum + x;
        comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return (sum + comp) / static_cast<double>(v.size());
}

} // namespace

Signal normalize(const Signal& x) {
    Signal out{x.samples, x.sample_rate_hz};
    if (out.samples.empty()) return out;

    const double scale0 = max_abs(out.samples);
    double mu = mean_of(out.samples);
    if (std::fabs(mu) > 1e-12 * scale0) {
        for (int pass = 0; pass < 8; ++pass) {
            for (double& s : out.samples) s -= mu;
            mu = mean_of(out.samples);
            if (std::fabs(mu) <= 0.1e-12 * std::max(max_abs(out.samples), 1e-300)) break;
        }
    }

    const double m = max_abs(out.samples);
    if (m <= 1e-12 * scale0 || m == 0.0) {
        std::fill(out.samples.begin(), out.samples.end(), 0.0);
        return out;
    }
    if (m != 1.0)
        for (double& s : out.samples) s /= m;
    return out;
}

namespace {

double sinc(double u) {
    if (u == 0.0) return 1.0;
    const double pu = M_PI * u;
    return std::sin(pu) / pu;
}

double kaiser(double u, double beta) {
    // u in [-1, 1]
    const double t = 1.0 - u * u;
    if (t <= 0.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(t)) / std::cyl_bessel_i(0.0, beta);
}

// Triangular reflection of i into [0, n).
size_t reflect_index(long long i, long long n) {
    if (n == 1) return 0;
    const long long period = 2 * (n - 1);
    long long j = i % period;
    if (j < 0) j += period;
    if (j >= n) j = period - j;
    return static_cast<size_t>(j);
}

constexpr double kKaiserBeta = 8.6;
constexpr int kSincZeroCrossings = 16;

// Shared interpolation core for resample and time_stretch: output sample i
// sits at input position i / ratio.
std::vector<double> sinc_interp(const std::vector<double>& in, double ratio, size_t out_len) {
    const double c = std::min(1.0, ratio); // anti-alias cutoff, input Nyquist units
    const double half = kSincZeroCrossings / c;
    const int table_per_unit = 512;
    const size_t table_len = static_cast<size_t>(std::ceil(half * table_per_unit)) + 2;
    std::vector<double> table(table_len);
    for (size_t j = 0; j < table_len; ++j) {
        const double u = static_cast<double>(j) / table_per_unit;
        table[j] = c * sinc(c * u) * kaiser(u / half, kKaiserBeta);
    }

    const long long n = static_cast<long long>(in.size());
    std::vector<double> out(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        const double t = static_cast<double>(i) / ratio;
        long long j0 = static_cast<long long>(std::ceil(t - half));
        long long j1 = static_cast<long long>(std::floor(t + half));
        j0 = std::max(j0, 0ll);
        j1 = std::min(j1, n - 1);
        double acc = 0.0;
        for (long long j = j0; j <= j1; ++j) {
            const double u = std::fabs(t - static_cast<double>(j)) * table_per_unit;
            const size_t idx = static_cast<size_t>(u);
            const double frac = u - static_cast<double>(idx);
            const double k = table[idx] + frac * (table[idx + 1] - table[idx]);
            acc += in[static_cast<size_t>(j)] * k;
        }
        out[i] = acc;
    }
    return out;
}

} // namespace

Signal bandpass(const Signal& x, double lo_hz, double hi_hz) {
    if (x.sample_rate_hz <= 0.0) fail(Errc::invalid_argument, "bandpass: sample rate unset");
    if (lo_hz < 0.0 || !(lo_hz < hi_hz))
        fail(Errc::invalid_band, "bandpass: need 0 <= lo_hz < hi_hz");
    if (hi_hz >= x.sample_rate_hz / 2.0)
        fail(Errc::invalid_band, "bandpass: hi_hz at or above Nyquist");
    if (x.samples.empty()) return x;

    // 1025 taps at the 2 kHz reference rate, scaled with the rate, kept odd.
    long long taps = std::llround(1025.0 * x.sample_rate_hz / 2000.0);
    taps = std::clamp(taps, 65ll, 32769ll);
    if (taps % 2 == 0) ++taps;
    const long long half = (taps - 1) / 2;

    const double f_hi = hi_hz / x.sample_rate_hz;
    const double f_lo = lo_hz / x.sample_rate_hz;
    std::vector<double> h(static_cast<size_t>(taps));
    for (long long i = 0; i < taps; ++i) {
        const double m = static_cast<double>(i - half);
        const double ideal = 2.0 * f_hi * sinc(2.0 * f_hi * m) - 2.0 * f_lo * sinc(2.0 * f_lo * m);
        h[static_cast<size_t>(i)] = ideal * kaiser(m / static_cast<double>(half), kKaiserBeta);
    }

    const long long n = static_cast<long long>(x.size());
    Signal out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples.resize(x.size());
    // Symmetric kernel on reflect-padded input: zero phase, same length.
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        if (i - half >= 0 && i + half < n) {
            const double* src = x.samples.data() + (i - half);
            for (long long j = 0; j < taps; ++j) acc += h[static_cast<size_t>(j)] * src[j];
        } else {
            for (long long j = 0; j < taps; ++j)
                acc += h[static_cast<size_t>(j)] * x.samples[reflect_index(i + j - half, n)];
        }
        out.samples[static_cast<size_t>(i)] = acc;
    }
    return out;
}

Signal resample(const Signal& x, double target_rate_hz) {
    if (x.sample_rate_hz <= 0.0 || target_rate_hz <= 0.0)
        fail(Errc::invalid_argument, "resample: rates must be positive");
    if (target_rate_hz == x.sample_rate_hz) return x;

    const double ratio = target_rate_hz / x.sample_rate_hz;
    const size_t out_len =
        static_cast<size_t>(std::llround(static_cast<double>(x.size()) * ratio));
    Signal out;
    out.sample_rate_hz = target_rate_hz;
    out.samples = sinc_interp(x.samples, ratio, out_len);
    return out;
}

Signal time_stretch(const Signal& x, double factor) {
    if (!(factor > 0.0)) fail(Errc::invalid_argument, "time_stretch: factor must be positive");
    if (factor == 1.0) return x;

    const size_t out_len =
        static_cast<size_t>(std::llround(static_cast<double>(x.size()) * factor));
    Signal out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples = sinc_interp(x.samples, factor, out_len);
    return out;
}

const char* const kMelVariant = "slaney-area-norm";

double hz_to_mel(double hz) {
    if (hz < 1000.0) return hz * 3.0 / 200.0;
    return 15.0 + 27.0 * std::log(hz / 1000.0) / std::log(6.4);
}

double mel_to_hz(double mel) {
    if (mel < 15.0) return mel * 200.0 / 3.0;
    return 1000.0 * std::exp(std::log(6.4) * (mel - 15.0) / 27.0);
}

std::vector<std::vector<double>> mel_filterbank(size_t n_mels, size_t window_len,
                                                double sample_rate_hz, double fmin_hz,
                                                double fmax_hz) {
    if (n_mels == 0) fail(Errc::invalid_argument, "mel_filterbank: n_mels must be positive");
    if (!(fmin_hz >= 0.0) || !(fmin_hz < fmax_hz) || fmax_hz > sample_rate_hz / 2.0)
        fail(Errc::invalid_band, "mel_filterbank: need 0 <= fmin < fmax <= Nyquist");

    const size_t n_bins = window_len / 2 + 1;
    const double mel_lo = hz_to_mel(fmin_hz);
    const double mel_hi = hz_to_mel(fmax_hz);
    std::vector<double> edges(n_mels + 2);
    for (size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                          static_cast<double>(n_mels + 1));

    std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
    for (size_t m = 0; m < n_mels; ++m) {
        const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
        const double area = 2.0 / (f2 - f0);
        for (size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate_hz /
                             static_cast<double>(window_len);
            double w = 0.0;
            if (f > f0 && f < f2)
                w = f <= f1 ? (f - f0) / (f1 - f0) : (f2 - f) / (f2 - f1);
            fb[m][k] = w * area;
        }
    }
    return fb;
}

MelSpectrogram mel_spectrogram(const Signal& x, size_t n_mels, size_t window_len, size_t hop) {
    constexpr double kMelRate = 4000.0;
    Signal y = x.sample_rate_hz == kMelRate ? x : resample(x, kMelRate);
    if (y.samples.empty()) fail(Errc::invalid_argument, "mel_spectrogram: empty signal");

    const Spectrogram spec = stft(y, window_len, hop); // short input: one padded frame
    const auto fb = mel_filterbank(n_mels, window_len, kMelRate, 0.0, kMelRate / 2.0);

    MelSpectrogram mel;
    mel.frames = spec.frames;
    mel.n_mels = n_mels;
    mel.window_len = window_len;
    mel.hop = hop;
    mel.sample_rate_hz = kMelRate;
    mel.fmin_hz = 0.0;
    mel.fmax_hz = kMelRate / 2.0;
    mel.bands.assign(spec.frames * n_mels, 0.0);

    std::vector<double> power(spec.n_bins);
    for (size_t t = 0; t < spec.frames; ++t) {
        for (size_t k = 0; k < spec.n_bins; ++k) power[k] = std::norm(spec.at(t, k));
        for (size_t m = 0; m < n_mels; ++m) {
            double acc = 0.0;
            const auto& row = fb[m];
            for (size_t k = 0; k < spec.n_bins; ++k) acc += row[k] * power[k];
            mel.at(t, m) = acc;
        }
    }
    return mel;
}

} // namespace auscult

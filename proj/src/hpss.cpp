#include "hpss.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace auscult {
namespace {

// Sorted-buffer sliding window; widths here stay small (<= 61 values), so
// insertion with memmove beats heap bookkeeping.
class SlidingMedian {
public:
    void reserve(size_t n) { buf_.reserve(n); }
    void clear() { buf_.clear(); }
    void insert(double v) { buf_.insert(std::lower_bound(buf_.begin(), buf_.end(), v), v); }
    void erase(double v) { buf_.erase(std::lower_bound(buf_.begin(), buf_.end(), v)); }
    double median() const {
        const size_t n = buf_.size();
        return n % 2 ? buf_[n / 2] : 0.5 * (buf_[n / 2 - 1] + buf_[n / 2]);
    }

private:
    std::vector<double> buf_;
};

std::vector<double> magnitudes(const Spectrogram& spec) {
    std::vector<double> m(spec.bins.size());
    for (size_t i = 0; i < m.size(); ++i) m[i] = std::abs(spec.bins[i]);
    return m;
}

// Median across time for every bin (harmonic evidence).
std::vector<double> median_time(const std::vector<double>& mag, size_t frames, size_t n_bins,
                                size_t half) {
    std::vector<double> out(mag.size());
    SlidingMedian win;
    win.reserve(2 * half + 2);
    for (size_t k = 0; k < n_bins; ++k) {
        win.clear();
        const size_t warm = std::min(half, frames - 1);
        for (size_t t = 0; t <= warm; ++t) win.insert(mag[t * n_bins + k]);
        for (size_t t = 0; t < frames; ++t) {
            if (t > 0) {
                if (t + half < frames) win.insert(mag[(t + half) * n_bins + k]);
                if (t > half) win.erase(mag[(t - half - 1) * n_bins + k]);
            }
            out[t * n_bins + k] = win.median();
        }
    }
    return out;
}

// Median across frequency for every frame (percussive evidence).
std::vector<double> median_freq(const std::vector<double>& mag, size_t frames, size_t n_bins,
                                size_t half) {
    std::vector<double> out(mag.size());
    SlidingMedian win;
    win.reserve(2 * half + 2);
    for (size_t t = 0; t < frames; ++t) {
        const double* row = mag.data() + t * n_bins;
        double* dst = out.data() + t * n_bins;
        win.clear();
        const size_t warm = std::min(half, n_bins - 1);
        for (size_t k = 0; k <= warm; ++k) win.insert(row[k]);
        for (size_t k = 0; k < n_bins; ++k) {
            if (k > 0) {
                if (k + half < n_bins) win.insert(row[k + half]);
                if (k > half) win.erase(row[k - half - 1]);
            }
            dst[k] = win.median();
        }
    }
    return out;
}

size_t padded_len(size_t len, size_t window_len, size_t hop) {
    // Smallest len' >= len with (len' - window_len) divisible by hop: the
    // overlap-add then covers every sample.
    if (len <= window_len) return window_len;
    const size_t rem = (len - window_len) % hop;
    return rem == 0 ? len : len + (hop - rem);
}

size_t reflect_fold(long long i, long long n) {
    if (n == 1) return 0;
    const long long period = 2 * (n - 1);
    long long j = i % period;
    if (j < 0) j += period;
    if (j >= n) j = period - j;
    return static_cast<size_t>(j);
}

Signal reflect_extend(const Signal& x, size_t target_len) {
    Signal y;
    y.sample_rate_hz = x.sample_rate_hz;
    y.samples.resize(target_len);
    const long long n = static_cast<long long>(x.size());
    for (size_t i = 0; i < target_len; ++i)
        y.samples[i] = x.samples[reflect_fold(static_cast<long long>(i), n)];
    return y;
}

} // namespace

HpssMasks hpss_masks(const Spectrogram& spec, const HpssParams& p) {
    if (p.lambda_h < 1.0 || p.lambda_p < 1.0)
        fail(Errc::invalid_argument, "hpss: lambda must be >= 1");

    const std::vector<double> mag = magnitudes(spec);
    const std::vector<double> med_t = median_time(mag, spec.frames, spec.n_bins, p.half_frames);
    const std::vector<double> med_f = median_freq(mag, spec.frames, spec.n_bins, p.half_bins);

    HpssMasks masks;
    masks.frames = spec.frames;
    masks.n_bins = spec.n_bins;
    masks.harmonic.resize(mag.size());
    masks.percussive.resize(mag.size());
    for (size_t i = 0; i < mag.size(); ++i) {
        masks.harmonic[i] = med_t[i] / (med_f[i] + kHpssEta) > p.lambda_h ? 1 : 0;
        masks.percussive[i] = med_f[i] / (med_t[i] + kHpssEta) >= p.lambda_p ? 1 : 0;
    }
    return masks;
}

std::pair<Spectrogram, Spectrogram> hpss_split(const Spectrogram& spec, const HpssParams& p) {
    const HpssMasks masks = hpss_masks(spec, p);
    Spectrogram h = spec, pc = spec;
    for (size_t i = 0; i < spec.bins.size(); ++i) {
        if (!masks.harmonic[i]) h.bins[i] = 0.0;
        if (!masks.percussive[i]) pc.bins[i] = 0.0;
    }
    return {std::move(h), std::move(pc)};
}

std::pair<Signal, Signal> hpss_decompose(const Signal& x, size_t window_len, size_t hop,
                                         const HpssParams& p) {
    const Signal padded = reflect_extend(x, padded_len(x.size(), window_len, hop));
    const Spectrogram spec = stft(padded, window_len, hop);
    auto [sh, sp] = hpss_split(spec, p);
    Signal h = istft(sh), pc = istft(sp);
    h.samples.resize(x.size());
    pc.samples.resize(x.size());
    return {std::move(h), std::move(pc)};
}

Signal hpss_reconstruct_with_params(const Signal& x, const TwoStageParams& p) {
    const Signal padded = reflect_extend(x, padded_len(x.size(), p.window_len, p.hop));
    const Spectrogram spec = stft(padded, p.window_len, p.hop);

    auto [sh, sp] = hpss_split(spec, p.stage1);
    // Stage 2 re-splits the masked spectrograms as they stand.
    auto [shh, shp] = hpss_split(sh, p.stage2);
    auto [sph, spp] = hpss_split(sp, p.stage2);

    const Signal xhh = istft(shh), xhp = istft(shp), xph = istft(sph), xpp = istft(spp);
    Signal out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        out.samples[i] = p.a_hh * xhh.samples[i] + p.a_hp * xhp.samples[i] +
                         p.a_ph * xph.samples[i] + p.a_pp * xpp.samples[i];
    return out;
}

TwoStageParams draw_two_stage_params(ParamSource& ps, const std::string& prefix) {
    static constexpr size_t windows[] = {512, 1024, 2048};
    static constexpr size_t hops[] = {16, 32, 64, 128};

    TwoStageParams p;
    p.window_len = windows[ps.choice(prefix + ".window", 3)];
    p.hop = hops[ps.choice(prefix + ".hop", 4)];

    const double lambda1 = ps.uniform(prefix + ".lambda1", 1.0, 2.0);
    const auto l1 = static_cast<size_t>(ps.randint(prefix + ".l1", 5, 30));
    p.stage1 = HpssParams{l1, l1, lambda1, lambda1};

    const double lambda2 = ps.uniform(prefix + ".lambda2", 1.0, 4.0);
    const auto l2 = static_cast<size_t>(ps.randint(prefix + ".l2", 5, 30));
    p.stage2 = HpssParams{l2, l2, lambda2, lambda2};

    p.a_hh = ps.uniform(prefix + ".a_hh", 0.01, 10.0);
    p.a_hp = ps.uniform(prefix + ".a_hp", 0.01, 10.0);
    p.a_ph = ps.uniform(prefix + ".a_ph", 0.01, 10.0);
    p.a_pp = ps.uniform(prefix + ".a_pp", 0.01, 10.0);
    return p;
}

Signal hpss_augment(const Signal& x, ParamSource& ps, bool* passed_through) {
    // All parameters are drawn up front so the draw log has one fixed shape.
    const TwoStageParams p1 = draw_two_stage_params(ps, "h1");
    const TwoStageParams p2 = draw_two_stage_params(ps, "h2");
    const double a = ps.uniform("a_hpss", 0.01, 0.05);

    if (x.size() < p1.window_len || x.size() < p2.window_len) {
        if (passed_through) *passed_through = true;
        return x;
    }
    if (passed_through) *passed_through = false;

    const Signal s1 = hpss_reconstruct_with_params(x, p1);
    const Signal s2 = hpss_reconstruct_with_params(x, p2);
    Signal out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) out.samples[i] = s1.samples[i] + a * s2.samples[i];
    return normalize(out);
}

} // namespace auscult

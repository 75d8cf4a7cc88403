#include "augment.hpp"

#include <cmath>

#include "errors.hpp"
#include "hpss.hpp"

namespace auscult {

Signal add_gaussian_noise(const Signal& x, ParamSource& ps, const std::string& prefix) {
    static constexpr double sigmas[] = {0.01, 0.001, 0.0001};
    const double sigma = sigmas[ps.choice(prefix + ".sigma", 3)];
    const double mu = ps.uniform(prefix + ".mu", 0.0, 0.1);
    const std::vector<double> noise = ps.gaussians(prefix + ".values", x.size(), mu, sigma);
    Signal out = x;
    for (size_t i = 0; i < out.size(); ++i) out.samples[i] += noise[i];
    return out;
}

namespace {

struct TwoSine {
    double b1, c1, d1, b2, c2, d2;
};

TwoSine draw_two_sine(ParamSource& ps, const std::string& prefix, double b_lo, double b_hi) {
    TwoSine p;
    p.b1 = ps.uniform(prefix + ".b1", b_lo, b_hi);
    p.c1 = ps.uniform(prefix + ".c1", 0.05, 0.5);
    p.d1 = ps.uniform(prefix + ".d1", 0.0, 1.0);
    p.b2 = ps.uniform(prefix + ".b2", b_lo, b_hi);
    p.c2 = ps.uniform(prefix + ".c2", 0.001, 0.05);
    p.d2 = ps.uniform(prefix + ".d2", 0.0, 1.0);
    return p;
}

double two_sine_at(const TwoSine& p, double t) {
    return p.b1 * std::sin(2.0 * M_PI * p.c1 * t + p.d1) +
           p.b2 * std::sin(2.0 * M_PI * p.c2 * t + p.d2);
}

} // namespace

Signal amplitude_modulate(const Signal& x, ParamSource& ps, const std::string& prefix) {
    if (x.sample_rate_hz <= 0.0) fail(Errc::invalid_argument, "amplitude_modulate: rate unset");
    const TwoSine p = draw_two_sine(ps, prefix, 0.01, 0.25);
    Signal out = x;
    for (size_t i = 0; i < out.size(); ++i) {
        const double t = static_cast<double>(i) / x.sample_rate_hz;
        out.samples[i] *= 1.0 + two_sine_at(p, t);
    }
    return out;
}

Signal baseline_wander(const Signal& x, ParamSource& ps, const std::string& prefix) {
    if (x.sample_rate_hz <= 0.0) fail(Errc::invalid_argument, "baseline_wander: rate unset");
    const TwoSine p = draw_two_sine(ps, prefix, 0.01, 0.2);
    Signal out = x;
    for (size_t i = 0; i < out.size(); ++i) {
        const double t = static_cast<double>(i) / x.sample_rate_hz;
        out.samples[i] += two_sine_at(p, t);
    }
    return out;
}

Signal parametric_eq(const Signal& x, double lo_hz, double hi_hz, const AugmentConfig& cfg,
                     ParamSource& ps, const std::string& prefix) {
    constexpr size_t kBands = 5;
    Signal acc = x;
    for (size_t j = 0; j < kBands; ++j) {
        const std::string p = prefix + ".band" + std::to_string(j);
        const double width = ps.uniform(p + ".width", 0.05, 0.20) * (hi_hz - lo_hz);
        const double start = ps.uniform(p + ".start", lo_hz, hi_hz - width);
        const double gain = ps.uniform(p + ".gain", cfg.eq_gain_lo, cfg.eq_gain_hi);
        const Signal band = bandpass(x, start, start + width);
        for (size_t i = 0; i < acc.size(); ++i) acc.samples[i] += gain * band.samples[i];
    }
    return normalize(acc);
}

Signal mix_external_noise(const Signal& x, const NoiseBank& bank, ParamSource& ps,
                          const std::string& prefix) {
    if (bank.empty()) fail(Errc::invalid_argument, "external noise: empty bank");
    const size_t pick = ps.choice(prefix + ".clip", bank.clips.size());
    const Signal& clip = bank.clips[pick];

    Signal noise = clip.sample_rate_hz == x.sample_rate_hz ? clip
                                                           : resample(clip, x.sample_rate_hz);
    std::vector<double> seg(x.size());
    if (noise.size() >= x.size()) {
        const auto max_off = static_cast<int64_t>(noise.size() - x.size());
        const auto off = static_cast<size_t>(ps.randint(prefix + ".offset", 0, max_off));
        std::copy(noise.samples.begin() + static_cast<long>(off),
                  noise.samples.begin() + static_cast<long>(off + x.size()), seg.begin());
    } else {
        for (size_t i = 0; i < seg.size(); ++i) seg[i] = noise.samples[i % noise.size()];
    }

    const double snr_db = ps.uniform(prefix + ".snr_db", 5.0, 20.0);
    double p_sig = 0.0, p_noise = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        p_sig += x.samples[i] * x.samples[i];
        p_noise += seg[i] * seg[i];
    }
    if (p_noise <= 1e-30 * static_cast<double>(x.size())) return x; // silent clip
    const double scale = std::sqrt(p_sig / (p_noise * std::pow(10.0, snr_db / 10.0)));

    Signal out = x;
    for (size_t i = 0; i < out.size(); ++i) out.samples[i] += scale * seg[i];
    return normalize(out);
}

namespace {

double draw_pcg_stretch_factor(ParamSource& ps, const std::string& name) {
    static constexpr double factors[] = {1.004, 1.006};
    return factors[ps.choice(name, 2)];
}

} // namespace

AugmentOutcome augment_pair(const PairedRecord& in, const AugmentConfig& cfg,
                            const NoiseBank* bank, ParamSource& ps) {
    AugmentOutcome out;
    out.record = in;
    PairedRecord& rec = out.record;
    const bool have_bank = bank != nullptr && !bank->empty();
    const bool have_pcg = !rec.pcg.samples.empty();
    const bool have_ecg = !rec.ecg.samples.empty();

    bool stretch_fired = false;
    double stretch_factor = 1.0;

    if (have_pcg) {
        if (ps.gate("pcg.hpss", cfg.pcg_hpss))
            rec.pcg = hpss_augment(rec.pcg, ps, &out.hpss_passed_through);
        if (ps.gate("pcg.noise1", cfg.pcg_noise))
            rec.pcg = add_gaussian_noise(rec.pcg, ps, "pcg.noise1");

        if (cfg.stretch_mode == StretchMode::shared) {
            if (ps.gate("stretch", cfg.pcg_stretch)) {
                stretch_fired = true;
                stretch_factor = draw_pcg_stretch_factor(ps, "stretch.factor");
                rec.pcg = time_stretch(rec.pcg, stretch_factor);
            }
        } else {
            if (ps.gate("pcg.stretch", cfg.pcg_stretch)) {
                stretch_fired = true;
                stretch_factor = draw_pcg_stretch_factor(ps, "pcg.stretch.factor");
                rec.pcg = time_stretch(rec.pcg, stretch_factor);
            }
        }

        if (ps.gate("pcg.am", cfg.pcg_am)) rec.pcg = amplitude_modulate(rec.pcg, ps, "pcg.am");
        if (ps.gate("pcg.noise2", cfg.pcg_noise))
            rec.pcg = add_gaussian_noise(rec.pcg, ps, "pcg.noise2");
        if (ps.gate("pcg.eq", cfg.pcg_eq))
            rec.pcg = parametric_eq(rec.pcg, cfg.pcg_eq_lo_hz, cfg.pcg_eq_hi_hz, cfg, ps,
                                    "pcg.eq");
        if (ps.gate("pcg.ext", have_bank ? cfg.pcg_ext_noise : 0.0) && have_bank)
            rec.pcg = mix_external_noise(rec.pcg, *bank, ps, "pcg.ext");
    }

    if (have_ecg) {
        if (ps.gate("ecg.noise", cfg.ecg_noise))
            rec.ecg = add_gaussian_noise(rec.ecg, ps, "ecg.noise");
        if (ps.gate("ecg.wander", cfg.ecg_wander))
            rec.ecg = baseline_wander(rec.ecg, ps, "ecg.wander");

        if (cfg.stretch_mode == StretchMode::shared) {
            // The PCG gate decided; the same factor keeps the pair aligned.
            // An ECG-only record draws the shared gate here instead.
            if (!have_pcg && ps.gate("stretch", cfg.pcg_stretch)) {
                stretch_fired = true;
                stretch_factor = draw_pcg_stretch_factor(ps, "stretch.factor");
            }
            if (stretch_fired) rec.ecg = time_stretch(rec.ecg, stretch_factor);
        } else {
            if (ps.gate("ecg.stretch", cfg.ecg_stretch)) {
                const double f = ps.uniform("ecg.stretch.factor", 1.0, 1.06);
                rec.ecg = time_stretch(rec.ecg, f);
            }
        }

        if (ps.gate("ecg.eq", cfg.ecg_eq))
            rec.ecg = parametric_eq(rec.ecg, cfg.ecg_eq_lo_hz, cfg.ecg_eq_hi_hz, cfg, ps,
                                    "ecg.eq");
        if (ps.gate("ecg.ext", have_bank ? cfg.ecg_ext_noise : 0.0) && have_bank)
            rec.ecg = mix_external_noise(rec.ecg, *bank, ps, "ecg.ext");
    }

    // Cycle boundaries follow the PCG timeline.
    if (stretch_fired && have_pcg) {
        for (size_t& b : rec.boundaries)
            b = static_cast<size_t>(std::llround(static_cast<double>(b) * stretch_factor));
    }
    out.stretch_factor = stretch_fired ? stretch_factor : 1.0;
    return out;
}

} // namespace auscult

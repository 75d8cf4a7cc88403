#include "fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dataset.hpp"
#include "errors.hpp"
#include "signal.hpp"
#include "wav.hpp"

namespace auscult {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Damped oscillation burst starting at sample `at`.
void add_burst(std::vector<double>& x, size_t at, double rate, double freq_hz,
               double amp, double decay_s, double len_s) {
    size_t n = static_cast<size_t>(len_s * rate);
    for (size_t i = 0; i < n && at + i < x.size(); ++i) {
        double t = static_cast<double>(i) / rate;
        // Short attack keeps the onset click-free.
        double attack = std::min(1.0, t / 0.004);
        x[at + i] += amp * attack * std::exp(-t / decay_s) * std::sin(2.0 * kPi * freq_hz * t);
    }
}

// center and width are in samples.
void add_bump(std::vector<double>& x, double center, double width, double amp) {
    long long c = static_cast<long long>(center);
    long long w = static_cast<long long>(3.0 * width);
    for (long long i = c - w; i <= c + w; ++i) {
        if (i < 0 || i >= static_cast<long long>(x.size())) continue;
        double d = (static_cast<double>(i) - center) / width;
        x[static_cast<size_t>(i)] += amp * std::exp(-0.5 * d * d);
    }
}

double band_energy(const Signal& s, double lo, double hi) {
    Signal f = bandpass(s, lo, hi);
    double e = 0;
    for (double v : f.samples) e += v * v;
    return e;
}

} // namespace

PairedRecord synth_record(const std::string& id, Label label, double rate_hz,
                          RandomStream& rng) {
    double bpm = rng.uniform(55.0, 95.0);
    double duration_s = rng.uniform(3.0, 5.0);
    size_t cycle_len = static_cast<size_t>(std::llround(rate_hz * 60.0 / bpm));
    size_t n_cycles = std::max<size_t>(3, static_cast<size_t>(duration_s * rate_hz) / cycle_len);
    size_t total = n_cycles * cycle_len;

    std::vector<double> pcg(total, 0.0);
    std::vector<double> ecg(total, 0.0);

    double s1_freq = rng.uniform(40.0, 90.0);
    double s2_freq = rng.uniform(60.0, 140.0);
    double murmur_lo = rng.uniform(160.0, 250.0);
    double murmur_hi = murmur_lo + rng.uniform(80.0, 140.0);

    for (size_t c = 0; c < n_cycles; ++c) {
        size_t base = c * cycle_len;
        double jitter1 = rng.uniform(0.9, 1.1);
        double jitter2 = rng.uniform(0.9, 1.1);
        size_t s1_at = base + static_cast<size_t>(0.02 * cycle_len);
        size_t s2_at = base + static_cast<size_t>(0.38 * cycle_len);
        add_burst(pcg, s1_at, rate_hz, s1_freq, 1.0 * jitter1, 0.018, 0.09);
        add_burst(pcg, s2_at, rate_hz, s2_freq, 0.7 * jitter2, 0.014, 0.07);

        // Electrogram: sharp R spike flanked by P and T bumps.
        double r_at = static_cast<double>(base) + 0.018 * cycle_len;
        add_bump(ecg, r_at, 0.004 * rate_hz, 1.0);
        add_bump(ecg, r_at - 0.060 * rate_hz, 0.012 * rate_hz, 0.15);
        add_bump(ecg, r_at + 0.120 * rate_hz, 0.025 * rate_hz, 0.30);
    }

    Signal pcg_sig{std::move(pcg), rate_hz};
    Signal ecg_sig{std::move(ecg), rate_hz};

    if (label == Label::abnormal) {
        // Systolic murmur pinned well above the clean record's energy in the
        // 150..400 Hz band so the contrast survives normalization.
        double base_e = band_energy(pcg_sig, 150.0, 400.0);
        std::vector<double> noise = rng.gaussian_vector(total, 0.0, 1.0);
        Signal murmur = bandpass(Signal{std::move(noise), rate_hz}, murmur_lo, murmur_hi);
        size_t sys_a = static_cast<size_t>(0.10 * cycle_len);
        size_t sys_b = static_cast<size_t>(0.36 * cycle_len);
        for (size_t i = 0; i < total; ++i) {
            size_t phase = i % cycle_len;
            if (phase < sys_a || phase >= sys_b) murmur.samples[i] = 0.0;
        }
        double murmur_e = 0;
        for (double v : murmur.samples) murmur_e += v * v;
        if (murmur_e > 0) {
            // +14 dB over the clean in-band energy.
            double target = std::max(base_e, 1e-12) * std::pow(10.0, 14.0 / 10.0);
            double scale = std::sqrt(target / murmur_e);
            for (size_t i = 0; i < total; ++i) pcg_sig.samples[i] += scale * murmur.samples[i];
        }
    }

    PairedRecord rec;
    rec.id = id;
    rec.label = label;
    rec.pcg = normalize(pcg_sig);
    rec.ecg = normalize(ecg_sig);
    for (size_t c = 1; c < n_cycles; ++c) rec.boundaries.push_back(c * cycle_len);
    return rec;
}

namespace {

Signal synth_noise_clip(const std::string& kind, double rate_hz, RandomStream& rng) {
    size_t n = static_cast<size_t>(2.5 * rate_hz);
    std::vector<double> x;
    if (kind == "white") {
        x = rng.gaussian_vector(n, 0.0, 1.0);
    } else if (kind == "hum") {
        x.assign(n, 0.0);
        double phase = rng.uniform(0.0, 2.0 * kPi);
        for (size_t i = 0; i < n; ++i) {
            double t = static_cast<double>(i) / rate_hz;
            x[i] = std::sin(2.0 * kPi * 50.0 * t + phase) +
                   0.4 * std::sin(2.0 * kPi * 100.0 * t + 2.0 * phase) +
                   0.15 * std::sin(2.0 * kPi * 150.0 * t + 3.0 * phase);
        }
    } else { // babble: band-limited noise with a slow wobble
        std::vector<double> raw = rng.gaussian_vector(n, 0.0, 1.0);
        Signal band = bandpass(Signal{std::move(raw), rate_hz}, 80.0, 450.0);
        x = std::move(band.samples);
        double wob = rng.uniform(0.3, 0.9);
        for (size_t i = 0; i < n; ++i)
            x[i] *= 1.0 + 0.5 * std::sin(2.0 * kPi * wob * static_cast<double>(i) / rate_hz);
    }
    return normalize(Signal{std::move(x), rate_hz});
}

} // namespace

FixtureSet make_fixtures(const std::filesystem::path& out_dir, const FixtureSpec& spec,
                         uint64_t seed) {
    std::filesystem::create_directories(out_dir);
    RandomStream root(seed);

    FixtureSet set;
    std::ofstream manifest_out;
    std::filesystem::path manifest_path = out_dir / "manifest.csv";
    manifest_out.open(manifest_path);
    if (!manifest_out) fail(Errc::io, "cannot write " + manifest_path.string());
    manifest_out << "id,pcg,ecg,annotations,label\n";

    for (size_t i = 0; i < spec.count; ++i) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "rec%04zu", i + 1);
        std::string id = idbuf;
        Label label = (i % 7 == 6) ? Label::unsure
                                   : (i % 2 == 1 ? Label::abnormal : Label::normal);
        RandomStream rng = root.split("fixture:" + id);
        PairedRecord rec = synth_record(id, label, spec.rate_hz, rng);

        write_wav(out_dir / (id + ".wav"), rec.pcg, WavFormat::pcm16);
        write_wav(out_dir / (id + "_ecg.wav"), rec.ecg, WavFormat::pcm16);
        write_cycles_csv(out_dir / (id + "_cycles.csv"), rec.boundaries);
        manifest_out << id << "," << id << ".wav," << id << "_ecg.wav," << id
                     << "_cycles.csv,"
                     << (label == Label::normal ? "normal"
                                                : label == Label::abnormal ? "abnormal" : "unsure")
                     << "\n";
        set.records.push_back(std::move(rec));
    }
    manifest_out.close();
    if (!manifest_out) fail(Errc::io, "write failed: " + manifest_path.string());

    if (spec.with_noise_bank) {
        std::filesystem::path noise_dir = out_dir / "noise";
        std::filesystem::create_directories(noise_dir);
        for (const char* kind_name : {"babble", "hum", "white"}) {
            std::string kind = kind_name;
            RandomStream rng = root.split("noise:" + kind);
            Signal clip = synth_noise_clip(kind, spec.rate_hz, rng);
            write_wav(noise_dir / (kind + ".wav"), clip, WavFormat::pcm16);
        }
    }

    set.manifest = manifest_path;
    return set;
}

} // namespace auscult

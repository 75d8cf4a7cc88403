#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "augment.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "oracles.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "signal.hpp"

using namespace auscult;

namespace {

PairedRecord make_record(uint64_t seed, bool with_pcg = true, bool with_ecg = true) {
    RandomStream r(seed);
    PairedRecord rec;
    rec.id = "t";
    if (with_pcg) {
        rec.pcg.sample_rate_hz = 2000.0;
        rec.pcg.samples = oracle::sine_tone(80.0, 2000.0, 4000, 0.8);
        for (double& v : rec.pcg.samples) v += 0.02 * r.gaussian();
        rec.boundaries = {1300, 2600};
    }
    if (with_ecg) {
        rec.ecg.sample_rate_hz = 2000.0;
        rec.ecg.samples = oracle::sine_tone(8.0, 2000.0, 4000, 0.8);
        for (double& v : rec.ecg.samples) v += 0.02 * r.gaussian();
    }
    return rec;
}

NoiseBank make_bank(uint64_t seed) {
    RandomStream r(seed);
    NoiseBank bank;
    bank.clips.push_back(Signal{r.gaussian_vector(5000, 0.0, 1.0), 2000.0});
    bank.clips.push_back(Signal{r.gaussian_vector(900, 0.0, 1.0), 2000.0});
    bank.names = {"long.wav", "short.wav"};
    return bank;
}

void push_uniform(DrawLog& log, const std::string& name, double v) {
    log.draws.push_back(Draw{name, DrawKind::uniform, v, {}});
}

AugmentConfig probs_everywhere(double p) {
    AugmentConfig cfg;
    cfg.pcg_hpss = cfg.pcg_noise = cfg.pcg_stretch = cfg.pcg_am = cfg.pcg_eq =
        cfg.pcg_ext_noise = p;
    cfg.ecg_noise = cfg.ecg_wander = cfg.ecg_stretch = cfg.ecg_eq = cfg.ecg_ext_noise = p;
    return cfg;
}

std::vector<std::string> draw_names(const DrawLog& log) {
    std::vector<std::string> names;
    for (const Draw& d : log.draws) names.push_back(d.name);
    return names;
}

} // namespace

TEST_CASE("gaussian noise adds exactly the logged values") {
    Signal x{oracle::sine_tone(50.0, 2000.0, 600, 0.5), 2000.0};
    DrawLog log;
    RngParamSource ps(RandomStream(1).split("n"), &log);
    Signal y = add_gaussian_noise(x, ps, "n");
    REQUIRE(y.size() == x.size());

    REQUIRE(log.draws.size() == 3);
    CHECK(log.draws[0].name == "n.sigma");
    CHECK(log.draws[0].kind == DrawKind::choice);
    CHECK(log.draws[1].name == "n.mu");
    CHECK(log.draws[2].name == "n.values");
    CHECK(log.draws[2].kind == DrawKind::gaussians);
    REQUIRE(log.draws[2].values.size() == x.size());
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(y.samples[i] == x.samples[i] + log.draws[2].values[i]);

    ReplayParamSource replay(log);
    Signal again = add_gaussian_noise(x, replay, "n");
    CHECK(std::memcmp(y.samples.data(), again.samples.data(), y.size() * sizeof(double)) == 0);
}

TEST_CASE("amplitude modulation follows the two-sine envelope") {
    Signal x{oracle::sine_tone(100.0, 2000.0, 500, 0.7), 2000.0};
    DrawLog log;
    push_uniform(log, "am.b1", 0.2);
    push_uniform(log, "am.c1", 0.3);
    push_uniform(log, "am.d1", 0.5);
    push_uniform(log, "am.b2", 0.05);
    push_uniform(log, "am.c2", 0.01);
    push_uniform(log, "am.d2", 0.25);
    ReplayParamSource ps(log);
    Signal y = amplitude_modulate(x, ps, "am");
    REQUIRE(y.size() == x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / 2000.0;
        const double env = 1.0 + 0.2 * std::sin(2.0 * M_PI * 0.3 * t + 0.5) +
                           0.05 * std::sin(2.0 * M_PI * 0.01 * t + 0.25);
        CHECK(y.samples[i] == doctest::Approx(x.samples[i] * env).epsilon(1e-12));
    }
}

TEST_CASE("baseline wander adds the two-sine directly") {
    Signal x{oracle::sine_tone(5.0, 2000.0, 500, 0.7), 2000.0};
    DrawLog log;
    push_uniform(log, "w.b1", 0.15);
    push_uniform(log, "w.c1", 0.2);
    push_uniform(log, "w.d1", 0.1);
    push_uniform(log, "w.b2", 0.02);
    push_uniform(log, "w.c2", 0.005);
    push_uniform(log, "w.d2", 0.9);
    ReplayParamSource ps(log);
    Signal y = baseline_wander(x, ps, "w");
    for (size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / 2000.0;
        const double add = 0.15 * std::sin(2.0 * M_PI * 0.2 * t + 0.1) +
                           0.02 * std::sin(2.0 * M_PI * 0.005 * t + 0.9);
        CHECK(y.samples[i] == doctest::Approx(x.samples[i] + add).epsilon(1e-12));
    }
}

TEST_CASE("parametric eq draws bands inside the range and renormalizes") {
    Signal x{oracle::sine_tone(120.0, 2000.0, 3000, 0.6), 2000.0};
    AugmentConfig cfg;
    DrawLog log;
    RngParamSource ps(RandomStream(3).split("eq"), &log);
    Signal y = parametric_eq(x, 2.0, 500.0, cfg, ps, "eq");
    REQUIRE(y.size() == x.size());

    double peak = 0;
    for (double v : y.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));

    REQUIRE(log.draws.size() == 15); // 5 bands x (width, start, gain)
    for (size_t j = 0; j < 5; ++j) {
        const Draw& width = log.draws[3 * j];
        const Draw& start = log.draws[3 * j + 1];
        const Draw& gain = log.draws[3 * j + 2];
        CHECK(width.name == "eq.band" + std::to_string(j) + ".width");
        const double w_hz = width.scalar * (500.0 - 2.0);
        CHECK(width.scalar >= 0.05);
        CHECK(width.scalar < 0.20);
        CHECK(start.scalar >= 2.0);
        CHECK(start.scalar + w_hz <= 500.0);
        CHECK(gain.scalar >= cfg.eq_gain_lo);
        CHECK(gain.scalar < cfg.eq_gain_hi);
    }

    ReplayParamSource replay(log);
    Signal again = parametric_eq(x, 2.0, 500.0, cfg, replay, "eq");
    CHECK(std::memcmp(y.samples.data(), again.samples.data(), y.size() * sizeof(double)) == 0);
}

TEST_CASE("external noise mixing hits the drawn snr before renormalizing") {
    Signal x{oracle::sine_tone(90.0, 2000.0, 2500, 0.7), 2000.0};
    NoiseBank bank = make_bank(4);

    DrawLog log;
    log.draws.push_back(Draw{"ext.clip", DrawKind::choice, 0.0, {}});
    log.draws.push_back(Draw{"ext.offset", DrawKind::randint, 100.0, {}});
    push_uniform(log, "ext.snr_db", 10.0);
    ReplayParamSource ps(log);
    Signal y = mix_external_noise(x, bank, ps, "ext");
    REQUIRE(y.size() == x.size());

    // Re-derive: clip 0 at offset 100, scaled for 10 dB, then normalized.
    std::vector<double> seg(x.size());
    std::copy(bank.clips[0].samples.begin() + 100,
              bank.clips[0].samples.begin() + 100 + static_cast<long>(x.size()), seg.begin());
    double p_sig = 0, p_noise = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        p_sig += x.samples[i] * x.samples[i];
        p_noise += seg[i] * seg[i];
    }
    const double scale = std::sqrt(p_sig / (p_noise * std::pow(10.0, 1.0)));
    Signal mixed = x;
    for (size_t i = 0; i < x.size(); ++i) mixed.samples[i] += scale * seg[i];
    Signal expect = normalize(mixed);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(y.samples[i] == doctest::Approx(expect.samples[i]).epsilon(1e-12));
}

TEST_CASE("short noise clips loop instead of drawing an offset") {
    Signal x{oracle::sine_tone(90.0, 2000.0, 2500, 0.7), 2000.0};
    NoiseBank bank = make_bank(5);

    DrawLog crafted;
    crafted.draws.push_back(Draw{"ext.clip", DrawKind::choice, 1.0, {}});
    push_uniform(crafted, "ext.snr_db", 8.0);
    ReplayParamSource replay(crafted);
    Signal y = mix_external_noise(x, bank, replay, "ext");
    CHECK(replay.exhausted()); // no offset draw on the loop path
    REQUIRE(y.size() == x.size());

    std::vector<double> seg(x.size());
    for (size_t i = 0; i < seg.size(); ++i)
        seg[i] = bank.clips[1].samples[i % bank.clips[1].size()];
    double p_sig = 0, p_noise = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        p_sig += x.samples[i] * x.samples[i];
        p_noise += seg[i] * seg[i];
    }
    const double scale = std::sqrt(p_sig / (p_noise * std::pow(10.0, 0.8)));
    Signal mixed = x;
    for (size_t i = 0; i < x.size(); ++i) mixed.samples[i] += scale * seg[i];
    Signal expect = normalize(mixed);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(y.samples[i] == doctest::Approx(expect.samples[i]).epsilon(1e-12));
}

TEST_CASE("the chain is deterministic per seed") {
    PairedRecord rec = make_record(10);
    NoiseBank bank = make_bank(11);
    AugmentConfig cfg;
    auto run = [&](uint64_t seed) {
        RngParamSource ps(RandomStream(seed).split("aug"));
        return augment_pair(rec, cfg, &bank, ps);
    };
    AugmentOutcome a = run(1), b = run(1), c = run(2);
    REQUIRE(a.record.pcg.size() == b.record.pcg.size());
    CHECK(std::memcmp(a.record.pcg.samples.data(), b.record.pcg.samples.data(),
                      a.record.pcg.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.record.ecg.samples.data(), b.record.ecg.samples.data(),
                      a.record.ecg.size() * sizeof(double)) == 0);
    CHECK(a.record.boundaries == b.record.boundaries);

    bool differs = a.record.pcg.size() != c.record.pcg.size();
    for (size_t i = 0; !differs && i < a.record.pcg.size(); ++i)
        differs = a.record.pcg.samples[i] != c.record.pcg.samples[i];
    CHECK(differs);
}

TEST_CASE("a logged chain replays bit for bit") {
    PairedRecord rec = make_record(12);
    NoiseBank bank = make_bank(13);
    AugmentConfig cfg = probs_everywhere(0.5);
    DrawLog log;
    RngParamSource ps(RandomStream(3).split("aug"), &log);
    AugmentOutcome live = augment_pair(rec, cfg, &bank, ps);

    ReplayParamSource replay(log);
    AugmentOutcome again = augment_pair(rec, cfg, &bank, replay);
    CHECK(replay.exhausted());
    REQUIRE(live.record.pcg.size() == again.record.pcg.size());
    CHECK(std::memcmp(live.record.pcg.samples.data(), again.record.pcg.samples.data(),
                      live.record.pcg.size() * sizeof(double)) == 0);
    REQUIRE(live.record.ecg.size() == again.record.ecg.size());
    CHECK(std::memcmp(live.record.ecg.samples.data(), again.record.ecg.samples.data(),
                      live.record.ecg.size() * sizeof(double)) == 0);
    CHECK(live.record.boundaries == again.record.boundaries);
    CHECK(live.stretch_factor == again.stretch_factor);
    CHECK(live.hpss_passed_through == again.hpss_passed_through);
}

TEST_CASE("with zero probabilities the log is exactly the gate sequence") {
    PairedRecord rec = make_record(14);
    AugmentConfig cfg = probs_everywhere(0.0);
    DrawLog log;
    RngParamSource ps(RandomStream(4).split("aug"), &log);
    AugmentOutcome out = augment_pair(rec, cfg, nullptr, ps);

    const std::vector<std::string> expect{
        "pcg.hpss", "pcg.noise1", "stretch",    "pcg.am",  "pcg.noise2", "pcg.eq",
        "pcg.ext",  "ecg.noise",  "ecg.wander", "ecg.eq",  "ecg.ext",
    };
    CHECK(draw_names(log) == expect);
    for (const Draw& d : log.draws) {
        CHECK(d.kind == DrawKind::gate);
        CHECK(d.scalar == 0.0);
    }
    CHECK(out.stretch_factor == 1.0);
    CHECK(out.record.boundaries == rec.boundaries);
    CHECK(std::memcmp(out.record.pcg.samples.data(), rec.pcg.samples.data(),
                      rec.pcg.size() * sizeof(double)) == 0);
}

TEST_CASE("a missing bank still draws the external gates so the log keeps shape") {
    PairedRecord rec = make_record(15);
    AugmentConfig cfg = probs_everywhere(0.0);

    DrawLog with_bank, without_bank;
    NoiseBank bank = make_bank(16);
    {
        RngParamSource ps(RandomStream(7).split("aug"), &with_bank);
        augment_pair(rec, cfg, &bank, ps);
    }
    {
        RngParamSource ps(RandomStream(7).split("aug"), &without_bank);
        augment_pair(rec, cfg, nullptr, ps);
    }
    CHECK(draw_names(with_bank) == draw_names(without_bank));
}

TEST_CASE("shared stretch moves both channels and the boundaries together") {
    PairedRecord rec = make_record(17);
    AugmentConfig cfg = probs_everywhere(0.0);
    cfg.pcg_stretch = 1.0;
    cfg.stretch_mode = StretchMode::shared;

    DrawLog log;
    RngParamSource ps(RandomStream(8).split("aug"), &log);
    AugmentOutcome out = augment_pair(rec, cfg, nullptr, ps);

    const double f = out.stretch_factor;
    CHECK((f == 1.004 || f == 1.006));
    const auto expect_len = [&](size_t n) {
        return static_cast<size_t>(std::llround(static_cast<double>(n) * f));
    };
    CHECK(out.record.pcg.size() == expect_len(rec.pcg.size()));
    CHECK(out.record.ecg.size() == expect_len(rec.ecg.size()));
    REQUIRE(out.record.boundaries.size() == rec.boundaries.size());
    for (size_t i = 0; i < rec.boundaries.size(); ++i)
        CHECK(out.record.boundaries[i] ==
              static_cast<size_t>(std::llround(static_cast<double>(rec.boundaries[i]) * f)));

    bool saw_factor = false;
    for (const Draw& d : log.draws)
        if (d.name == "stretch.factor") saw_factor = true;
    CHECK(saw_factor);
}

TEST_CASE("independent stretch draws a continuous ecg factor") {
    PairedRecord rec = make_record(18);
    AugmentConfig cfg = probs_everywhere(0.0);
    cfg.stretch_mode = StretchMode::independent;
    cfg.pcg_stretch = 1.0;
    cfg.ecg_stretch = 1.0;

    DrawLog log;
    RngParamSource ps(RandomStream(9).split("aug"), &log);
    AugmentOutcome out = augment_pair(rec, cfg, nullptr, ps);

    CHECK((out.stretch_factor == 1.004 || out.stretch_factor == 1.006));
    double ecg_factor = 0.0;
    for (const Draw& d : log.draws)
        if (d.name == "ecg.stretch.factor") ecg_factor = d.scalar;
    CHECK(ecg_factor >= 1.0);
    CHECK(ecg_factor < 1.06);
    CHECK(out.record.ecg.size() ==
          static_cast<size_t>(std::llround(static_cast<double>(rec.ecg.size()) * ecg_factor)));
    // Boundaries follow the PCG factor, not the ECG one.
    CHECK(out.record.boundaries[0] ==
          static_cast<size_t>(
              std::llround(static_cast<double>(rec.boundaries[0]) * out.stretch_factor)));
}

TEST_CASE("an ecg-only record draws the shared gate in the ecg branch") {
    PairedRecord rec = make_record(19, false, true);
    AugmentConfig cfg = probs_everywhere(0.0);
    cfg.pcg_stretch = 1.0; // the shared stretch probability
    cfg.stretch_mode = StretchMode::shared;

    DrawLog log;
    RngParamSource ps(RandomStream(10).split("aug"), &log);
    AugmentOutcome out = augment_pair(rec, cfg, nullptr, ps);

    const std::vector<std::string> expect{"ecg.noise", "ecg.wander", "stretch",
                                          "stretch.factor", "ecg.eq", "ecg.ext"};
    CHECK(draw_names(log) == expect);
    CHECK((out.stretch_factor == 1.004 || out.stretch_factor == 1.006));
    CHECK(out.record.ecg.size() ==
          static_cast<size_t>(
              std::llround(static_cast<double>(rec.ecg.size()) * out.stretch_factor)));
    CHECK(out.record.pcg.samples.empty());
}

TEST_CASE("a pcg-only record never touches ecg draws") {
    PairedRecord rec = make_record(20, true, false);
    AugmentConfig cfg = probs_everywhere(1.0);
    NoiseBank bank = make_bank(21);
    DrawLog log;
    RngParamSource ps(RandomStream(11).split("aug"), &log);
    augment_pair(rec, cfg, &bank, ps);
    for (const Draw& d : log.draws) CHECK(d.name.rfind("ecg", 0) != 0);
}

TEST_CASE("every stage firing still yields a finite usable record") {
    PairedRecord rec = make_record(22);
    AugmentConfig cfg = probs_everywhere(1.0);
    NoiseBank bank = make_bank(23);
    DrawLog log;
    RngParamSource ps(RandomStream(12).split("aug"), &log);
    AugmentOutcome out = augment_pair(rec, cfg, &bank, ps);

    REQUIRE(!out.record.pcg.samples.empty());
    REQUIRE(!out.record.ecg.samples.empty());
    for (double v : out.record.pcg.samples) CHECK(std::isfinite(v));
    for (double v : out.record.ecg.samples) CHECK(std::isfinite(v));
    CHECK((out.stretch_factor == 1.004 || out.stretch_factor == 1.006));
    // Gates all fired.
    for (const Draw& d : log.draws)
        if (d.kind == DrawKind::gate) CHECK(d.scalar == 1.0);
    // Boundaries still strictly increasing and inside the signal.
    for (size_t i = 0; i < out.record.boundaries.size(); ++i) {
        if (i) CHECK(out.record.boundaries[i] > out.record.boundaries[i - 1]);
        CHECK(out.record.boundaries[i] < out.record.pcg.size());
    }
}

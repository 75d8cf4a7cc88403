#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "dataset.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "signal.hpp"
#include "wav.hpp"

using namespace auscult;
namespace fs = std::filesystem;

namespace {

fs::path tmpdir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "auscult_io_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

std::vector<uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

template <typename F>
void expect_code(F&& fn, Errc code) {
    try {
        fn();
        FAIL_CHECK("expected an Error");
    } catch (const Error& e) {
        CHECK(e.code() == code);
    }
}

// Minimal WAV byte builder for malformed-file tests.
struct WavBuilder {
    std::vector<uint8_t> b;
    WavBuilder() {
        tag("RIFF");
        u32(0);
        tag("WAVE");
    }
    void tag(const char* t) { b.insert(b.end(), t, t + 4); }
    void u16(uint16_t v) {
        b.push_back(static_cast<uint8_t>(v));
        b.push_back(static_cast<uint8_t>(v >> 8));
    }
    void u32(uint32_t v) {
        u16(static_cast<uint16_t>(v));
        u16(static_cast<uint16_t>(v >> 16));
    }
    void fmt(uint16_t codec, uint16_t channels, uint32_t rate, uint16_t bits) {
        tag("fmt ");
        u32(16);
        u16(codec);
        u16(channels);
        u32(rate);
        u32(rate * channels * bits / 8);
        u16(static_cast<uint16_t>(channels * bits / 8));
        u16(bits);
    }
    void chunk(const char* t, const std::vector<uint8_t>& payload) {
        tag(t);
        u32(static_cast<uint32_t>(payload.size()));
        b.insert(b.end(), payload.begin(), payload.end());
        if (payload.size() % 2) b.push_back(0);
    }
    void finish(const fs::path& p) {
        const uint32_t riff = static_cast<uint32_t>(b.size()) - 8;
        b[4] = static_cast<uint8_t>(riff);
        b[5] = static_cast<uint8_t>(riff >> 8);
        b[6] = static_cast<uint8_t>(riff >> 16);
        b[7] = static_cast<uint8_t>(riff >> 24);
        std::ofstream out(p, std::ios::binary);
        out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    }
};

} // namespace

TEST_CASE("pcm16 write/read stays within one LSB") {
    fs::path d = tmpdir("pcm16");
    RandomStream rng(1);
    Signal s;
    s.sample_rate_hz = 2000.0;
    s.samples.resize(777);
    for (double& v : s.samples) v = rng.uniform(-0.99, 0.99);

    write_wav(d / "a.wav", s, WavFormat::pcm16);
    Signal back = read_wav(d / "a.wav");
    REQUIRE(back.size() == s.size());
    CHECK(back.sample_rate_hz == 2000.0);
    for (size_t i = 0; i < s.size(); ++i)
        CHECK(std::abs(back.samples[i] - s.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("pcm16 clamps out-of-range samples") {
    fs::path d = tmpdir("clamp");
    Signal s{{2.0, -2.0, 1.0, -1.0}, 1000.0};
    write_wav(d / "c.wav", s, WavFormat::pcm16);
    Signal back = read_wav(d / "c.wav");
    CHECK(back.samples[0] == doctest::Approx(32767.0 / 32768.0));
    CHECK(back.samples[1] == -1.0);
    CHECK(back.samples[2] == doctest::Approx(32767.0 / 32768.0));
    CHECK(back.samples[3] == -1.0);
}

TEST_CASE("float32 write/read is bitwise and carries a fact chunk") {
    fs::path d = tmpdir("f32");
    RandomStream rng(2);
    Signal s;
    s.sample_rate_hz = 4000.0;
    s.samples.resize(333);
    // Store float-representable values so the double round trip is exact.
    for (double& v : s.samples) v = static_cast<double>(static_cast<float>(rng.gaussian()));

    write_wav(d / "f.wav", s, WavFormat::float32);
    Signal back = read_wav(d / "f.wav");
    REQUIRE(back.size() == s.size());
    CHECK(std::memcmp(back.samples.data(), s.samples.data(), s.size() * sizeof(double)) == 0);

    std::vector<uint8_t> raw = slurp(d / "f.wav");
    const std::string rs(raw.begin(), raw.end());
    CHECK(rs.find("fact") != std::string::npos);
    // Codec tag 3 (IEEE float) right after the fmt chunk header.
    CHECK(raw[20] == 3);
    CHECK(raw[21] == 0);
}

TEST_CASE("the reader walks unknown chunks and odd padding") {
    fs::path d = tmpdir("chunks");
    WavBuilder w;
    w.chunk("junk", {1, 2, 3}); // odd size forces a pad byte
    w.fmt(1, 1, 1000, 16);
    w.chunk("data", {0x00, 0x40, 0x00, 0xC0}); // +0.5, -0.5
    w.chunk("LIST", {9, 9});                   // trailing chunk after data
    w.finish(d / "x.wav");

    Signal s = read_wav(d / "x.wav");
    REQUIRE(s.size() == 2);
    CHECK(s.sample_rate_hz == 1000.0);
    CHECK(s.samples[0] == doctest::Approx(16384.0 / 32768.0));
    CHECK(s.samples[1] == doctest::Approx(-16384.0 / 32768.0));
}

TEST_CASE("malformed wav files raise typed errors") {
    fs::path d = tmpdir("badwav");

    expect_code([&] { read_wav(d / "missing.wav"); }, Errc::io);

    write_text(d / "notriff.wav", "this is not a wave file at all");
    expect_code([&] { read_wav(d / "notriff.wav"); }, Errc::format);

    {
        WavBuilder w;
        w.fmt(1, 2, 1000, 16); // stereo
        w.chunk("data", {0, 0, 0, 0});
        w.finish(d / "stereo.wav");
        expect_code([&] { read_wav(d / "stereo.wav"); }, Errc::format);
    }
    {
        WavBuilder w;
        w.fmt(7, 1, 1000, 8); // mu-law
        w.chunk("data", {0, 0});
        w.finish(d / "mulaw.wav");
        expect_code([&] { read_wav(d / "mulaw.wav"); }, Errc::format);
    }
    {
        WavBuilder w;
        w.fmt(1, 1, 1000, 16);
        w.chunk("data", {0, 0, 0, 0});
        w.finish(d / "trunc.wav");
        std::vector<uint8_t> raw = slurp(d / "trunc.wav");
        raw.resize(raw.size() - 2);
        std::ofstream out(d / "trunc.wav", std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
        out.close();
        expect_code([&] { read_wav(d / "trunc.wav"); }, Errc::format);
    }
    {
        WavBuilder w;
        w.chunk("data", {0, 0}); // no fmt chunk
        w.finish(d / "nofmt.wav");
        expect_code([&] { read_wav(d / "nofmt.wav"); }, Errc::format);
    }

    Signal s{{0.0}, 1000.0};
    expect_code([&] { write_wav(d / "nosuchdir" / "x.wav", s, WavFormat::pcm16); }, Errc::io);
    Signal norate{{0.0}, 0.0};
    expect_code([&] { write_wav(d / "norate.wav", norate, WavFormat::pcm16); },
                Errc::invalid_argument);
}

TEST_CASE("manifest parsing round trips and errors carry line numbers") {
    fs::path d = tmpdir("manifest");
    write_text(d / "m.csv",
               "id,pcg,ecg,annotations,label\n"
               "r1,r1.wav,r1_ecg.wav,r1_cycles.csv,normal\n"
               "\n"
               "r2,r2.wav,,,abnormal\n"
               "r3,,r3_ecg.wav,,unsure\n");
    auto rows = read_manifest(d / "m.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].id == "r1");
    CHECK(rows[0].label == Label::normal);
    CHECK(rows[1].pcg == "r2.wav");
    CHECK(rows[1].ecg.empty());
    CHECK(rows[1].label == Label::abnormal);
    CHECK(rows[2].pcg.empty());
    CHECK(rows[2].label == Label::unsure);

    write_text(d / "hdr.csv", "id,pcg,ecg,label\nr1,a.wav,,normal\n");
    expect_code([&] { read_manifest(d / "hdr.csv"); }, Errc::format);

    write_text(d / "short.csv", "id,pcg,ecg,annotations,label\nr1,a.wav,normal\n");
    try {
        read_manifest(d / "short.csv");
        FAIL_CHECK("expected an Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("short.csv:2") != std::string::npos);
    }

    write_text(d / "noid.csv", "id,pcg,ecg,annotations,label\n,a.wav,,,normal\n");
    expect_code([&] { read_manifest(d / "noid.csv"); }, Errc::format);

    write_text(d / "nochan.csv", "id,pcg,ecg,annotations,label\nr1,,,,normal\n");
    expect_code([&] { read_manifest(d / "nochan.csv"); }, Errc::format);

    write_text(d / "badlabel.csv", "id,pcg,ecg,annotations,label\nr1,a.wav,,,sideways\n");
    expect_code([&] { read_manifest(d / "badlabel.csv"); }, Errc::format);

    expect_code([&] { read_manifest(d / "missing.csv"); }, Errc::io);
}

TEST_CASE("cycle boundary files round trip and validate") {
    fs::path d = tmpdir("cycles");
    std::vector<size_t> bounds{100, 250, 900};
    write_cycles_csv(d / "b.csv", bounds);
    CHECK(read_cycles_csv(d / "b.csv") == bounds);

    write_text(d / "empty.csv", "");
    CHECK(read_cycles_csv(d / "empty.csv").empty());

    write_text(d / "dec.csv", "100\n250\n200\n");
    expect_code([&] { read_cycles_csv(d / "dec.csv"); }, Errc::format);

    write_text(d / "eq.csv", "100\n100\n");
    expect_code([&] { read_cycles_csv(d / "eq.csv"); }, Errc::format);

    write_text(d / "neg.csv", "-5\n");
    expect_code([&] { read_cycles_csv(d / "neg.csv"); }, Errc::format);

    write_text(d / "junk.csv", "100x\n");
    try {
        read_cycles_csv(d / "junk.csv");
        FAIL_CHECK("expected an Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("junk.csv:1") != std::string::npos);
    }

    write_text(d / "word.csv", "banana\n");
    expect_code([&] { read_cycles_csv(d / "word.csv"); }, Errc::format);
}

TEST_CASE("prediction and label tables parse and validate") {
    fs::path d = tmpdir("tables");
    write_text(d / "p.csv", "id,score\na,0.25\na,0.75\nb,0.4\n");
    auto preds = read_predictions_csv(d / "p.csv");
    REQUIRE(preds.size() == 3);
    CHECK(preds[0] == std::pair<std::string, double>("a", 0.25));
    CHECK(preds[2].first == "b");

    write_text(d / "p_bad.csv", "id,score\na,zero\n");
    expect_code([&] { read_predictions_csv(d / "p_bad.csv"); }, Errc::format);
    write_text(d / "p_junk.csv", "id,score\na,0.5extra\n");
    expect_code([&] { read_predictions_csv(d / "p_junk.csv"); }, Errc::format);
    write_text(d / "p_hdr.csv", "subject,score\na,0.5\n");
    expect_code([&] { read_predictions_csv(d / "p_hdr.csv"); }, Errc::format);

    write_text(d / "l.csv", "id,label\na,abnormal\nb,normal\n");
    auto labels = read_labels_csv(d / "l.csv");
    REQUIRE(labels.size() == 2);
    CHECK(labels.at("a") == 1);
    CHECK(labels.at("b") == 0);

    write_text(d / "l_dup.csv", "id,label\na,normal\na,abnormal\n");
    expect_code([&] { read_labels_csv(d / "l_dup.csv"); }, Errc::format);
    write_text(d / "l_unsure.csv", "id,label\na,unsure\n");
    expect_code([&] { read_labels_csv(d / "l_unsure.csv"); }, Errc::format);
}

TEST_CASE("the noise bank loads clips sorted by file name") {
    fs::path d = tmpdir("bank");
    write_wav(d / "c.wav", Signal{std::vector<double>(30, 0.1), 1000.0}, WavFormat::pcm16);
    write_wav(d / "a.wav", Signal{std::vector<double>(10, 0.1), 1000.0}, WavFormat::pcm16);
    write_wav(d / "b.wav", Signal{std::vector<double>(20, 0.1), 1000.0}, WavFormat::pcm16);
    write_text(d / "readme.txt", "not audio");

    NoiseBank bank = load_noise_bank(d);
    REQUIRE(bank.clips.size() == 3);
    CHECK(bank.names == std::vector<std::string>{"a.wav", "b.wav", "c.wav"});
    CHECK(bank.clips[0].size() == 10);
    CHECK(bank.clips[1].size() == 20);
    CHECK(bank.clips[2].size() == 30);

    expect_code([&] { load_noise_bank(d / "nope"); }, Errc::io);
}

TEST_CASE("record loading rescales annotations with the sample rate") {
    fs::path d = tmpdir("loadrec");
    Signal s;
    s.sample_rate_hz = 4000.0;
    s.samples = oracle::sine_tone(50.0, 4000.0, 8000, 0.25);
    write_wav(d / "x.wav", s, WavFormat::float32);
    write_text(d / "b.csv", "4000\n");

    ManifestRow row;
    row.id = "x";
    row.pcg = "x.wav";
    row.annotations = "b.csv";
    PairedRecord rec = load_record(row, d, 2000.0);
    REQUIRE(rec.pcg.size() == 4000);
    CHECK(rec.pcg.sample_rate_hz == 2000.0);
    CHECK(rec.boundaries == std::vector<size_t>{2000});
    double peak = 0;
    for (double v : rec.pcg.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rec.ecg.samples.empty());

    // A boundary that lands at or past the resampled end is rejected.
    write_text(d / "b.csv", "7999\n");
    expect_code([&] { load_record(row, d, 2000.0); }, Errc::format);
}

TEST_CASE("config defaults round trip through json") {
    fs::path d = tmpdir("config");
    ToolConfig def = default_config();
    std::string first = config_to_json(def);
    write_text(d / "c.json", first);
    ToolConfig loaded = load_config(d / "c.json");
    CHECK(config_to_json(loaded) == first);
    CHECK(loaded.augment.pcg_hpss == def.augment.pcg_hpss);
    CHECK(loaded.train.lr == def.train.lr);
    CHECK(loaded.sample_stochastic == def.sample_stochastic);
}

TEST_CASE("config loading applies partial documents over defaults") {
    fs::path d = tmpdir("config_partial");
    write_text(d / "c.json",
               R"({"version":1,"train":{"steps":10},"augment":{"pcg_hpss":0.5}})");
    ToolConfig cfg = load_config(d / "c.json");
    CHECK(cfg.train.steps == 10);
    CHECK(cfg.augment.pcg_hpss == 0.5);
    // Everything else keeps its default.
    ToolConfig def = default_config();
    CHECK(cfg.train.lr == def.train.lr);
    CHECK(cfg.augment.pcg_noise == def.augment.pcg_noise);
}

TEST_CASE("config rejects unknown keys and bad values") {
    fs::path d = tmpdir("config_bad");
    auto bad = [&](const char* name, const std::string& body, Errc code) {
        write_text(d / name, body);
        expect_code([&] { load_config(d / name); }, code);
    };
    bad("unk.json", R"({"version":1,"bogus":{}})", Errc::config);
    bad("unk2.json", R"({"version":1,"augment":{"bogus":1}})", Errc::config);
    bad("unk3.json", R"({"version":1,"train":{"bogus":1}})", Errc::config);
    bad("ver.json", R"({"version":2})", Errc::config);
    bad("nover.json", R"({"augment":{}})", Errc::config);
    bad("prob.json", R"({"version":1,"augment":{"pcg_hpss":1.5}})", Errc::config);
    bad("seg.json", R"({"version":1,"train":{"segment_len":100}})", Errc::config);
    bad("loss.json", R"({"version":1,"train":{"loss":"huber"}})", Errc::config);
    bad("lr.json", R"({"version":1,"train":{"lr":0}})", Errc::config);
    bad("gain.json", R"({"version":1,"augment":{"eq_gain_lo":0.5,"eq_gain_hi":0.2}})",
        Errc::config);
    bad("stop.json", R"({"version":1,"train":{"early_stop_fraction":1.0}})", Errc::config);
    bad("stoch.json", R"({"version":1,"sample":{"stochastic":"yes"}})", Errc::config);
    bad("mode.json", R"({"version":1,"augment":{"stretch_mode":"both"}})", Errc::config);
    bad("notjson.json", "{nope", Errc::format);
    expect_code([&] { load_config(d / "missing.json"); }, Errc::io);
}

TEST_CASE("fixture generation is byte-identical for a seed") {
    fs::path d1 = tmpdir("fx1");
    fs::path d2 = tmpdir("fx2");
    FixtureSpec spec;
    spec.count = 4;
    make_fixtures(d1, spec, 99);
    make_fixtures(d2, spec, 99);

    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(d1))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), d1));
    std::sort(rel.begin(), rel.end());
    REQUIRE(!rel.empty());
    // 4 records x 3 files + manifest + 3 noise clips.
    CHECK(rel.size() == 16);
    for (const auto& r : rel) {
        CAPTURE(r.string());
        CHECK(slurp(d1 / r) == slurp(d2 / r));
    }

    fs::path d3 = tmpdir("fx3");
    make_fixtures(d3, spec, 100);
    bool any_diff = false;
    for (const auto& r : rel)
        if (slurp(d1 / r) != slurp(d3 / r)) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("fixture labels cycle and murmurs land in their band") {
    fs::path d = tmpdir("fxlabels");
    FixtureSpec spec;
    spec.count = 8;
    spec.with_noise_bank = false;
    FixtureSet set = make_fixtures(d, spec, 5);
    REQUIRE(set.records.size() == 8);

    const Label want[] = {Label::normal, Label::abnormal, Label::normal, Label::abnormal,
                          Label::normal, Label::abnormal, Label::unsure, Label::abnormal};
    for (size_t i = 0; i < 8; ++i) CHECK(set.records[i].label == want[i]);

    auto rows = read_manifest(set.manifest);
    REQUIRE(rows.size() == 8);
    for (size_t i = 0; i < 8; ++i) CHECK(rows[i].label == want[i]);

    // The murmur concentrates energy in 150..400 Hz; clean records do not.
    auto band_fraction = [](const Signal& s) {
        const size_t n = 4096;
        REQUIRE(s.size() >= n);
        std::vector<double> x(s.samples.begin(), s.samples.begin() + n);
        auto spec_bins = oracle::dft_real(x);
        double in_band = 0, total = 0;
        for (size_t k = 0; k < spec_bins.size(); ++k) {
            const double f = static_cast<double>(k) * s.sample_rate_hz / n;
            const double w = (k == 0 || k == n / 2) ? 1.0 : 2.0;
            const double p = std::norm(spec_bins[k]);
            total += w * p;
            if (f >= 150.0 && f <= 400.0) in_band += w * p;
        }
        return in_band / total;
    };
    const double f_normal = band_fraction(set.records[0].pcg);
    const double f_abnormal = band_fraction(set.records[1].pcg);
    CHECK(f_abnormal > 5.0 * f_normal);
    CHECK(f_abnormal > 0.1);

    // Boundaries are interior multiples of one cycle length.
    for (const auto& rec : set.records) {
        REQUIRE(!rec.boundaries.empty());
        const size_t cycle = rec.boundaries[0];
        for (size_t i = 0; i < rec.boundaries.size(); ++i)
            CHECK(rec.boundaries[i] == cycle * (i + 1));
        CHECK(rec.boundaries.back() < rec.pcg.size());
        CHECK(rec.pcg.size() == cycle * (rec.boundaries.size() + 1));
    }
}

TEST_CASE("augment sidecars replay to the written bytes") {
    fs::path fx = tmpdir("aug_fx");
    fs::path out = tmpdir("aug_out");
    FixtureSpec spec;
    spec.count = 2;
    FixtureSet set = make_fixtures(fx, spec, 31);

    AugmentJob job;
    job.manifest = set.manifest;
    job.out_dir = out;
    job.noise_dir = fx / "noise";
    job.config = default_config();
    job.seed = 77;
    job.copies = 1;
    job.fragment_seconds = 0.5;
    job.fragments = 2;
    AugmentSummary summary = run_augment(job);
    CHECK(summary.records == 2);
    CHECK(summary.copies_written == 2);
    CHECK(summary.fragments_written == 4);

    // Sidecar invariants.
    nlohmann::json side;
    {
        std::ifstream in(out / "rec0001__aug0.json");
        REQUIRE(in.good());
        in >> side;
    }
    CHECK(side.at("version") == 1);
    CHECK(side.at("record_id") == "rec0001");
    CHECK(side.at("seed") == 77);
    CHECK(side.at("stream") == nlohmann::json::array({"record:rec0001", "copy:0"}));
    CHECK(side.at("noise_bank") == nlohmann::json::array({"babble.wav", "hum.wav", "white.wav"}));
    CHECK(side.at("draws").is_array());
    CHECK(!side.at("draws").empty());
    REQUIRE(side.at("outputs").contains("pcg"));
    REQUIRE(side.at("outputs").contains("ecg"));
    REQUIRE(side.at("outputs").contains("fragments"));

    // Replay the draw log through the augmentation and compare to the files.
    auto rows = read_manifest(set.manifest);
    PairedRecord rec = load_record(rows[0], fx, 2000.0);
    NoiseBank bank = load_noise_bank(fx / "noise");
    DrawLog log = sidecar_draw_log(out / "rec0001__aug0.json");
    ReplayParamSource replay(log);
    AugmentOutcome redo = augment_pair(rec, job.config.augment, &bank, replay);
    CHECK(replay.exhausted());
    CHECK(redo.hpss_passed_through == side.at("hpss_passed_through").get<bool>());
    CHECK(redo.stretch_factor == side.at("stretch_factor").get<double>());

    Signal written = read_wav(out / side.at("outputs").at("pcg").get<std::string>());
    REQUIRE(written.size() == redo.record.pcg.size());
    for (size_t i = 0; i < written.size(); ++i)
        CHECK(written.samples[i] ==
              static_cast<double>(static_cast<float>(redo.record.pcg.samples[i])));

    Signal ecg_written = read_wav(out / side.at("outputs").at("ecg").get<std::string>());
    REQUIRE(ecg_written.size() == redo.record.ecg.size());
    for (size_t i = 0; i < ecg_written.size(); ++i)
        CHECK(ecg_written.samples[i] ==
              static_cast<double>(static_cast<float>(redo.record.ecg.samples[i])));

    if (side.at("outputs").contains("cycles")) {
        auto cyc = read_cycles_csv(out / side.at("outputs").at("cycles").get<std::string>());
        CHECK(cyc == redo.record.boundaries);
    }

    // Fragments are slices of the written PCG: last one ends at the end.
    auto frag_names = side.at("outputs").at("fragments");
    REQUIRE(frag_names.size() == 2);
    Signal frag0 = read_wav(out / frag_names[0].get<std::string>());
    Signal frag1 = read_wav(out / frag_names[1].get<std::string>());
    const size_t frag_len = 1000; // 0.5 s at 2 kHz
    REQUIRE(frag0.size() == frag_len);
    REQUIRE(frag1.size() == frag_len);
    CHECK(std::memcmp(frag0.samples.data(), written.samples.data(),
                      frag_len * sizeof(double)) == 0);
    CHECK(std::memcmp(frag1.samples.data(),
                      written.samples.data() + (written.size() - frag_len),
                      frag_len * sizeof(double)) == 0);

    // The same job re-run lands byte-identical outputs.
    fs::path out2 = tmpdir("aug_out2");
    job.out_dir = out2;
    run_augment(job);
    for (const auto& e : fs::directory_iterator(out)) {
        fs::path rel = e.path().filename();
        CAPTURE(rel.string());
        CHECK(slurp(out / rel) == slurp(out2 / rel));
    }
}

TEST_CASE("a corrupted draw log is rejected on replay") {
    fs::path fx = tmpdir("aug_fx_bad");
    fs::path out = tmpdir("aug_out_bad");
    FixtureSpec spec;
    spec.count = 1;
    spec.with_noise_bank = false;
    FixtureSet set = make_fixtures(fx, spec, 13);

    AugmentJob job;
    job.manifest = set.manifest;
    job.out_dir = out;
    job.config = default_config();
    job.seed = 5;
    run_augment(job);

    DrawLog log = sidecar_draw_log(out / "rec0001__aug0.json");
    REQUIRE(!log.draws.empty());
    log.draws[0].name += "-tampered";
    auto rows = read_manifest(set.manifest);
    PairedRecord rec = load_record(rows[0], fx, 2000.0);
    ReplayParamSource replay(log);
    expect_code([&] { augment_pair(rec, job.config.augment, nullptr, replay); }, Errc::config);
}

TEST_CASE("base64 round trips and rejects malformed text") {
    RandomStream rng(8);
    for (size_t n = 0; n <= 17; ++n) {
        std::vector<uint8_t> data(n);
        for (auto& b : data) b = static_cast<uint8_t>(rng.choice(256));
        std::string enc = base64_encode(data.data(), data.size());
        CHECK(enc.size() % 4 == 0);
        CHECK(base64_decode(enc) == data);
    }
    // Spot-check a known vector.
    const std::string abc = "abc";
    CHECK(base64_encode(reinterpret_cast<const uint8_t*>(abc.data()), 3) == "YWJj");

    expect_code([&] { base64_decode("abc"); }, Errc::format);      // bad length
    expect_code([&] { base64_decode("a!=="); }, Errc::format);     // bad character
    expect_code([&] { base64_decode("===="); }, Errc::format);     // padding too long
    expect_code([&] { base64_decode("ab=c"); }, Errc::format);     // data after padding
    expect_code([&] { base64_decode("AA==AAAA"); }, Errc::format); // padding mid-stream
    CHECK(base64_decode("").empty());
}

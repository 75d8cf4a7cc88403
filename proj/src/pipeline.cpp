#include "pipeline.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "errors.hpp"
#include "hpss.hpp"
#include "wav.hpp"

namespace auscult {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// base64 (standard alphabet, padded)

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const uint8_t* data, size_t n) {
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (size_t i = 0; i < n; i += 3) {
        uint32_t v = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < n) v |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < n) v |= static_cast<uint32_t>(data[i + 2]);
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += i + 1 < n ? kB64[(v >> 6) & 63] : '=';
        out += i + 2 < n ? kB64[v & 63] : '=';
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) fail(Errc::format, "base64 length not a multiple of 4");
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        uint32_t v = 0;
        for (size_t j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2) fail(Errc::format, "bad base64 padding");
                ++pad;
                v <<= 6;
                continue;
            }
            if (pad) fail(Errc::format, "base64 data after padding");
            int d = val(c);
            if (d < 0) fail(Errc::format, std::string("bad base64 character '") + c + "'");
            v = (v << 6) | static_cast<uint32_t>(d);
        }
        out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<uint8_t>(v & 0xff));
    }
    return out;
}

// ---------------------------------------------------------------------------
// atomic writes

namespace {

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(Errc::io, "cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(Errc::io, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write_wav(const std::filesystem::path& path, const Signal& s, WavFormat fmt) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    write_wav(tmp, s, fmt);
    std::filesystem::rename(tmp, path);
}

const char* kind_name(DrawKind k) {
    switch (k) {
        case DrawKind::gate: return "gate";
        case DrawKind::uniform: return "uniform";
        case DrawKind::randint: return "randint";
        case DrawKind::choice: return "choice";
        case DrawKind::gaussians: return "gaussians";
    }
    return "?";
}

DrawKind kind_from_name(const std::string& s) {
    if (s == "gate") return DrawKind::gate;
    if (s == "uniform") return DrawKind::uniform;
    if (s == "randint") return DrawKind::randint;
    if (s == "choice") return DrawKind::choice;
    if (s == "gaussians") return DrawKind::gaussians;
    fail(Errc::format, "unknown draw kind '" + s + "'");
}

json draws_to_json(const DrawLog& log) {
    json arr = json::array();
    for (const Draw& d : log.draws) {
        json e;
        e["name"] = d.name;
        e["kind"] = kind_name(d.kind);
        if (d.kind == DrawKind::gaussians) {
            e["n"] = d.values.size();
            // Raw little-endian doubles: replay has to be bit-exact, and a
            // decimal round trip would not be.
            std::vector<uint8_t> bytes(d.values.size() * sizeof(double));
            std::memcpy(bytes.data(), d.values.data(), bytes.size());
            e["data"] = base64_encode(bytes.data(), bytes.size());
        } else {
            e["value"] = d.scalar;
        }
        arr.push_back(std::move(e));
    }
    return arr;
}

DrawLog draws_from_json(const json& arr) {
    if (!arr.is_array()) fail(Errc::format, "sidecar: draws is not an array");
    DrawLog log;
    for (const json& e : arr) {
        Draw d;
        d.name = e.at("name").get<std::string>();
        d.kind = kind_from_name(e.at("kind").get<std::string>());
        if (d.kind == DrawKind::gaussians) {
            std::vector<uint8_t> bytes = base64_decode(e.at("data").get<std::string>());
            size_t n = e.at("n").get<size_t>();
            if (bytes.size() != n * sizeof(double))
                fail(Errc::format, "sidecar: gaussian blob size mismatch for " + d.name);
            d.values.resize(n);
            std::memcpy(d.values.data(), bytes.data(), bytes.size());
        } else {
            d.scalar = e.at("value").get<double>();
        }
        log.draws.push_back(std::move(d));
    }
    return log;
}

json augment_config_json(const AugmentConfig& g) {
    return json{
        {"pcg_hpss", g.pcg_hpss},
        {"pcg_noise", g.pcg_noise},
        {"pcg_stretch", g.pcg_stretch},
        {"pcg_am", g.pcg_am},
        {"pcg_eq", g.pcg_eq},
        {"pcg_ext_noise", g.pcg_ext_noise},
        {"ecg_noise", g.ecg_noise},
        {"ecg_wander", g.ecg_wander},
        {"ecg_stretch", g.ecg_stretch},
        {"ecg_eq", g.ecg_eq},
        {"ecg_ext_noise", g.ecg_ext_noise},
        {"stretch_mode", stretch_mode_name(g.stretch_mode)},
        {"eq_gain_lo", g.eq_gain_lo},
        {"eq_gain_hi", g.eq_gain_hi},
    };
}

} // namespace

// ---------------------------------------------------------------------------
// augment

AugmentSummary run_augment(const AugmentJob& job) {
    constexpr double kRate = 2000.0;

    std::vector<ManifestRow> rows = read_manifest(job.manifest);
    std::filesystem::path base_dir = job.manifest.parent_path();
    std::filesystem::create_directories(job.out_dir);

    NoiseBank bank;
    if (!job.noise_dir.empty()) bank = load_noise_bank(job.noise_dir);

    size_t frag_len = static_cast<size_t>(std::llround(job.fragment_seconds * kRate));
    bool want_frags = frag_len > 0 && job.fragments > 0;

    RandomStream root(job.seed);
    AugmentSummary summary;

    for (const ManifestRow& row : rows) {
        PairedRecord rec = load_record(row, base_dir, kRate);
        ++summary.records;

        RandomStream rec_stream = root.split("record:" + row.id);
        for (size_t k = 0; k < job.copies; ++k) {
            RandomStream copy_stream = rec_stream.split("copy:" + std::to_string(k));
            DrawLog log;
            RngParamSource ps(copy_stream, &log);
            AugmentOutcome out = augment_pair(rec, job.config.augment,
                                              bank.empty() ? nullptr : &bank, ps);

            std::string stem = row.id + "__aug" + std::to_string(k);
            json side;
            side["version"] = 1;
            side["record_id"] = row.id;
            side["copy"] = k;
            side["seed"] = job.seed;
            side["stream"] = json::array({"record:" + row.id, "copy:" + std::to_string(k)});
            side["config"] = augment_config_json(job.config.augment);
            side["noise_bank"] = bank.names;
            side["hpss_passed_through"] = out.hpss_passed_through;
            side["stretch_factor"] = out.stretch_factor;
            json outputs = json::object();

            if (!out.record.pcg.samples.empty()) {
                std::filesystem::path p = job.out_dir / (stem + ".wav");
                atomic_write_wav(p, out.record.pcg, WavFormat::float32);
                outputs["pcg"] = p.filename().string();
            }
            if (!out.record.ecg.samples.empty()) {
                std::filesystem::path p = job.out_dir / (row.id + "__ecg__aug" + std::to_string(k) + ".wav");
                atomic_write_wav(p, out.record.ecg, WavFormat::float32);
                outputs["ecg"] = p.filename().string();
            }
            if (!out.record.boundaries.empty()) {
                std::filesystem::path p = job.out_dir / (stem + "_cycles.csv");
                std::string text;
                for (size_t b : out.record.boundaries) text += std::to_string(b) + "\n";
                atomic_write_text(p, text);
                outputs["cycles"] = p.filename().string();
            }

            json warnings = json::array();
            if (out.hpss_passed_through) warnings.push_back("hpss pass-through: signal shorter than drawn window");

            if (want_frags && !out.record.pcg.samples.empty()) {
                size_t len = out.record.pcg.samples.size();
                json frag_names = json::array();
                if (frag_len >= len) {
                    warnings.push_back("fragment longer than signal; wrote one full-length fragment");
                    std::filesystem::path p = job.out_dir / (stem + "__frag0.wav");
                    atomic_write_wav(p, out.record.pcg, WavFormat::float32);
                    frag_names.push_back(p.filename().string());
                    ++summary.fragments_written;
                } else {
                    for (size_t j = 0; j < job.fragments; ++j) {
                        size_t start = job.fragments == 1
                                           ? 0
                                           : static_cast<size_t>(std::llround(
                                                 static_cast<double>(j) *
                                                 static_cast<double>(len - frag_len) /
                                                 static_cast<double>(job.fragments - 1)));
                        Signal frag;
                        frag.sample_rate_hz = out.record.pcg.sample_rate_hz;
                        frag.samples.assign(out.record.pcg.samples.begin() + static_cast<long>(start),
                                            out.record.pcg.samples.begin() + static_cast<long>(start + frag_len));
                        std::filesystem::path p =
                            job.out_dir / (stem + "__frag" + std::to_string(j) + ".wav");
                        atomic_write_wav(p, frag, WavFormat::float32);
                        frag_names.push_back(p.filename().string());
                        ++summary.fragments_written;
                    }
                }
                outputs["fragments"] = frag_names;
            }

            side["outputs"] = outputs;
            side["warnings"] = warnings;
            side["draws"] = draws_to_json(log);
            atomic_write_text(job.out_dir / (stem + ".json"), side.dump(2) + "\n");
            ++summary.copies_written;
        }
    }
    return summary;
}

DrawLog sidecar_draw_log(const std::filesystem::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) fail(Errc::io, "cannot open " + sidecar.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(Errc::format, sidecar.string() + ": " + e.what());
    }
    if (!doc.contains("draws")) fail(Errc::format, sidecar.string() + ": no draws array");
    return draws_from_json(doc.at("draws"));
}

// ---------------------------------------------------------------------------
// ddpm

Signal prep_channel_4k(const Signal& raw, bool is_pcg) {
    Signal s = raw;
    if (s.sample_rate_hz != 4000.0) s = resample(s, 4000.0);
    s = is_pcg ? bandpass(s, 2.0, 500.0) : bandpass(s, 0.25, 100.0);
    return normalize(s);
}

TrainSummary run_ddpm_train(const TrainJob& job) {
    std::vector<ManifestRow> rows = read_manifest(job.manifest);
    std::filesystem::path base_dir = job.manifest.parent_path();
    const TrainConfig& tc = job.config.train;
    size_t min_len = tc.segment_len + 768;

    std::vector<TrainRecord> records;
    TrainSummary summary;
    for (const ManifestRow& row : rows) {
        if (row.pcg.empty() || row.ecg.empty()) {
            ++summary.records_skipped;
            continue;
        }
        Signal pcg_raw = read_wav(base_dir / row.pcg);
        Signal ecg_raw = read_wav(base_dir / row.ecg);
        double scale = 4000.0 / pcg_raw.sample_rate_hz;

        TrainRecord tr;
        tr.pcg = prep_channel_4k(pcg_raw, true);
        tr.ecg = prep_channel_4k(ecg_raw, false);
        tr.label = static_cast<int>(row.label);
        if (!row.annotations.empty()) {
            tr.boundaries = read_cycles_csv(base_dir / row.annotations);
            if (scale != 1.0)
                for (size_t& b : tr.boundaries)
                    b = static_cast<size_t>(std::llround(static_cast<double>(b) * scale));
        }
        if (tr.pcg.samples.size() < min_len || tr.ecg.samples.size() < min_len) {
            ++summary.records_skipped;
            continue;
        }
        records.push_back(std::move(tr));
    }
    if (records.empty()) fail(Errc::invalid_argument, "no usable records for training");
    summary.records_used = records.size();

    TrainedModel trained =
        train_toy_denoiser(records, tc, RandomStream(job.seed).split("ddpm-train"));
    summary.stats = trained.stats;

    std::filesystem::path tmp = job.checkpoint_out;
    tmp += ".tmp";
    save_checkpoint(tmp.string(), trained.model, trained.schedule);
    std::filesystem::rename(tmp, job.checkpoint_out);
    return summary;
}

void run_ddpm_sample(const SampleJob& job) {
    LoadedCheckpoint ckpt = load_checkpoint(job.checkpoint.string());
    Signal ecg = prep_channel_4k(read_wav(job.ecg_wav), false);
    RandomStream rng = RandomStream(job.seed).split("ddpm-sample");
    SampleOptions opts;
    opts.stochastic = job.stochastic;
    Signal pcg = sample_pcg(ckpt.model, ckpt.schedule, ecg, job.label, rng, opts);
    atomic_write_wav(job.out_wav, normalize(pcg), WavFormat::float32);
}

// ---------------------------------------------------------------------------
// metrics

std::string run_metrics(const MetricsJob& job) {
    ConfusionMatrix cm;
    if (job.counts) {
        cm = *job.counts;
    } else {
        auto preds = read_predictions_csv(job.predictions);
        auto labels = read_labels_csv(job.labels);
        cm = aggregate_subjects(preds, labels, job.threshold);
    }
    Rates r = compute_rates(cm);
    return job.json_output ? rates_to_json(r, cm) : format_rates_table(r);
}

// ---------------------------------------------------------------------------
// single-file tools

bool run_hpss_file(const HpssJob& job) {
    Signal x = normalize(read_wav(job.input));
    if (job.split) {
        HpssParams p;
        p.half_frames = p.half_bins = job.median_half;
        p.lambda_h = p.lambda_p = job.lambda;
        auto [h, pc] = hpss_decompose(x, job.window_len, job.hop, p);
        std::filesystem::path stem = job.output;
        stem.replace_extension();
        atomic_write_wav(stem.string() + "_h.wav", h, WavFormat::float32);
        atomic_write_wav(stem.string() + "_p.wav", pc, WavFormat::float32);
        return false;
    }
    RandomStream rng = RandomStream(job.seed).split("hpss");
    RngParamSource ps(rng);
    bool passed = false;
    Signal y = hpss_augment(x, ps, &passed);
    atomic_write_wav(job.output, y, WavFormat::float32);
    return passed;
}

RearrangeResult run_rearrange_file(const RearrangeJob& job) {
    Signal x = normalize(read_wav(job.input));
    std::vector<size_t> bounds = read_cycles_csv(job.cycles);
    if (!bounds.empty() && bounds.back() >= x.samples.size())
        fail(Errc::invalid_argument, "cycle boundary past end of signal");

    RandomStream rng = RandomStream(job.seed).split("rearrange");
    RearrangeResult res = job.mode ? rearrange_cycles_mode(x, bounds, *job.mode, rng)
                                   : rearrange_cycles(x, bounds, rng, job.probability);
    atomic_write_wav(job.output, res.signal, WavFormat::float32);
    if (!job.cycles_out.empty()) {
        std::string text;
        for (size_t b : res.boundaries) text += std::to_string(b) + "\n";
        atomic_write_text(job.cycles_out, text);
    }
    return res;
}

} // namespace auscult

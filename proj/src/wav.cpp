#include "wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "errors.hpp"

namespace auscult {
namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(static_cast<uint8_t>(v));
    b.push_back(static_cast<uint8_t>(v >> 8));
    b.push_back(static_cast<uint8_t>(v >> 16));
    b.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_tag(std::vector<uint8_t>& b, const char* tag) {
    b.insert(b.end(), tag, tag + 4);
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | p[1] << 8);
}

} // namespace

void write_wav(const std::filesystem::path& path, const Signal& s, WavFormat fmt) {
    if (s.sample_rate_hz <= 0.0) fail(Errc::invalid_argument, "wav: sample rate unset");
    const auto rate = static_cast<uint32_t>(std::llround(s.sample_rate_hz));
    const uint16_t bytes_per_sample = fmt == WavFormat::pcm16 ? 2 : 4;
    const auto data_len = static_cast<uint32_t>(s.size() * bytes_per_sample);

    std::vector<uint8_t> out;
    out.reserve(64 + data_len);
    put_tag(out, "RIFF");
    put_u32(out, 0); // patched below
    put_tag(out, "WAVE");

    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, fmt == WavFormat::pcm16 ? 1 : 3);
    put_u16(out, 1); // mono
    put_u32(out, rate);
    put_u32(out, rate * bytes_per_sample);
    put_u16(out, bytes_per_sample);
    put_u16(out, static_cast<uint16_t>(8 * bytes_per_sample));

    if (fmt == WavFormat::float32) {
        put_tag(out, "fact");
        put_u32(out, 4);
        put_u32(out, static_cast<uint32_t>(s.size()));
    }

    put_tag(out, "data");
    put_u32(out, data_len);
    if (fmt == WavFormat::pcm16) {
        for (double x : s.samples) {
            const long long q = std::llround(x * 32768.0);
            const auto v = static_cast<int16_t>(std::clamp(q, -32768ll, 32767ll));
            put_u16(out, static_cast<uint16_t>(v));
        }
    } else {
        for (double x : s.samples) {
            const float fv = static_cast<float>(x);
            uint32_t bits;
            std::memcpy(&bits, &fv, 4);
            put_u32(out, bits);
        }
    }
    if (data_len % 2 == 1) out.push_back(0);

    const uint32_t riff_len = static_cast<uint32_t>(out.size()) - 8;
    out[4] = static_cast<uint8_t>(riff_len);
    out[5] = static_cast<uint8_t>(riff_len >> 8);
    out[6] = static_cast<uint8_t>(riff_len >> 16);
    out[7] = static_cast<uint8_t>(riff_len >> 24);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::io, "wav: cannot open '" + path.string() + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) fail(Errc::io, "wav: write failed for '" + path.string() + "'");
}

Signal read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Errc::io, "wav: cannot open '" + path.string() + "'");
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        fail(Errc::format, "wav: '" + path.string() + "' is not a RIFF/WAVE file");

    bool have_fmt = false;
    uint16_t audio_format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const uint8_t* data = nullptr;
    uint32_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const char* tag = reinterpret_cast<const char*>(buf.data() + pos);
        const uint32_t len = get_u32(buf.data() + pos + 4);
        pos += 8;
        if (pos + len > buf.size())
            fail(Errc::format, "wav: truncated chunk in '" + path.string() + "'");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (len < 16) fail(Errc::format, "wav: short fmt chunk");
            audio_format = get_u16(buf.data() + pos);
            channels = get_u16(buf.data() + pos + 2);
            rate = get_u32(buf.data() + pos + 4);
            bits = get_u16(buf.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = buf.data() + pos;
            data_len = len;
        }
        pos += len + (len % 2);
    }

    if (!have_fmt || data == nullptr)
        fail(Errc::format, "wav: missing fmt or data chunk in '" + path.string() + "'");
    if (channels != 1)
        fail(Errc::format, "wav: only mono is supported (" + path.string() + " has " +
                               std::to_string(channels) + " channels)");

    Signal s;
    s.sample_rate_hz = static_cast<double>(rate);
    if (audio_format == 1) {
        if (bits != 16) fail(Errc::format, "wav: only 16-bit PCM is supported");
        const size_t n = data_len / 2;
        s.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const auto v = static_cast<int16_t>(get_u16(data + 2 * i));
            s.samples[i] = static_cast<double>(v) / 32768.0;
        }
    } else if (audio_format == 3) {
        if (bits != 32) fail(Errc::format, "wav: only 32-bit float is supported");
        const size_t n = data_len / 4;
        s.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const uint32_t b = get_u32(data + 4 * i);
            float fv;
            std::memcpy(&fv, &b, 4);
            s.samples[i] = static_cast<double>(fv);
        }
    } else {
        fail(Errc::format, "wav: unsupported codec " + std::to_string(audio_format) +
                               " in '" + path.string() + "'");
    }
    return s;
}

} // namespace auscult

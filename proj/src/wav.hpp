#ifndef AUSCULT_WAV_HPP
#define AUSCULT_WAV_HPP

#include <filesystem>

#include "signal.hpp"

namespace auscult {

enum class WavFormat { pcm16, float32 };

// Mono RIFF/WAVE.  PCM16 quantizes with round-to-nearest at full scale 32768
// (clamped), so a write/read trip stays within one LSB; float32 preserves the
// float bits exactly.
void write_wav(const std::filesystem::path& path, const Signal& s, WavFormat fmt);

Signal read_wav(const std::filesystem::path& path);

} // namespace auscult

#endif

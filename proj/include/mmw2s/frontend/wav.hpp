#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmw2s/common/binary_io.hpp"
#include "mmw2s/frontend/log_mel.hpp"

namespace mmw2s {

inline constexpr double kCanonicalSampleRate = 16000.0;

inline std::vector<float> resample_linear(const std::vector<float>& in, double from_rate, double to_rate) {
  if (from_rate == to_rate || in.empty()) return in;
  const double duration = static_cast<double>(in.size() - 1) / from_rate;
  const auto n_out = static_cast<std::size_t>(std::floor(duration * to_rate)) + 1;
  std::vector<float> out(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double pos = static_cast<double>(k) * from_rate / to_rate;
    const auto i0 = std::min(static_cast<std::size_t>(pos), in.size() - 1);
    const auto i1 = std::min(i0 + 1, in.size() - 1);
    const double frac = pos - static_cast<double>(i0);
    out[k] = static_cast<float>((1.0 - frac) * in[i0] + frac * in[i1]);
  }
  return out;
}

/// Encodes mono PCM16. Samples are clamped to [-1, 1] and scaled by 32767.
inline std::string encode_wav(const AudioBuffer& audio) {
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  binary::put_bytes(out, "RIFF");
  binary::put_u32(out, 36 + data_bytes);
  binary::put_bytes(out, "WAVEfmt ");
  binary::put_u32(out, 16);
  binary::put_u32(out, 1u | (1u << 16));  // PCM, mono
  binary::put_u32(out, rate);
  binary::put_u32(out, rate * 2);
  binary::put_u32(out, 2u | (16u << 16));  // block align, bits per sample
  binary::put_bytes(out, "data");
  binary::put_u32(out, data_bytes);
  for (float s : audio.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f));
    const auto u = static_cast<std::uint16_t>(q);
    out.push_back(static_cast<char>(u & 0xFF));
    out.push_back(static_cast<char>(u >> 8));
  }
  return out;
}

/// Decodes mono PCM16 and linearly resamples to `target_rate`.
inline AudioBuffer decode_wav(std::string_view bytes, double target_rate = kCanonicalSampleRate) {
  binary::Reader r(bytes);
  require(r.bytes(4) == "RIFF", ErrorCode::kFormat, "not a RIFF file");
  r.u32();
  require(r.bytes(4) == "WAVE", ErrorCode::kFormat, "not a WAVE file");
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (!r.at_end()) {
    const std::string_view id = r.bytes(4);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      binary::Reader f(r.bytes(size));
      const std::uint32_t fc = f.u32();
      format = fc & 0xFFFF;
      channels = fc >> 16;
      rate = f.u32();
      f.u32();
      bits = f.u32() >> 16;
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorCode::kFormat, "data chunk before fmt chunk");
      require(format == 1 && channels == 1 && bits == 16, ErrorCode::kFormat,
              "only mono PCM16 WAV is supported");
      require(rate > 0, ErrorCode::kFormat, "WAV sample rate is zero");
      const std::string_view payload = r.bytes(size - size % 2);
      std::vector<float> samples(payload.size() / 2);
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto lo = static_cast<unsigned char>(payload[2 * k]);
        const auto hi = static_cast<unsigned char>(payload[2 * k + 1]);
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        samples[k] = static_cast<float>(v) / 32767.0f;
      }
      AudioBuffer out;
      out.sample_rate = target_rate;
      out.samples = resample_linear(samples, rate, target_rate);
      return out;
    } else {
      r.bytes(size + size % 2);
    }
  }
  fail(ErrorCode::kFormat, "WAV file has no data chunk");
}

inline AudioBuffer read_wav(const std::string& path, double target_rate = kCanonicalSampleRate) {
  return decode_wav(binary::read_file(path), target_rate);
}

inline void write_wav(const std::string& path, const AudioBuffer& audio) {
  binary::write_file(path, encode_wav(audio));
}

/// Rounds samples onto the PCM16 grid so in-memory audio equals what a
/// write/read cycle produces.
inline void quantize_pcm16(std::vector<float>& samples) {
  for (float& s : samples) {
    s = static_cast<float>(std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f)) / 32767.0f;
  }
}

}  // namespace mmw2s

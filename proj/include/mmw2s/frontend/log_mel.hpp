#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "json.hpp"
#include "mmw2s/common/error.hpp"

namespace mmw2s {

/// Normalized mono PCM.
struct AudioBuffer {
  double sample_rate = 16000.0;
  std::vector<float> samples;
};

struct MelConfig {
  double sample_rate = 16000.0;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_mels = 40;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 selects Nyquist
  double log_floor = 1e-10;

  std::size_t frame_length() const {
    return static_cast<std::size_t>(std::lround(frame_ms * sample_rate / 1000.0));
  }
  std::size_t hop_length() const {
    return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
  }
  std::size_t fft_size() const {
    std::size_t n = 1;
    while (n < frame_length()) n <<= 1;
    return n;
  }
  double upper_frequency() const { return f_max > 0.0 ? f_max : sample_rate / 2.0; }

  void validate() const {
    require(sample_rate > 0.0, ErrorCode::kInvalidConfig, "mel sample_rate must be positive");
    require(frame_length() >= 2 && hop_length() >= 1, ErrorCode::kInvalidConfig, "mel frame/hop too small");
    require(n_mels >= 1, ErrorCode::kInvalidConfig, "n_mels must be positive");
    require(f_min >= 0.0 && upper_frequency() > f_min && upper_frequency() <= sample_rate / 2.0,
            ErrorCode::kInvalidConfig, "mel frequency range invalid");
    require(log_floor > 0.0, ErrorCode::kInvalidConfig, "log floor must be positive");
  }

  friend bool operator==(const MelConfig&, const MelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const MelConfig& c) {
  j = nlohmann::json{{"sample_rate", c.sample_rate}, {"frame_ms", c.frame_ms}, {"hop_ms", c.hop_ms},
                     {"n_mels", c.n_mels},           {"f_min", c.f_min},       {"f_max", c.f_max},
                     {"log_floor", c.log_floor}};
}
inline void from_json(const nlohmann::json& j, MelConfig& c) {
  MelConfig d;
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.frame_ms = j.value("frame_ms", d.frame_ms);
  c.hop_ms = j.value("hop_ms", d.hop_ms);
  c.n_mels = j.value("n_mels", d.n_mels);
  c.f_min = j.value("f_min", d.f_min);
  c.f_max = j.value("f_max", d.f_max);
  c.log_floor = j.value("log_floor", d.log_floor);
}

/// n_frames x n_mels, frame-major.
struct LogMelSpectrogram {
  std::size_t n_frames = 0;
  std::size_t n_mels = 0;
  std::vector<double> values;

  double at(std::size_t frame, std::size_t mel) const { return values[frame * n_mels + mel]; }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters equally spaced on the HTK mel scale, evaluated on the
/// one-sided FFT bins. Weights are computed in the mel domain.
class MelFilterbank {
 public:
  explicit MelFilterbank(const MelConfig& cfg) : n_mels_(cfg.n_mels), n_bins_(cfg.fft_size() / 2 + 1) {
    cfg.validate();
    const double mel_lo = hz_to_mel(cfg.f_min);
    const double mel_hi = hz_to_mel(cfg.upper_frequency());
    const double spacing = (mel_hi - mel_lo) / static_cast<double>(n_mels_ + 1);
    const double hz_per_bin = cfg.sample_rate / static_cast<double>(cfg.fft_size());
    weights_.assign(n_mels_ * n_bins_, 0.0);
    centers_hz_.resize(n_mels_);
    for (std::size_t m = 0; m < n_mels_; ++m) {
      const double center = mel_lo + spacing * static_cast<double>(m + 1);
      const double left = center - spacing;
      const double right = center + spacing;
      centers_hz_[m] = mel_to_hz(center);
      for (std::size_t b = 0; b < n_bins_; ++b) {
        const double mel = hz_to_mel(hz_per_bin * static_cast<double>(b));
        double w = 0.0;
        if (mel > left && mel <= center) {
          w = (mel - left) / spacing;
        } else if (mel > center && mel < right) {
          w = (right - mel) / spacing;
        }
        weights_[m * n_bins_ + b] = w;
      }
    }
  }

  std::size_t n_mels() const { return n_mels_; }
  std::size_t n_bins() const { return n_bins_; }
  double weight(std::size_t mel, std::size_t bin) const { return weights_[mel * n_bins_ + bin]; }
  const std::vector<double>& centers_hz() const { return centers_hz_; }

  void apply(std::span<const double> power, std::span<double> out) const {
    for (std::size_t m = 0; m < n_mels_; ++m) {
      double acc = 0.0;
      const double* row = weights_.data() + m * n_bins_;
      for (std::size_t b = 0; b < n_bins_; ++b) acc += row[b] * power[b];
      out[m] = acc;
    }
  }

 private:
  std::size_t n_mels_;
  std::size_t n_bins_;
  std::vector<double> weights_;
  std::vector<double> centers_hz_;
};

inline std::size_t log_mel_frame_count(std::size_t num_samples, const MelConfig& cfg) {
  if (num_samples < cfg.frame_length()) return 0;
  return (num_samples - cfg.frame_length()) / cfg.hop_length() + 1;
}

/// Power STFT (periodic Hann window) -> mel filterbank -> log with floor.
inline LogMelSpectrogram compute_log_mel(std::span<const float> samples, double sample_rate,
                                         const MelConfig& cfg) {
  cfg.validate();
  require(sample_rate == cfg.sample_rate, ErrorCode::kInvalidConfig,
          "audio sample rate differs from mel config; resample on load");
  const std::size_t frame_len = cfg.frame_length();
  const std::size_t hop = cfg.hop_length();
  const std::size_t nfft = cfg.fft_size();
  require(samples.size() >= frame_len, ErrorCode::kEmptySignal, "audio shorter than one analysis frame");

  const MelFilterbank bank(cfg);
  std::vector<double> window(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(frame_len));
  }

  LogMelSpectrogram out;
  out.n_frames = log_mel_frame_count(samples.size(), cfg);
  out.n_mels = cfg.n_mels;
  out.values.resize(out.n_frames * out.n_mels);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(nfft, 0.0);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> power(bank.n_bins());
  std::vector<double> mel(cfg.n_mels);
  for (std::size_t f = 0; f < out.n_frames; ++f) {
    const std::size_t offset = f * hop;
    for (std::size_t n = 0; n < frame_len; ++n) frame[n] = static_cast<double>(samples[offset + n]) * window[n];
    fft.fwd(spectrum, frame);
    for (std::size_t b = 0; b < power.size(); ++b) power[b] = std::norm(spectrum[b]);
    bank.apply(power, mel);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      out.values[f * out.n_mels + m] = std::log(std::max(mel[m], cfg.log_floor));
    }
  }
  return out;
}

inline LogMelSpectrogram compute_log_mel(const AudioBuffer& audio, const MelConfig& cfg) {
  return compute_log_mel(audio.samples, audio.sample_rate, cfg);
}

}  // namespace mmw2s

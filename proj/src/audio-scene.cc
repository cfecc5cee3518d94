// src/audio-scene.cc

// Copyright 2026  The dvad Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dvad/audio-scene.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dvad/io-util.h"

namespace dvad {

void AudioSignal::Check() const {
  if (sample_rate_hz <= 0)
    throw DataError("sample rate must be positive, got " +
                    std::to_string(sample_rate_hz));
  if (samples.empty()) throw DataError("empty audio signal");
  for (double s : samples)
    if (!std::isfinite(s)) throw DataError("non-finite audio sample");
}

int64_t NumFrames(int64_t length, int frame_length, int hop) {
  if (frame_length <= 0 || hop <= 0 || length < frame_length) return 0;
  return (length - frame_length) / hop + 1;
}

FrameSequence FrameSignal(const AudioSignal &signal, int frame_length,
                          int hop) {
  if (frame_length <= 0) throw DataError("frame length must be positive");
  if (hop < 1) throw DataError("hop must be at least 1");
  if (signal.size() < frame_length)
    throw DataError("signal too short: " + std::to_string(signal.size()) +
                    " samples < frame length " + std::to_string(frame_length));
  FrameSequence out;
  out.frame_length = frame_length;
  out.hop = hop;
  const int64_t n = NumFrames(signal.size(), frame_length, hop);
  out.frames.resize(n, frame_length);
  for (int64_t i = 0; i < n; ++i)
    out.frames.row(i) = Eigen::Map<const Eigen::RowVectorXd>(
        signal.samples.data() + i * hop, frame_length);
  return out;
}

FrameLabels LabelFrames(const FrameSequence &clean_frames,
                        double threshold_db) {
  const int64_t n = clean_frames.NumFrames();
  Eigen::VectorXd energy = clean_frames.frames.rowwise().squaredNorm();
  const double e_max = n > 0 ? energy.maxCoeff() : 0.0;
  if (!(e_max > 0.0)) throw DataError("no speech content in clean signal");
  FrameLabels labels(n, 0);
  for (int64_t i = 0; i < n; ++i) {
    if (energy[i] <= 0.0) continue;  // -inf dB
    labels[i] = 10.0 * std::log10(energy[i] / e_max) > threshold_db ? 1 : 0;
  }
  return labels;
}

AudioSignal Resample(const AudioSignal &signal, int target_rate_hz) {
  signal.Check();
  if (target_rate_hz <= 0) throw DataError("target rate must be positive");
  if (target_rate_hz == signal.sample_rate_hz) return signal;
  constexpr int kHalfTaps = 32;
  const double ratio =
      static_cast<double>(target_rate_hz) / signal.sample_rate_hz;
  const double cutoff = 0.5 * std::min(1.0, ratio);  // cycles per input sample
  const int64_t in_len = signal.size();
  const int64_t out_len =
      (in_len * target_rate_hz + signal.sample_rate_hz - 1) /
      signal.sample_rate_hz;
  AudioSignal out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.assign(out_len, 0.0);
  const double pi = std::numbers::pi;
  for (int64_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) / ratio;
    const int64_t base = static_cast<int64_t>(std::floor(t));
    double acc = 0.0;
    for (int64_t n = base - kHalfTaps + 1; n <= base + kHalfTaps; ++n) {
      if (n < 0 || n >= in_len) continue;
      const double x = t - static_cast<double>(n);
      const double arg = 2.0 * cutoff * x;
      const double sinc =
          std::abs(arg) < 1e-12 ? 1.0 : std::sin(pi * arg) / (pi * arg);
      const double w = 0.42 + 0.5 * std::cos(pi * x / kHalfTaps) +
                       0.08 * std::cos(2.0 * pi * x / kHalfTaps);
      acc += signal.samples[n] * 2.0 * cutoff * sinc * w;
    }
    out.samples[m] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Two-pole resonator with unit peak-ish gain.
class Resonator {
 public:
  Resonator(double freq_hz, double bandwidth_hz, int rate) {
    const double r = std::exp(-std::numbers::pi * bandwidth_hz / rate);
    a1_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq_hz / rate);
    a2_ = -r * r;
    gain_ = 1.0 - r;
  }
  double operator()(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0, a2_ = 0, gain_ = 1, y1_ = 0, y2_ = 0;
};

struct Vowel {
  double f1, f2, f3;
};
constexpr Vowel kVowels[] = {{730, 1090, 2440}, {270, 2290, 3010},
                             {300, 870, 2240},  {530, 1840, 2480},
                             {570, 840, 2410},  {660, 1720, 2410},
                             {440, 1020, 2240}, {390, 1990, 2550}};

void RenderSyllable(std::vector<double> *out, int64_t begin, int64_t end,
                    double f0_start, double f0_end, double amplitude,
                    int rate, std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int64_t len = end - begin;
  if (len <= 0) return;
  std::vector<double> seg(len, 0.0);
  const bool voiced = uni(*rng) < 0.8;
  if (voiced) {
    const Vowel &v = kVowels[static_cast<size_t>(uni(*rng) * 8) % 8];
    const double jitter = 0.9 + 0.2 * uni(*rng);
    Resonator r1(v.f1 * jitter, 80, rate), r2(v.f2 * jitter, 100, rate),
        r3(v.f3 * jitter, 140, rate);
    double phase = 0.0, tilt1 = 0.0, tilt2 = 0.0;
    for (int64_t i = 0; i < len; ++i) {
      const double frac = static_cast<double>(i) / len;
      const double f0 = f0_start + (f0_end - f0_start) * frac;
      phase += f0 / rate;
      double excitation = 0.02 * gauss(*rng);
      if (phase >= 1.0) {
        phase -= 1.0;
        excitation += 1.0;
      }
      tilt1 = 0.9 * tilt1 + excitation;
      tilt2 = 0.7 * tilt2 + tilt1;
      seg[i] = r3(r2(r1(tilt2)) * 4.0);
    }
  } else {
    Resonator fric(2000.0 + 1500.0 * uni(*rng), 700, rate);
    for (int64_t i = 0; i < len; ++i) seg[i] = fric(gauss(*rng));
  }
  double energy = 0.0;
  for (double s : seg) energy += s * s;
  const double rms = std::sqrt(energy / len);
  if (!(rms > 0.0)) return;
  const double level = amplitude * (voiced ? 1.0 : 0.35) / rms;
  const int64_t attack = std::min<int64_t>(len / 2, rate * 15 / 1000);
  const int64_t release = std::min<int64_t>(len / 2, rate * 25 / 1000);
  for (int64_t i = 0; i < len; ++i) {
    double env = 1.0;
    if (i < attack)
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * i / attack);
    else if (i >= len - release)
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * (len - 1 - i) / release);
    (*out)[begin + i] += level * env * seg[i];
  }
}

}  // namespace

AudioSignal SynthesizeSpeech(double duration_s, int sample_rate_hz,
                             uint64_t seed) {
  if (!(duration_s > 0.0)) throw DataError("speech duration must be positive");
  const int rate = sample_rate_hz;
  const int64_t total = static_cast<int64_t>(std::llround(duration_s * rate));
  AudioSignal out;
  out.sample_rate_hz = rate;
  out.samples.assign(total, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto seconds = [&](double lo, double hi) {
    return static_cast<int64_t>((lo + (hi - lo) * uni(rng)) * rate);
  };
  int64_t pos = seconds(0.3, 1.2);
  while (pos < total) {
    const int64_t utt_end = std::min(total, pos + seconds(0.6, 3.0));
    const double f0_base = 95.0 + 135.0 * uni(rng);
    const double level = 0.4 + 0.6 * uni(rng);
    int64_t t = pos;
    while (t < utt_end) {
      const int64_t syl_end = std::min(utt_end, t + seconds(0.12, 0.30));
      const double f0a = f0_base * (0.85 + 0.3 * uni(rng));
      const double f0b = f0_base * (0.85 + 0.3 * uni(rng));
      RenderSyllable(&out.samples, t, syl_end, f0a, f0b,
                     level * (0.6 + 0.4 * uni(rng)), rate, &rng);
      t = syl_end + seconds(0.0, 0.04);
    }
    pos = utt_end + seconds(0.5, 2.5);
  }
  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0)
    for (double &s : out.samples) s *= 0.5 / peak;
  return out;
}

AudioSignal GenerateNoise(const std::string &kind, int64_t length,
                          int sample_rate_hz, uint64_t seed) {
  if (length <= 0) throw DataError("noise length must be positive");
  AudioSignal out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.assign(length, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (kind == "white") {
    for (double &s : out.samples) s = gauss(rng);
  } else if (kind == "colored") {
    double y = 0.0;
    for (double &s : out.samples) {
      y = gauss(rng) + 0.9 * y;
      s = y;
    }
  } else if (kind != "none") {
    throw DataError("unknown noise generator '" + kind + "'");
  }
  return out;
}

AudioSignal GenerateClick(int sample_rate_hz, uint64_t seed) {
  const int64_t len = sample_rate_hz * 50 / 1000;
  const double tau = 0.006 * sample_rate_hz;
  AudioSignal out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.assign(len, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double peak = 0.0;
  for (int64_t i = 0; i < len; ++i) {
    out.samples[i] = gauss(rng) * std::exp(-static_cast<double>(i) / tau);
    peak = std::max(peak, std::abs(out.samples[i]));
  }
  for (double &s : out.samples) s /= peak;
  return out;
}

namespace {

std::vector<char> ActiveSampleMask(const FrameLabels &labels, int64_t length,
                                   int frame_length, int hop) {
  std::vector<char> mask(length, 0);
  for (size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] != 1) continue;
    const int64_t begin = static_cast<int64_t>(n) * hop;
    const int64_t end = std::min(length, begin + frame_length);
    std::fill(mask.begin() + begin, mask.begin() + end, 1);
  }
  return mask;
}

AudioSignal LoadSource(const std::string &path, int rate) {
  return LoadAudio(path, rate, /*allow_resample=*/true);
}

}  // namespace

double ActiveFrameSnrDb(const AudioSignal &speech, const AudioSignal &noise,
                        const FrameLabels &labels, int frame_length, int hop) {
  if (speech.size() != noise.size())
    throw DataError("speech and noise lengths differ");
  auto mask = ActiveSampleMask(labels, speech.size(), frame_length, hop);
  double ps = 0.0, pn = 0.0;
  for (int64_t i = 0; i < speech.size(); ++i) {
    if (!mask[i]) continue;
    ps += speech.samples[i] * speech.samples[i];
    pn += noise.samples[i] * noise.samples[i];
  }
  return 10.0 * std::log10(ps / pn);
}

SceneMix MixScene(const SceneSpec &spec) {
  if (!std::isfinite(spec.snr_db) && !(spec.snr_db > 0))
    throw DataError("snr_db must be finite or +inf");
  if (!(spec.transients_per_minute >= 0.0))
    throw DataError("transients_per_minute must be nonnegative");
  const int rate = spec.sample_rate_hz;

  SceneMix mix;
  if (spec.speech_source == "synthetic")
    mix.clean = SynthesizeSpeech(spec.speech_duration_s, rate,
                                 DeriveSeed(spec.rng_seed, 1));
  else
    mix.clean = LoadSource(spec.speech_source, rate);
  mix.clean.Check();
  const int64_t length = mix.clean.size();

  FrameSequence clean_frames =
      FrameSignal(mix.clean, spec.frame_length, spec.hop);
  mix.labels = LabelFrames(clean_frames, spec.label_threshold_db);

  // Stationary noise, scaled to the requested active-frame SNR.
  mix.stationary.sample_rate_hz = rate;
  mix.stationary.samples.assign(length, 0.0);
  const bool noise_enabled =
      std::isfinite(spec.snr_db) && spec.stationary_noise_source != "none";
  if (noise_enabled) {
    AudioSignal raw;
    if (spec.stationary_noise_source == "white" ||
        spec.stationary_noise_source == "colored") {
      raw = GenerateNoise(spec.stationary_noise_source, length, rate,
                          DeriveSeed(spec.rng_seed, 2));
    } else {
      AudioSignal source = LoadSource(spec.stationary_noise_source, rate);
      raw.sample_rate_hz = rate;
      raw.samples.resize(length);
      for (int64_t i = 0; i < length; ++i)
        raw.samples[i] = source.samples[i % source.size()];
    }
    auto mask =
        ActiveSampleMask(mix.labels, length, spec.frame_length, spec.hop);
    double ps = 0.0, pn = 0.0;
    for (int64_t i = 0; i < length; ++i) {
      if (!mask[i]) continue;
      ps += mix.clean.samples[i] * mix.clean.samples[i];
      pn += raw.samples[i] * raw.samples[i];
    }
    if (!(pn > 0.0))
      throw DataError("impossible SNR: noise source has zero energy");
    const double gain = std::sqrt(ps / (pn * std::pow(10.0, spec.snr_db / 10.0)));
    for (int64_t i = 0; i < length; ++i)
      mix.stationary.samples[i] = gain * raw.samples[i];
  }

  // Transients at seeded uniform offsets.
  mix.transient.sample_rate_hz = rate;
  mix.transient.samples.assign(length, 0.0);
  const int64_t count = std::llround(spec.transients_per_minute *
                                     mix.clean.DurationSeconds() / 60.0);
  if (count > 0 && spec.transient_source != "none") {
    std::mt19937_64 rng(DeriveSeed(spec.rng_seed, 3));
    double speech_peak = 0.0;
    for (double s : mix.clean.samples)
      speech_peak = std::max(speech_peak, std::abs(s));
    const double target_peak =
        speech_peak * std::pow(10.0, spec.transient_gain_db / 20.0);
    for (int64_t e = 0; e < count; ++e) {
      AudioSignal event =
          spec.transient_source == "click"
              ? GenerateClick(rate, rng())
              : LoadSource(spec.transient_source, rate);
      if (event.size() > length)
        throw DataError("transient longer than signal");
      double peak = 0.0;
      for (double s : event.samples) peak = std::max(peak, std::abs(s));
      if (!(peak > 0.0)) continue;
      std::uniform_int_distribution<int64_t> where(0, length - event.size());
      const int64_t offset = where(rng);
      mix.transient_offsets.push_back(offset);
      for (int64_t i = 0; i < event.size(); ++i)
        mix.transient.samples[offset + i] +=
            event.samples[i] * (target_peak / peak);
    }
  }

  mix.noisy.sample_rate_hz = rate;
  mix.noisy.samples.resize(length);
  double peak = 0.0;
  for (int64_t i = 0; i < length; ++i) {
    mix.noisy.samples[i] = mix.clean.samples[i] + mix.stationary.samples[i] +
                           mix.transient.samples[i];
    peak = std::max(peak, std::abs(mix.noisy.samples[i]));
  }
  // Keep every track inside [-1, 1]; a common gain preserves SNR and labels.
  if (peak > 1.0) {
    const double scale = 0.99 / peak;
    for (AudioSignal *track :
         {&mix.clean, &mix.stationary, &mix.transient}) {
      for (double &s : track->samples) s *= scale;
    }
    for (int64_t i = 0; i < length; ++i)
      mix.noisy.samples[i] = mix.clean.samples[i] + mix.stationary.samples[i] +
                             mix.transient.samples[i];
  }
  return mix;
}

// ---------------------------------------------------------------------------

namespace {

uint32_t ReadU32(const std::string &b, size_t pos) {
  return static_cast<uint32_t>(static_cast<unsigned char>(b[pos])) |
         static_cast<uint32_t>(static_cast<unsigned char>(b[pos + 1])) << 8 |
         static_cast<uint32_t>(static_cast<unsigned char>(b[pos + 2])) << 16 |
         static_cast<uint32_t>(static_cast<unsigned char>(b[pos + 3])) << 24;
}
uint16_t ReadU16(const std::string &b, size_t pos) {
  return static_cast<uint16_t>(static_cast<unsigned char>(b[pos]) |
                               static_cast<unsigned char>(b[pos + 1]) << 8);
}
void PutU32(std::string *b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b->push_back(static_cast<char>(v >> (8 * i)));
}
void PutU16(std::string *b, uint16_t v) {
  b->push_back(static_cast<char>(v & 0xFF));
  b->push_back(static_cast<char>(v >> 8));
}

}  // namespace

AudioSignal DecodeWave(const std::string &bytes, int expected_rate_hz,
                       bool allow_resample) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    throw DataError("not a RIFF/WAVE file");
  size_t pos = 12;
  bool have_fmt = false;
  int channels = 0, bits = 0, format = 0;
  int rate = 0;
  const char *data = nullptr;
  size_t data_size = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const size_t size = ReadU32(bytes, pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size() && id != "data")
      throw DataError("truncated WAV chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw DataError("malformed fmt chunk");
      format = ReadU16(bytes, body);
      channels = ReadU16(bytes, body + 2);
      rate = static_cast<int>(ReadU32(bytes, body + 4));
      bits = ReadU16(bytes, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.data() + body;
      data_size = std::min(size, bytes.size() - body);
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || data == nullptr) throw DataError("WAV missing fmt or data");
  if (format != 1 && format != 0xFFFE)
    throw DataError("unsupported WAV encoding (PCM only)");
  if (channels != 1) throw DataError("multi-channel unsupported");
  if (bits != 16) throw DataError("unsupported bit depth (16-bit only)");
  AudioSignal signal;
  signal.sample_rate_hz = rate;
  const size_t n = data_size / 2;
  signal.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const auto lo = static_cast<unsigned char>(data[2 * i]);
    const auto hi = static_cast<unsigned char>(data[2 * i + 1]);
    const auto value = static_cast<int16_t>(lo | (hi << 8));
    signal.samples[i] = value / 32768.0;
  }
  signal.Check();
  if (rate != expected_rate_hz) {
    if (!allow_resample)
      throw DataError("sample rate mismatch: file is " + std::to_string(rate) +
                      " Hz, expected " + std::to_string(expected_rate_hz) +
                      " Hz (enable resampling to convert)");
    return Resample(signal, expected_rate_hz);
  }
  return signal;
}

AudioSignal LoadAudio(const std::string &path, int expected_rate_hz,
                      bool allow_resample) {
  return DecodeWave(ReadFileBytes(path), expected_rate_hz, allow_resample);
}

std::string EncodeWave(const AudioSignal &signal) {
  const uint32_t data_bytes = static_cast<uint32_t>(signal.samples.size() * 2);
  std::string b;
  b.reserve(44 + data_bytes);
  b += "RIFF";
  PutU32(&b, 36 + data_bytes);
  b += "WAVEfmt ";
  PutU32(&b, 16);
  PutU16(&b, 1);
  PutU16(&b, 1);
  PutU32(&b, static_cast<uint32_t>(signal.sample_rate_hz));
  PutU32(&b, static_cast<uint32_t>(signal.sample_rate_hz * 2));
  PutU16(&b, 2);
  PutU16(&b, 16);
  b += "data";
  PutU32(&b, data_bytes);
  for (double s : signal.samples) {
    // Same scale as the decoder, so decoded PCM re-encodes exactly.
    const long q = std::clamp(std::lround(std::clamp(s, -1.0, 1.0) * 32768.0), -32768L, 32767L);
    PutU16(&b, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  return b;
}

void SaveAudio(const AudioSignal &signal, const std::string &path) {
  WriteFileAtomic(path, EncodeWave(signal));
}

void WriteLabelsCsv(const FrameLabels &labels, const std::string &path) {
  std::string text = "frame_index,label\n";
  for (size_t i = 0; i < labels.size(); ++i)
    text += std::to_string(i) + "," + std::to_string(labels[i]) + "\n";
  WriteFileAtomic(path, text);
}

FrameLabels ReadLabelsCsv(const std::string &path) {
  CsvTable table = ReadCsv(path);
  const int col = table.Column("label");
  if (col < 0) throw DataError("'" + path + "' has no label column");
  FrameLabels labels;
  labels.reserve(table.rows.size());
  for (const auto &row : table.rows) {
    if (row[col] != "0" && row[col] != "1")
      throw DataError("label values must be 0 or 1 in '" + path + "'");
    labels.push_back(row[col] == "1" ? 1 : 0);
  }
  return labels;
}

}  // namespace dvad

// dvad/audio-scene.h

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

#ifndef DVAD_AUDIO_SCENE_H_
#define DVAD_AUDIO_SCENE_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dvad/common.h"

namespace dvad {

/// Mono audio with amplitudes in [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate_hz = 8000;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  /// Throws DataError if empty, non-finite or the rate is not positive.
  void Check() const;
};

/// Overlapping frames; row n holds samples [n*hop, n*hop + frame_length).
struct FrameSequence {
  int frame_length = 634;
  int hop = 317;
  RowMatrix frames;

  int64_t NumFrames() const { return frames.rows(); }
};

/// floor((length - frame_length) / hop) + 1, or 0 when length < frame_length.
int64_t NumFrames(int64_t length, int frame_length, int hop);

FrameSequence FrameSignal(const AudioSignal &signal, int frame_length,
                          int hop);

/// Frame is speech iff 10*log10(E_n / E_max) > threshold_db, with energies
/// taken from the clean speech frames.
FrameLabels LabelFrames(const FrameSequence &clean_frames,
                        double threshold_db = -40.0);

/// Windowed-sinc (64 taps, Blackman) sample-rate conversion.
AudioSignal Resample(const AudioSignal &signal, int target_rate_hz);

// ---------------------------------------------------------------------------
// Synthetic sources. The recorded corpus this toolkit was designed around is
// not redistributable, so scenes can be built from generators.

/// Formant-synthesized speech: utterances of voiced/unvoiced syllables
/// separated by exact-zero pauses. Peak amplitude 0.5.
AudioSignal SynthesizeSpeech(double duration_s, int sample_rate_hz,
                             uint64_t seed);

/// "white": N(0,1) samples. "colored": white noise through y[n] = x[n] +
/// 0.9 y[n-1].
AudioSignal GenerateNoise(const std::string &kind, int64_t length,
                          int sample_rate_hz, uint64_t seed);

/// Exponentially decaying noise burst (50 ms, 6 ms time constant), peak 1.
AudioSignal GenerateClick(int sample_rate_hz, uint64_t seed);

/// Source references are either a WAV path or a generator tag
/// ("synthetic" for speech, "white"/"colored"/"none" for noise, "click"/"none"
/// for transients).
struct SceneSpec {
  std::string speech_source = "synthetic";
  double speech_duration_s = 600.0;  // generator only
  std::string stationary_noise_source = "white";
  double snr_db = 10.0;  // +inf disables the stationary noise
  std::string transient_source = "click";
  double transients_per_minute = 30.0;
  double transient_gain_db = 0.0;  // transient peak relative to speech peak
  uint64_t rng_seed = 1;
  int sample_rate_hz = 8000;
  int frame_length = 634;
  int hop = 317;
  double label_threshold_db = -40.0;
};

/// Every component of a mixed scene; noisy == clean + stationary + transient.
struct SceneMix {
  AudioSignal noisy;
  AudioSignal clean;
  AudioSignal stationary;
  AudioSignal transient;
  FrameLabels labels;
  std::vector<int64_t> transient_offsets;
};

SceneMix MixScene(const SceneSpec &spec);

/// Global SNR over the samples covered by speech-active frames.
double ActiveFrameSnrDb(const AudioSignal &speech, const AudioSignal &noise,
                        const FrameLabels &labels, int frame_length, int hop);

// ---------------------------------------------------------------------------
// WAV I/O: RIFF PCM, 16-bit, mono.

AudioSignal DecodeWave(const std::string &bytes, int expected_rate_hz,
                       bool allow_resample);
AudioSignal LoadAudio(const std::string &path, int expected_rate_hz,
                      bool allow_resample);
std::string EncodeWave(const AudioSignal &signal);
/// Samples outside [-1, 1] are clipped.
void SaveAudio(const AudioSignal &signal, const std::string &path);

void WriteLabelsCsv(const FrameLabels &labels, const std::string &path);
FrameLabels ReadLabelsCsv(const std::string &path);

}  // namespace dvad

#endif  // DVAD_AUDIO_SCENE_H_

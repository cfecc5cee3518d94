// src/config.cc

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

#include "dvad/config.h"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dvad/io-util.h"

namespace dvad {

namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(const std::string &key, const std::string &value,
                           const std::string &expected) {
  throw DataError("config key '" + key + "': expected " + expected + ", got '" +
                  value + "'");
}

template <typename T>
T ParseInteger(const std::string &key, const std::string &v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) BadValue(key, v, "an integer");
  return out;
}

double ParseReal(const std::string &key, const std::string &v) {
  double out = 0.0;
  const char *first = v.data();
  if (!v.empty() && v[0] == '+') ++first;  // from_chars rejects a leading '+'
  auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || std::isnan(out))
    BadValue(key, v, "a number");
  return out;
}

bool ParseBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  BadValue(key, v, "true or false");
}

std::vector<std::string> SplitList(const std::string &v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Trim(item));
  return out;
}

template <typename T, typename F>
std::string JoinList(const std::vector<T> &v, F format) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format(v[i]);
  return out;
}

// Field accessors return mutable references; reading goes through a copy.
template <typename F>
auto Read(F field, const PipelineConfig &c) {
  PipelineConfig copy = c;
  return std::remove_reference_t<decltype(field(copy))>(field(copy));
}

struct Binding {
  std::function<void(PipelineConfig &, const std::string &)> set;
  std::function<std::string(const PipelineConfig &)> get;
};

// Ordered key table. Each entry knows how to parse and print its field.
const std::vector<std::pair<std::string, Binding>> &Bindings() {
  using C = PipelineConfig;
  static const auto *table = [] {
    auto *t = new std::vector<std::pair<std::string, Binding>>;
    auto integer = [t](const std::string &key, auto field) {
      t->push_back({key,
                    {[key, field](C &c, const std::string &v) {
                       field(c) = ParseInteger<std::remove_reference_t<decltype(field(c))>>(key, v);
                     },
                     [field](const C &c) {
                       return std::to_string(Read(field, c));
                     }}});
    };
    auto real = [t](const std::string &key, auto field) {
      t->push_back({key,
                    {[key, field](C &c, const std::string &v) { field(c) = ParseReal(key, v); },
                     [field](const C &c) { return FormatDouble(Read(field, c)); }}});
    };
    auto flag = [t](const std::string &key, auto field) {
      t->push_back({key,
                    {[key, field](C &c, const std::string &v) { field(c) = ParseBool(key, v); },
                     [field](const C &c) {
                       return std::string(Read(field, c) ? "true" : "false");
                     }}});
    };
    auto text = [t](const std::string &key, auto field) {
      t->push_back({key,
                    {[key, field](C &c, const std::string &v) {
                       if (v.empty()) BadValue(key, v, "a non-empty value");
                       field(c) = v;
                     },
                     [field](const C &c) { return Read(field, c); }}});
    };
    auto reals = [t](const std::string &key, auto field) {
      t->push_back({key,
                    {[key, field](C &c, const std::string &v) {
                       std::vector<double> out;
                       for (const auto &item : SplitList(v)) out.push_back(ParseReal(key, item));
                       field(c) = out;
                     },
                     [field](const C &c) {
                       return JoinList(Read(field, c), FormatDouble);
                     }}});
    };
    auto integers = [t](const std::string &key, auto field) {
      t->push_back({key,
                    {[key, field](C &c, const std::string &v) {
                       std::vector<int> out;
                       for (const auto &item : SplitList(v))
                         out.push_back(ParseInteger<int>(key, item));
                       field(c) = out;
                     },
                     [field](const C &c) {
                       return JoinList(Read(field, c),
                                       [](int i) { return std::to_string(i); });
                     }}});
    };

    integer("seed", [](C &c) -> uint64_t & { return c.seed; });
    // Scene and framing.
    integer("sample_rate_hz", [](C &c) -> int & { return c.scene.sample_rate_hz; });
    integer("frame_length", [](C &c) -> int & { return c.scene.frame_length; });
    integer("hop", [](C &c) -> int & { return c.scene.hop; });
    real("label_threshold_db", [](C &c) -> double & { return c.scene.label_threshold_db; });
    text("speech_source", [](C &c) -> std::string & { return c.scene.speech_source; });
    real("speech_duration_s", [](C &c) -> double & { return c.scene.speech_duration_s; });
    text("noise_source", [](C &c) -> std::string & { return c.scene.stationary_noise_source; });
    real("snr_db", [](C &c) -> double & { return c.scene.snr_db; });
    text("transient_source", [](C &c) -> std::string & { return c.scene.transient_source; });
    real("transients_per_minute",
         [](C &c) -> double & { return c.scene.transients_per_minute; });
    real("transient_gain_db", [](C &c) -> double & { return c.scene.transient_gain_db; });
    // Features.
    integer("num_ceps", [](C &c) -> int & { return c.mfcc.num_ceps; });
    integer("num_mel_filters", [](C &c) -> int & { return c.mfcc.num_mel_filters; });
    integer("fft_length", [](C &c) -> int & { return c.mfcc.fft_length; });
    real("low_hz", [](C &c) -> double & { return c.mfcc.low_hz; });
    real("high_hz", [](C &c) -> double & { return c.mfcc.high_hz; });
    real("log_floor", [](C &c) -> double & { return c.mfcc.log_floor; });
    flag("weighting_enabled", [](C &c) -> bool & { return c.mfcc.weighting_enabled; });
    integer("noise_window_frames", [](C &c) -> int & { return c.mfcc.noise_window_frames; });
    real("noise_bias", [](C &c) -> double & { return c.mfcc.noise_bias; });
    real("noise_smoothing", [](C &c) -> double & { return c.mfcc.noise_smoothing; });
    // Diffusion maps.
    integer("k", [](C &c) -> int & { return c.diffusion.k; });
    integer("dimension", [](C &c) -> int & { return c.diffusion.dimension; });
    integer("max_dm_points", [](C &c) -> int & { return c.diffusion.max_points; });
    integer("lanczos_max_iterations",
            [](C &c) -> int & { return c.diffusion.lanczos.max_iterations; });
    real("lanczos_tolerance", [](C &c) -> double & { return c.diffusion.lanczos.tolerance; });
    flag("per_batch_dm", [](C &c) -> bool & { return c.per_batch_dm; });
    // Networks.
    integers("hidden_widths", [](C &c) -> std::vector<int> & { return c.hidden_widths; });
    integer("pretrain_epochs", [](C &c) -> int & { return c.train.pretrain_epochs; });
    real("pretrain_lr", [](C &c) -> double & { return c.train.pretrain_lr; });
    real("finetune_lr", [](C &c) -> double & { return c.train.finetune_lr; });
    real("momentum", [](C &c) -> double & { return c.train.momentum; });
    flag("finetune_batch_sum", [](C &c) -> bool & { return c.train.finetune_batch_sum; });
    integer("max_epochs", [](C &c) -> int & { return c.train.max_epochs; });
    real("min_gradient", [](C &c) -> double & { return c.train.min_gradient; });
    integer("batch_size", [](C &c) -> int & { return c.train.batch_size; });
    real("l2_weight", [](C &c) -> double & { return c.train.l2_weight; });
    real("sparsity_weight", [](C &c) -> double & { return c.train.sparsity_weight; });
    real("sparsity_target", [](C &c) -> double & { return c.train.sparsity_target; });
    real("init_std", [](C &c) -> double & { return c.train.init_std; });
    // Classifier.
    real("svm_c", [](C &c) -> double & { return c.svm.c; });
    integer("svm_epochs", [](C &c) -> int & { return c.svm.epochs; });
    flag("svm_class_weighting", [](C &c) -> bool & { return c.svm.class_weighting; });
    // Splits and grid.
    real("ded_train_fraction", [](C &c) -> double & { return c.split.ded_train_fraction; });
    real("classifier_fraction", [](C &c) -> double & { return c.split.classifier_fraction; });
    real("test_fraction", [](C &c) -> double & { return c.split.test_fraction; });
    reals("grid_fractions", [](C &c) -> std::vector<double> & { return c.grid_fractions; });
    reals("grid_ratios", [](C &c) -> std::vector<double> & { return c.grid_ratios; });
    return t;
  }();
  return *table;
}

void CheckSource(const std::string &key, const std::string &value,
                 const std::set<std::string> &tags) {
  if (tags.count(value)) return;
  // Anything else is a WAV path; it is opened when the scene is mixed.
  if (value.size() < 4 || value.substr(value.size() - 4) != ".wav")
    throw DataError("config key '" + key + "': '" + value +
                    "' is neither a generator tag nor a .wav path");
}

}  // namespace

void CheckConfig(const PipelineConfig &c) {
  const SceneSpec &s = c.scene;
  if (s.sample_rate_hz <= 0) throw DataError("sample_rate_hz must be positive");
  if (s.frame_length < 2) throw DataError("frame_length must be >= 2");
  if (s.hop < 1) throw DataError("hop must be >= 1");
  if (!(s.speech_duration_s > 0.0) || !std::isfinite(s.speech_duration_s))
    throw DataError("speech_duration_s must be positive");
  if (std::isnan(s.snr_db) || s.snr_db == -INFINITY)
    throw DataError("snr_db must be finite or +inf");
  if (!(s.transients_per_minute >= 0.0) || !std::isfinite(s.transients_per_minute))
    throw DataError("transients_per_minute must be >= 0");
  if (!std::isfinite(s.transient_gain_db) || !std::isfinite(s.label_threshold_db))
    throw DataError("transient_gain_db and label_threshold_db must be finite");
  CheckSource("speech_source", s.speech_source, {"synthetic"});
  CheckSource("noise_source", s.stationary_noise_source, {"white", "colored", "none"});
  CheckSource("transient_source", s.transient_source, {"click", "none"});
  c.mfcc.Check(s.frame_length);
  if (c.mfcc.sample_rate_hz != s.sample_rate_hz)
    throw InternalError("feature and scene sample rates diverged");
  if (c.diffusion.k < 1) throw DataError("k must be >= 1");
  if (c.diffusion.dimension < 1) throw DataError("dimension must be >= 1");
  if (c.diffusion.max_points <= c.diffusion.k + c.diffusion.dimension)
    throw DataError("max_dm_points must exceed k + dimension");
  if (c.diffusion.lanczos.max_iterations < 1 || !(c.diffusion.lanczos.tolerance > 0.0))
    throw DataError("lanczos settings must be positive");
  if (c.hidden_widths.empty()) throw DataError("hidden_widths must not be empty");
  for (int w : c.hidden_widths)
    if (w < 1) throw DataError("hidden_widths entries must be >= 1");
  c.train.Check();
  c.svm.Check();
  c.split.Check();
  for (const auto *list : {&c.grid_fractions, &c.grid_ratios}) {
    if (list->empty()) throw DataError("grid lists must not be empty");
    for (double v : *list)
      if (!(v > 0.0 && v <= 1.0)) throw DataError("grid entries must lie in (0, 1]");
  }
  for (double r : c.grid_ratios)
    if (r >= 1.0) throw DataError("grid_ratios must lie in (0, 1)");
}

PipelineConfig ValidateConfig(const std::string &document) {
  PipelineConfig config;
  std::map<std::string, const Binding *> index;
  for (const auto &[key, binding] : Bindings()) index[key] = &binding;
  std::set<std::string> seen;
  std::stringstream lines(document);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    auto it = index.find(key);
    if (it == index.end()) throw DataError("unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw DataError("config key '" + key + "' repeated");
    it->second->set(config, value);
  }
  config.mfcc.sample_rate_hz = config.scene.sample_rate_hz;
  config.DeriveSeeds();
  CheckConfig(config);
  return config;
}

PipelineConfig LoadConfig(const std::string &path) {
  return ValidateConfig(ReadFileBytes(path));
}

std::string SerializeConfig(const PipelineConfig &config) {
  std::string out;
  for (const auto &[key, binding] : Bindings())
    out += key + " = " + binding.get(config) + "\n";
  return out;
}

std::string ConfigHash(const PipelineConfig &config) {
  return Sha256Hex(SerializeConfig(config));
}

bool operator==(const PipelineConfig &a, const PipelineConfig &b) {
  return SerializeConfig(a) == SerializeConfig(b) &&
         a.scene.rng_seed == b.scene.rng_seed && a.split.rng_seed == b.split.rng_seed &&
         a.diffusion.seed == b.diffusion.seed && a.train.rng_seed == b.train.rng_seed &&
         a.svm.rng_seed == b.svm.rng_seed && a.mfcc.sample_rate_hz == b.mfcc.sample_rate_hz;
}

}  // namespace dvad

// src/common.cc

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

#include "dvad/common.h"

#include <iostream>
#include <mutex>

namespace dvad {

namespace {
std::mutex sink_mutex;
WarningSink &Sink() {
  static WarningSink sink;
  return sink;
}
}  // namespace

void SetWarningSink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  Sink() = std::move(sink);
}

void Warn(const std::string &message) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  if (Sink())
    Sink()(message);
  else
    std::cerr << "WARNING: " << message << '\n';
}

uint64_t DeriveSeed(uint64_t master, uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dvad

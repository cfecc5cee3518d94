// dvad/bundle-io.h

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

#ifndef DVAD_BUNDLE_IO_H_
#define DVAD_BUNDLE_IO_H_

#include <cstdint>
#include <string>

#include "dvad/pipeline.h"

namespace dvad {

// File layout, all integers little-endian:
//
//   "DVAD"  u32 version  u32 section-count
//   per section: u32 name-length, name, u64 payload-length, payload,
//                u32 CRC-32 of the payload
//
// Payload numbers are u64 / i64 / IEEE-754 binary64; matrices are written as
// u64 rows, u64 cols, then rows * cols doubles in row-major order.

inline constexpr uint32_t kBundleFormatVersion = 1;

std::string SerializeBundle(const ModelBundle &bundle);

/// Throws DataError: "not a bundle", unsupported version (naming both
/// versions), checksum failure, truncation, or an inconsistent bundle.
ModelBundle DeserializeBundle(const std::string &bytes);

void SaveBundle(const ModelBundle &bundle, const std::string &path);
ModelBundle LoadBundle(const std::string &path);

/// SHA-256 of the serialized bundle.
std::string BundleHash(const ModelBundle &bundle);

}  // namespace dvad

#endif  // DVAD_BUNDLE_IO_H_

// dvad/config.h

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

#ifndef DVAD_CONFIG_H_
#define DVAD_CONFIG_H_

#include <string>

#include "dvad/pipeline.h"

namespace dvad {

// Configuration files hold one `key = value` per line; `#` starts a comment.
// Absent keys keep their defaults. Lists are comma separated.

/// Parses and validates a configuration document. Throws DataError naming
/// the offending key or line.
PipelineConfig ValidateConfig(const std::string &document);

PipelineConfig LoadConfig(const std::string &path);

/// Every key, in a fixed order; ValidateConfig(SerializeConfig(c)) == c.
std::string SerializeConfig(const PipelineConfig &config);

/// Cross-field and per-module invariants.
void CheckConfig(const PipelineConfig &config);

/// SHA-256 of SerializeConfig.
std::string ConfigHash(const PipelineConfig &config);

bool operator==(const PipelineConfig &a, const PipelineConfig &b);

}  // namespace dvad

#endif  // DVAD_CONFIG_H_

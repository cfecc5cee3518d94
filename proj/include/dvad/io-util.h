// dvad/io-util.h

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

#ifndef DVAD_IO_UTIL_H_
#define DVAD_IO_UTIL_H_

#include <string>
#include <vector>

#include "dvad/common.h"

namespace dvad {

std::string ReadFileBytes(const std::string &path);

/// Writes to "<path>.tmp" and renames over `path`.
void WriteFileAtomic(const std::string &path, const std::string &bytes);

/// Hex SHA-256 digest.
std::string Sha256Hex(const std::string &bytes);

/// Parses a CSV whose first line is a header. Cells are returned verbatim.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int Column(const std::string &name) const;  // -1 when absent
};
CsvTable ReadCsv(const std::string &path);

/// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace dvad

#endif  // DVAD_IO_UTIL_H_

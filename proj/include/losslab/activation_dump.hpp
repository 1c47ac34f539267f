/* Copyright 2026 The losslab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef LOSSLAB_ACTIVATION_DUMP_HPP_
#define LOSSLAB_ACTIVATION_DUMP_HPP_

#include <filesystem>

#include "losslab/common.hpp"

namespace losslab {

// On-disk layout, all integers little-endian:
//
//   offset  size  field
//   0       8     magic "LLACTDMP"
//   8       4     version (1)
//   12      4     dtype: 4 = f32, 8 = f64
//   16      8     n (rows)
//   24      8     d (columns)
//   32      8     1 if a label block follows the payload, else 0
//   40      ...   row-major payload, n * d values
//   ...     ...   labels, n * int32
//
// Anything after the last block is rejected.
enum class DumpDtype { kF32 = 4, kF64 = 8 };

inline constexpr std::uint32_t kActivationDumpVersion = 1;

struct ActivationDump {
  Matrix data;
  Labels labels;  // empty when the file has no label block
  DumpDtype dtype = DumpDtype::kF64;

  bool has_labels() const { return !labels.empty(); }
};

void write_activation_dump(const std::filesystem::path& path, const Matrix& data,
                           const Labels* labels = nullptr, DumpDtype dtype = DumpDtype::kF64);

// Throws ParseError carrying the byte offset of the first bad or missing
// byte, IoError if the file cannot be opened.
ActivationDump read_activation_dump(const std::filesystem::path& path);

}  // namespace losslab

#endif  // LOSSLAB_ACTIVATION_DUMP_HPP_

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

#include "losslab/activation_dump.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace losslab {

namespace {

constexpr char kMagic[8] = {'L', 'L', 'A', 'C', 'T', 'D', 'M', 'P'};
constexpr std::size_t kHeaderSize = 40;

template <class T>
void put_le(std::vector<unsigned char>& buf, T v) {
  std::make_unsigned_t<T> u;
  std::memcpy(&u, &v, sizeof v);
  for (std::size_t i = 0; i < sizeof u; ++i) buf.push_back(static_cast<unsigned char>(u >> (8 * i)));
}

template <class U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) v = static_cast<U>((v << 8) | p[i]);
  return v;
}

}  // namespace

void write_activation_dump(const std::filesystem::path& path, const Matrix& data,
                           const Labels* labels, DumpDtype dtype) {
  if (labels && static_cast<Eigen::Index>(labels->size()) != data.rows()) {
    throw ShapeMismatch("activation dump: " + std::to_string(labels->size()) + " labels for " +
                        std::to_string(data.rows()) + " rows");
  }
  std::vector<unsigned char> buf;
  const std::size_t width = static_cast<std::size_t>(dtype);
  buf.reserve(kHeaderSize + static_cast<std::size_t>(data.size()) * width + (labels ? labels->size() * 4 : 0));
  buf.insert(buf.end(), kMagic, kMagic + sizeof kMagic);
  put_le<std::uint32_t>(buf, kActivationDumpVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(dtype));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(data.rows()));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(data.cols()));
  put_le<std::uint64_t>(buf, labels ? 1 : 0);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double v = data.data()[i];
    if (dtype == DumpDtype::kF64) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_le(buf, bits);
    } else {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      put_le(buf, bits);
    }
  }
  if (labels) {
    for (int y : *labels) put_le<std::int32_t>(buf, y);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ActivationDump read_activation_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  auto need = [&](std::size_t offset, std::size_t bytes, const char* what) {
    if (buf.size() < offset + bytes) {
      throw ParseError(name + ": truncated " + what + " at byte " + std::to_string(buf.size()), buf.size());
    }
  };

  need(0, kHeaderSize, "header");
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError(name + ": bad magic at byte 0", 0);
  }
  const auto version = get_le<std::uint32_t>(&buf[8]);
  if (version != kActivationDumpVersion) {
    throw ParseError(name + ": unsupported version " + std::to_string(version) + " at byte 8", 8);
  }
  const auto dtype_code = get_le<std::uint32_t>(&buf[12]);
  if (dtype_code != 4 && dtype_code != 8) {
    throw ParseError(name + ": unknown dtype " + std::to_string(dtype_code) + " at byte 12", 12);
  }
  const auto n = get_le<std::uint64_t>(&buf[16]);
  const auto d = get_le<std::uint64_t>(&buf[24]);
  const auto has_labels = get_le<std::uint64_t>(&buf[32]);
  if (has_labels > 1) throw ParseError(name + ": bad label flag at byte 32", 32);
  constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;
  if (n > kMaxElements || d > kMaxElements || (d != 0 && n > kMaxElements / d)) {
    throw ParseError(name + ": implausible shape at byte 16", 16);
  }

  ActivationDump out;
  out.dtype = static_cast<DumpDtype>(dtype_code);
  const std::size_t width = dtype_code;
  const std::size_t payload = static_cast<std::size_t>(n * d) * width;
  need(kHeaderSize, payload, "payload");
  out.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const unsigned char* p = buf.data() + kHeaderSize;
  for (Eigen::Index i = 0; i < out.data.size(); ++i, p += width) {
    if (width == 8) {
      const auto bits = get_le<std::uint64_t>(p);
      std::memcpy(&out.data.data()[i], &bits, sizeof bits);
    } else {
      const auto bits = get_le<std::uint32_t>(p);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      out.data.data()[i] = f;
    }
  }
  std::size_t end = kHeaderSize + payload;
  if (has_labels) {
    need(end, static_cast<std::size_t>(n) * 4, "label block");
    out.labels.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = static_cast<std::int32_t>(get_le<std::uint32_t>(&buf[end + 4 * i]));
      if (y < 0) throw ParseError(name + ": negative label at byte " + std::to_string(end + 4 * i), end + 4 * i);
      out.labels[i] = y;
    }
    end += static_cast<std::size_t>(n) * 4;
  }
  if (buf.size() != end) {
    throw ParseError(name + ": " + std::to_string(buf.size() - end) + " trailing bytes at byte " +
                         std::to_string(end),
                     end);
  }
  return out;
}

}  // namespace losslab

// Copyright 2026 The SBW Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sbw/digest.hpp"

#include <openssl/sha.h>

#include <bit>
#include <stdexcept>

namespace sbw {

Digest Digest::Of(std::string_view data) {
  std::array<std::uint8_t, kSize> out;
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(),
         out.data());
  return Digest(out);
}

std::string Digest::Hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * kSize);
  for (std::uint8_t b : bytes_) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

Digest Digest::FromHex(std::string_view hex) {
  if (hex.size() != 2 * kSize) throw std::invalid_argument("bad digest length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit in digest");
  };
  std::array<std::uint8_t, kSize> out;
  for (std::size_t i = 0; i < kSize; ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return Digest(out);
}

CanonicalWriter& CanonicalWriter::U64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    data_.push_back(static_cast<char>((v >> shift) & 0xff));
  }
  return *this;
}

CanonicalWriter& CanonicalWriter::F64(double v) {
  return U64(std::bit_cast<std::uint64_t>(v));
}

CanonicalWriter& CanonicalWriter::Str(std::string_view s) {
  U64(s.size());
  data_.append(s);
  return *this;
}

CanonicalWriter& CanonicalWriter::Bytes(const Digest& d) {
  data_.append(reinterpret_cast<const char*>(d.bytes().data()), Digest::kSize);
  return *this;
}

}  // namespace sbw

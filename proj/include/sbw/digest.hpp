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

#ifndef SBW_DIGEST_HPP_
#define SBW_DIGEST_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sbw {

// SHA-256 digest.
class Digest {
 public:
  static constexpr std::size_t kSize = 32;

  Digest() { bytes_.fill(0); }
  explicit Digest(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  static Digest Zero() { return Digest(); }
  static Digest Of(std::string_view data);
  static Digest FromHex(std::string_view hex);

  std::string Hex() const;
  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  bool IsZero() const { return *this == Zero(); }

  friend bool operator==(const Digest&, const Digest&) = default;
  friend auto operator<=>(const Digest&, const Digest&) = default;

 private:
  std::array<std::uint8_t, kSize> bytes_;
};

// Builds the canonical byte string that gets hashed: fixed-width big-endian
// integers, IEEE-754 bit patterns for reals and length-prefixed strings.
class CanonicalWriter {
 public:
  CanonicalWriter& U64(std::uint64_t v);
  CanonicalWriter& I64(std::int64_t v) { return U64(static_cast<std::uint64_t>(v)); }
  CanonicalWriter& F64(double v);
  CanonicalWriter& Str(std::string_view s);
  CanonicalWriter& Bytes(const Digest& d);

  const std::string& data() const { return data_; }
  Digest Hash() const { return Digest::Of(data_); }

 private:
  std::string data_;
};

}  // namespace sbw

#endif  // SBW_DIGEST_HPP_

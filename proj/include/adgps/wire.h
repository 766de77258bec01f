// Copyright 2026 The ADGPS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADGPS_WIRE_H_
#define ADGPS_WIRE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adgps {

// Frame = magic (u32) | kind (u8) | version (u64) | payload_len (u32, in
// floats) | payload (payload_len x f64). All little-endian.
inline constexpr std::uint32_t kFrameMagic = 0x41444750;
inline constexpr std::size_t kFrameHeaderSize = 17;
inline constexpr std::uint32_t kMaxPayloadFloats = 1u << 24;

enum class MessageKind : std::uint8_t {
  kGetParams = 1,
  kParams = 2,
  kPushUpdate = 3,
  kAck = 4,
  kError = 5,
};

enum class WireErrorCode : std::uint32_t {
  kBadRequest = 1,
  kLengthMismatch = 2,
  kRejectedUpdate = 3,
  kInternal = 4,
};

struct WireMessage {
  MessageKind kind = MessageKind::kAck;
  std::uint64_t version = 0;
  std::vector<double> payload;

  // Bitwise comparison of the payload, so NaN payloads compare equal to
  // themselves.
  friend bool operator==(const WireMessage& a, const WireMessage& b);
};

// ERROR frames carry the code in the low word of the single payload slot.
WireMessage MakeErrorMessage(WireErrorCode code, std::uint64_t version = 0);
std::uint32_t ErrorCodeOf(const WireMessage& message);

std::vector<std::uint8_t> EncodeMessage(const WireMessage& message);

// Decodes exactly one frame; throws ProtocolError on bad magic, unknown
// kind, oversized or truncated payload, trailing bytes, or a payload length
// that the kind does not allow.
WireMessage DecodeMessage(std::span<const std::uint8_t> bytes);

// Validates a header and returns the total frame size it announces.
std::size_t FrameSizeFromHeader(std::span<const std::uint8_t> header);

// Little-endian primitive codecs shared with the replay spill format.
class ByteWriter {
 public:
  void PutU8(std::uint8_t v) { bytes_.push_back(v); }
  void PutU32(std::uint32_t v);
  void PutU64(std::uint64_t v);
  void PutF64(double v);
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t GetU8();
  std::uint32_t GetU32();
  std::uint64_t GetU64();
  double GetF64();
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(std::size_t n) const;
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace adgps

#endif  // ADGPS_WIRE_H_

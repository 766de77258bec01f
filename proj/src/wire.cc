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

#include "adgps/wire.h"

#include <bit>
#include <cstring>
#include <string>

#include "adgps/errors.h"

namespace adgps {
namespace {

bool KnownKind(std::uint8_t kind) { return kind >= 1 && kind <= 5; }

}  // namespace

bool operator==(const WireMessage& a, const WireMessage& b) {
  if (a.kind != b.kind || a.version != b.version ||
      a.payload.size() != b.payload.size()) {
    return false;
  }
  return a.payload.empty() ||
         std::memcmp(a.payload.data(), b.payload.data(),
                     a.payload.size() * sizeof(double)) == 0;
}

WireMessage MakeErrorMessage(WireErrorCode code, std::uint64_t version) {
  WireMessage m;
  m.kind = MessageKind::kError;
  m.version = version;
  m.payload.push_back(
      std::bit_cast<double>(static_cast<std::uint64_t>(code)));
  return m;
}

std::uint32_t ErrorCodeOf(const WireMessage& message) {
  if (message.kind != MessageKind::kError || message.payload.size() != 1) {
    throw ProtocolError("not an ERROR message");
  }
  return static_cast<std::uint32_t>(
      std::bit_cast<std::uint64_t>(message.payload[0]) & 0xffffffffULL);
}

void ByteWriter::PutU32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutU64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutF64(double v) { PutU64(std::bit_cast<std::uint64_t>(v)); }

void ByteReader::Need(std::size_t n) const {
  if (remaining() < n) throw ProtocolError("truncated input");
}

std::uint8_t ByteReader::GetU8() {
  Need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::GetU32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::GetU64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

double ByteReader::GetF64() { return std::bit_cast<double>(GetU64()); }

std::vector<std::uint8_t> EncodeMessage(const WireMessage& message) {
  if (message.payload.size() > kMaxPayloadFloats) {
    throw ProtocolError("payload too large");
  }
  ByteWriter w;
  w.bytes().reserve(kFrameHeaderSize + 8 * message.payload.size());
  w.PutU32(kFrameMagic);
  w.PutU8(static_cast<std::uint8_t>(message.kind));
  w.PutU64(message.version);
  w.PutU32(static_cast<std::uint32_t>(message.payload.size()));
  for (double v : message.payload) w.PutF64(v);
  return std::move(w.bytes());
}

std::size_t FrameSizeFromHeader(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderSize) throw ProtocolError("truncated header");
  ByteReader r(header.first(kFrameHeaderSize));
  if (r.GetU32() != kFrameMagic) throw ProtocolError("bad magic");
  const std::uint8_t kind = r.GetU8();
  if (!KnownKind(kind)) {
    throw ProtocolError("unknown message kind " + std::to_string(kind));
  }
  r.GetU64();
  const std::uint32_t len = r.GetU32();
  if (len > kMaxPayloadFloats) throw ProtocolError("payload length overflow");
  const auto k = static_cast<MessageKind>(kind);
  if ((k == MessageKind::kAck || k == MessageKind::kGetParams) && len != 0) {
    throw ProtocolError("ACK/GET_PARAMS must have an empty payload");
  }
  if (k == MessageKind::kError && len != 1) {
    throw ProtocolError("ERROR must carry exactly one payload slot");
  }
  return kFrameHeaderSize + 8 * static_cast<std::size_t>(len);
}

WireMessage DecodeMessage(std::span<const std::uint8_t> bytes) {
  const std::size_t frame_size = FrameSizeFromHeader(bytes);
  if (bytes.size() < frame_size) throw ProtocolError("truncated payload");
  if (bytes.size() > frame_size) throw ProtocolError("trailing bytes after frame");
  ByteReader r(bytes);
  r.GetU32();
  WireMessage m;
  m.kind = static_cast<MessageKind>(r.GetU8());
  m.version = r.GetU64();
  const std::uint32_t len = r.GetU32();
  m.payload.resize(len);
  for (std::uint32_t i = 0; i < len; ++i) m.payload[i] = r.GetF64();
  return m;
}

}  // namespace adgps

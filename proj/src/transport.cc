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

#include "adgps/transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include "adgps/errors.h"

namespace adgps {
namespace {

void SendAll(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n =
        ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw TransportError(std::string("send failed: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }
}

// Returns false on orderly EOF before any byte was read.
bool RecvAll(int fd, std::uint8_t* out, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, out + got, size - got, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0 && got == 0) return false;
    if (n <= 0) throw TransportError("connection closed mid-frame");
    got += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads one frame; std::nullopt-like empty vector on clean EOF.
std::vector<std::uint8_t> ReadFrame(int fd) {
  std::vector<std::uint8_t> frame(kFrameHeaderSize);
  if (!RecvAll(fd, frame.data(), kFrameHeaderSize)) return {};
  const std::size_t total = FrameSizeFromHeader(frame);
  frame.resize(total);
  if (total > kFrameHeaderSize &&
      !RecvAll(fd, frame.data() + kFrameHeaderSize, total - kFrameHeaderSize)) {
    throw TransportError("connection closed mid-frame");
  }
  return frame;
}

sockaddr_in Resolve(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* result = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &result) != 0 || !result) {
    throw TransportError("cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
  ::freeaddrinfo(result);
  return addr;
}

WireMessage ParamsMessage(const ParamSnapshot& snapshot) {
  WireMessage m;
  m.kind = MessageKind::kParams;
  m.version = snapshot.version;
  m.payload.assign(snapshot.theta->data(),
                   snapshot.theta->data() + snapshot.theta->size());
  return m;
}

}  // namespace

WireMessage ParamServer::Handle(const WireMessage& request) {
  switch (request.kind) {
    case MessageKind::kGetParams:
      return ParamsMessage(store_.Get());
    case MessageKind::kPushUpdate: {
      if (static_cast<Eigen::Index>(request.payload.size()) != store_.size()) {
        return MakeErrorMessage(WireErrorCode::kLengthMismatch, store_.Get().version);
      }
      const Vector delta = Eigen::Map<const Vector>(
          request.payload.data(), static_cast<Eigen::Index>(request.payload.size()));
      try {
        WireMessage ack;
        ack.kind = MessageKind::kAck;
        ack.version = store_.Push(delta, request.version);
        return ack;
      } catch (const RejectedUpdateError&) {
        return MakeErrorMessage(WireErrorCode::kRejectedUpdate, store_.Get().version);
      }
    }
    default:
      return MakeErrorMessage(WireErrorCode::kBadRequest);
  }
}

int ParamServer::Start(const std::string& host, int port) {
  if (running_) throw TransportError("server already running");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = Resolve(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw TransportError("bind/listen failed: " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  running_ = true;
  accept_thread_ = std::thread([this] { AcceptLoop(); });
  return ntohs(addr.sin_port);
}

void ParamServer::Stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::list<Connection> connections;
  {
    std::lock_guard lock(connections_mutex_);
    for (Connection& c : connections_) ::shutdown(c.fd, SHUT_RDWR);
    connections.swap(connections_);
  }
  for (Connection& c : connections) {
    if (c.thread.joinable()) c.thread.join();
    ::close(c.fd);
  }
}

void ParamServer::AcceptLoop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(connections_mutex_);
    if (!running_) {
      ::close(fd);
      return;
    }
    connections_.push_back(Connection{fd, {}});
    connections_.back().thread = std::thread([this, fd] { Serve(fd); });
  }
}

void ParamServer::Serve(int fd) {
  try {
    while (running_) {
      std::vector<std::uint8_t> frame;
      try {
        frame = ReadFrame(fd);
      } catch (const ProtocolError&) {
        SendAll(fd, EncodeMessage(MakeErrorMessage(WireErrorCode::kBadRequest)));
        return;  // stream framing is lost; drop the connection
      }
      if (frame.empty()) return;
      SendAll(fd, EncodeMessage(Handle(DecodeMessage(frame))));
    }
  } catch (const Error&) {
    // Connection-level failure; the client reconnects.
  }
}

TcpParamClient::TcpParamClient(std::string host, int port, double timeout_seconds)
    : host_(std::move(host)), port_(port), timeout_seconds_(timeout_seconds) {}

TcpParamClient::~TcpParamClient() { Disconnect(); }

void TcpParamClient::Connect() {
  if (fd_ >= 0) return;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout_seconds_);
  tv.tv_usec = static_cast<suseconds_t>((timeout_seconds_ - tv.tv_sec) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  sockaddr_in addr = Resolve(host_, port_);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("connect to " + host_ + ":" + std::to_string(port_) +
                         " failed: " + std::strerror(errno));
  }
  fd_ = fd;
}

void TcpParamClient::Disconnect() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

WireMessage TcpParamClient::RoundTrip(const WireMessage& request) {
  std::lock_guard lock(mutex_);
  try {
    Connect();
    SendAll(fd_, EncodeMessage(request));
    std::vector<std::uint8_t> frame = ReadFrame(fd_);
    if (frame.empty()) throw TransportError("server closed the connection");
    return DecodeMessage(frame);
  } catch (const Error&) {
    Disconnect();
    throw;
  }
}

ParamSnapshot TcpParamClient::Pull() {
  WireMessage request;
  request.kind = MessageKind::kGetParams;
  const WireMessage response = RoundTrip(request);
  if (response.kind != MessageKind::kParams) {
    throw ProtocolError("expected PARAMS response");
  }
  ParamSnapshot snapshot;
  snapshot.version = response.version;
  snapshot.theta = std::make_shared<const Vector>(Eigen::Map<const Vector>(
      response.payload.data(), static_cast<Eigen::Index>(response.payload.size())));
  return snapshot;
}

std::uint64_t TcpParamClient::Push(const Vector& delta, std::uint64_t basis_version) {
  WireMessage request;
  request.kind = MessageKind::kPushUpdate;
  request.version = basis_version;
  request.payload.assign(delta.data(), delta.data() + delta.size());
  const WireMessage response = RoundTrip(request);
  if (response.kind == MessageKind::kAck) return response.version;
  if (response.kind == MessageKind::kError) {
    const auto code = static_cast<WireErrorCode>(ErrorCodeOf(response));
    if (code == WireErrorCode::kRejectedUpdate) {
      throw RejectedUpdateError("server rejected non-finite update");
    }
    throw ProtocolError("server returned error code " +
                        std::to_string(static_cast<std::uint32_t>(code)));
  }
  throw ProtocolError("expected ACK response");
}

}  // namespace adgps

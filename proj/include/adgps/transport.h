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

#ifndef ADGPS_TRANSPORT_H_
#define ADGPS_TRANSPORT_H_

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "adgps/param_store.h"
#include "adgps/wire.h"

namespace adgps {

// Serves a ParamStore over TCP: one request frame, one response frame.
class ParamServer {
 public:
  explicit ParamServer(ParamStore& store) : store_(store) {}
  ~ParamServer() { Stop(); }
  ParamServer(const ParamServer&) = delete;
  ParamServer& operator=(const ParamServer&) = delete;

  // Binds and starts accepting. Port 0 picks an ephemeral port. Returns the
  // bound port.
  int Start(const std::string& host, int port);
  // Closes the listener and every open connection; idempotent.
  void Stop();
  bool running() const { return running_; }

  // Request handling, independent of the socket layer.
  WireMessage Handle(const WireMessage& request);

 private:
  struct Connection {
    int fd = -1;
    std::thread thread;
  };

  void AcceptLoop();
  void Serve(int fd);

  ParamStore& store_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex connections_mutex_;
  std::list<Connection> connections_;
};

// Client side. Connects lazily and reconnects on the next call after a
// failure; socket errors surface as TransportError.
class TcpParamClient : public ParamClient {
 public:
  TcpParamClient(std::string host, int port, double timeout_seconds = 5.0);
  ~TcpParamClient() override;

  ParamSnapshot Pull() override;
  std::uint64_t Push(const Vector& delta, std::uint64_t basis_version) override;

 private:
  WireMessage RoundTrip(const WireMessage& request);
  void Connect();
  void Disconnect();

  std::string host_;
  int port_;
  double timeout_seconds_;
  int fd_ = -1;
  std::mutex mutex_;
};

}  // namespace adgps

#endif  // ADGPS_TRANSPORT_H_

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

#ifndef ADGPS_ERRORS_H_
#define ADGPS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace adgps {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A covariance or precision failed its Cholesky factorization.
class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
};

// Malformed, non-finite or inconsistently shaped input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Regression with fewer samples than unknowns and no regularization.
class UnderdeterminedFitError : public DataError {
 public:
  using DataError::DataError;
};

// LQR backward pass could not make the action Hessian positive definite.
class BackwardPassError : public Error {
 public:
  using Error::Error;
};

// Parameter update containing NaN or Inf.
class RejectedUpdateError : public Error {
 public:
  using Error::Error;
};

// Wire framing or message-level violation.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Socket-level failure; callers retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

class EmptyMemoryError : public Error {
 public:
  using Error::Error;
};

// Simulator produced a non-finite state.
class SimulationFault : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration. `line` is 0 when not tied to a file line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace adgps

#endif  // ADGPS_ERRORS_H_

// Copyright 2026 The qfb Authors
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

#ifndef QFB_ERROR_HPP
#define QFB_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace qfb {

enum class ErrorKind {
    InvalidArgument,
    InvariantViolation,  // non-physical density matrix or Bloch vector
    IntegrationAccuracy,
    Calibration,
    Correction,          // singular confusion matrix
    Encoding,            // field out of range on encode
    InvalidOpcode,
    Framing,             // tag packet without head bits
    Assembly,
    TimingViolation,     // tag arrived after the consuming instruction's deadline
    ExecutionFault,
    IncompleteTomography,
    Config,
    Io,
};

inline std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::InvariantViolation: return "invariant-violation";
        case ErrorKind::IntegrationAccuracy: return "integration-accuracy";
        case ErrorKind::Calibration: return "calibration";
        case ErrorKind::Correction: return "correction";
        case ErrorKind::Encoding: return "encoding";
        case ErrorKind::InvalidOpcode: return "invalid-opcode";
        case ErrorKind::Framing: return "framing";
        case ErrorKind::Assembly: return "assembly";
        case ErrorKind::TimingViolation: return "timing-violation";
        case ErrorKind::ExecutionFault: return "execution-fault";
        case ErrorKind::IncompleteTomography: return "incomplete-tomography";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers (and the CLI's
/// single-line error report) can classify it without parsing the message.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &message) : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

}  // namespace qfb

#endif  // QFB_ERROR_HPP

// Copyright 2026 The qje Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qje {

/// Failure categories shared by the C++ core and the C API status codes.
/// Values are stable: they are returned verbatim through `qje_status`.
enum class ErrorCode : int {
    InvalidArgument = 1,
    Domain = 2,
    TruncationInsufficient = 3,
    QuadratureFailure = 4,
    StepSizeTooCoarse = 5,
    ZeroVariance = 6,
    IllConditioned = 7,
    IntegrationFailure = 8,
    SupportTooSmall = 9,
    Config = 10,
    Io = 11,
    Internal = 12,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

}  // namespace qje

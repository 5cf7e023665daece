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

#include "errors.hpp"

namespace qje {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Domain: return "DomainError";
        case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::StepSizeTooCoarse: return "StepSizeTooCoarse";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::IntegrationFailure: return "IntegrationFailure";
        case ErrorCode::SupportTooSmall: return "SupportTooSmall";
        case ErrorCode::Config: return "ConfigError";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::Internal: return "InternalError";
    }
    return "UnknownError";
}

void raise(ErrorCode code, const std::string& what) {
    throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace qje

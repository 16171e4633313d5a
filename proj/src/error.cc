// src/error.cc

// Copyright 2026 The pstn-sqm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sqm/error.h"

namespace sqm {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kUnsupportedFormat: return "unsupported format";
    case ErrorKind::kEmptyAudio: return "empty audio";
    case ErrorKind::kUnsupportedRate: return "unsupported rate";
    case ErrorKind::kBounds: return "bounds error";
    case ErrorKind::kTooShort: return "too short";
    case ErrorKind::kNoSpeech: return "no speech";
    case ErrorKind::kDegenerateNoise: return "degenerate noise";
    case ErrorKind::kNoActiveWindow: return "no active window";
    case ErrorKind::kInvalidSplit: return "invalid split";
    case ErrorKind::kEmptyRatings: return "empty ratings";
    case ErrorKind::kInvalidK: return "invalid k";
    case ErrorKind::kInsufficientBin: return "insufficient bin";
    case ErrorKind::kInsufficientRatings: return "insufficient ratings";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kDegenerateBatch: return "degenerate batch";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kIncompatibleCheckpoint: return "incompatible checkpoint";
    case ErrorKind::kUndefinedCorrelation: return "undefined correlation";
    case ErrorKind::kDegenerateTest: return "degenerate test";
    case ErrorKind::kMissingLabel: return "missing label";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

}  // namespace sqm

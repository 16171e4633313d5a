// sqm/error.h

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

#ifndef SQM_ERROR_H_
#define SQM_ERROR_H_

#include <stdexcept>
#include <string>

namespace sqm {

enum class ErrorKind {
  kFormat,
  kUnsupportedFormat,
  kEmptyAudio,
  kUnsupportedRate,
  kBounds,
  kTooShort,
  kNoSpeech,
  kDegenerateNoise,
  kNoActiveWindow,
  kInvalidSplit,
  kEmptyRatings,
  kInvalidK,
  kInsufficientBin,
  kInsufficientRatings,
  kInsufficientData,
  kShape,
  kDegenerateBatch,
  kDivergence,
  kIncompatibleCheckpoint,
  kUndefinedCorrelation,
  kDegenerateTest,
  kMissingLabel,
  kInvalidArgument,
  kIo,
};

const char *ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

}  // namespace sqm

#endif  // SQM_ERROR_H_

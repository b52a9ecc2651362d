/*
 * Copyright 2026 The dasr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DASR_ERROR_H_
#define DASR_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dasr {

enum class ErrorCode {
  kFormat,
  kUnsupportedFormat,
  kEmptyFeature,
  kTooShort,
  kTooLong,
  kUndefinedSnr,
  kInvalidShift,
  kInvalidRate,
  kInvalidParameter,
  kShape,
  kIndex,
  kNumeric,
  kConfig,
  kEmptyEncoder,
  kInvalidTarget,
  kUndefinedCer,
  kCheckpoint,
  kDegenerateData,
  kStratification,
  kUndefinedMetric,
  kIo,
  kDependency,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every recoverable failure in the library is reported through this type; the
// code lets callers and tests tell failure classes apart without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dasr

#endif  // DASR_ERROR_H_

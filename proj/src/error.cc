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

#include "dasr/error.h"

namespace dasr {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kEmptyFeature: return "empty feature";
    case ErrorCode::kTooShort: return "too short";
    case ErrorCode::kTooLong: return "too long";
    case ErrorCode::kUndefinedSnr: return "undefined SNR";
    case ErrorCode::kInvalidShift: return "invalid shift";
    case ErrorCode::kInvalidRate: return "invalid rate";
    case ErrorCode::kInvalidParameter: return "invalid parameter";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kIndex: return "index error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kEmptyEncoder: return "empty encoder";
    case ErrorCode::kInvalidTarget: return "invalid target";
    case ErrorCode::kUndefinedCer: return "undefined CER";
    case ErrorCode::kCheckpoint: return "checkpoint error";
    case ErrorCode::kDegenerateData: return "degenerate data";
    case ErrorCode::kStratification: return "stratification error";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kIo: return "IO error";
    case ErrorCode::kDependency: return "dependency error";
  }
  return "error";
}

}  // namespace dasr

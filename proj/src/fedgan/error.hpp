/*
 * Copyright 2026 The FedGAN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDGAN_ERROR_HPP_
#define FEDGAN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fedgan {

// Error categories surfaced through the C API as distinct status codes.
enum class ErrorKind {
  kConfig,
  kDimension,
  kContract,
  kNumeric,
  kFormat,
  kFusion,
  kOracleQuality,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FEDGAN_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

FEDGAN_DEFINE_ERROR(ConfigError, kConfig)
FEDGAN_DEFINE_ERROR(DimensionError, kDimension)
FEDGAN_DEFINE_ERROR(ContractError, kContract)
FEDGAN_DEFINE_ERROR(NumericError, kNumeric)
FEDGAN_DEFINE_ERROR(FormatError, kFormat)
FEDGAN_DEFINE_ERROR(FusionError, kFusion)
FEDGAN_DEFINE_ERROR(OracleQualityError, kOracleQuality)
FEDGAN_DEFINE_ERROR(IoError, kIo)

#undef FEDGAN_DEFINE_ERROR

}  // namespace fedgan

#endif  // FEDGAN_ERROR_HPP_

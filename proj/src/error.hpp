/* Copyright 2026 The nuclass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NUCLASS_ERROR_HPP_
#define NUCLASS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nuclass {

// Every error raised by the library derives from Error. The kind maps 1:1 onto
// the status codes of the C API.
enum class ErrorKind {
  Config,
  Shape,
  Io,
  Range,
  Environment,
  Alignment,
  Stale,
  Precondition,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define NUCLASS_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

NUCLASS_DEFINE_ERROR(ConfigError, Config)
NUCLASS_DEFINE_ERROR(ShapeError, Shape)
NUCLASS_DEFINE_ERROR(IoError, Io)
NUCLASS_DEFINE_ERROR(RangeError, Range)
NUCLASS_DEFINE_ERROR(EnvironmentError, Environment)
NUCLASS_DEFINE_ERROR(AlignmentError, Alignment)
NUCLASS_DEFINE_ERROR(StaleError, Stale)
NUCLASS_DEFINE_ERROR(PreconditionError, Precondition)
NUCLASS_DEFINE_ERROR(NumericError, Numeric)

#undef NUCLASS_DEFINE_ERROR

}  // namespace nuclass

#endif  // NUCLASS_ERROR_HPP_

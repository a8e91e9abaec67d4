// Copyright 2026 The mmfusion Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmfusion {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk content (wrong byte count, missing key, bad field count).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A single record inside an otherwise well-formed container is invalid.
class RecordError : public FormatError {
 public:
  RecordError(std::size_t index, const std::string& what)
      : FormatError("record " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

// Inputs that are well-formed but cannot produce a meaningful result
// (too few distinct cluster samples, zero-area ROI, vertical ground plane).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmfusion

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

#include <filesystem>
#include <iosfwd>
#include <span>

#include "mmfusion/nn/layers.hpp"

namespace mmfusion::nn {

// Layout: a text header
//   MMFUSION-CHECKPOINT 1
//   <parameter count>
//   <name> <rank> <dim0> <dim1> ...     (one line per parameter)
//   END
// followed by every parameter's values as little-endian IEEE-754 doubles, in
// header order.
void save_checkpoint(std::ostream& out, std::span<const Parameter* const> params);
void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params);

// Names and shapes must match the header exactly.
void load_checkpoint(std::istream& in, std::span<Parameter* const> params);
void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);

}  // namespace mmfusion::nn

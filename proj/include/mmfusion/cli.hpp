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

#include <iosfwd>
#include <string>
#include <vector>

namespace mmfusion::cli {

// Environment variable consulted for the dataset root when --root is absent.
inline constexpr const char* kDataRootVariable = "MMFUSION_DATA_ROOT";

// Runs one command line (args[0] is the program name). Returns 0 on success and
// 2 on any failure, after printing a single "error: ..." line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmfusion::cli

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

namespace mmfusion::nn {

// Keeps large freed blocks in the process heap instead of returning them to the
// OS. Training reallocates the same multi-megabyte buffers every step; without
// this each step pays the page faults again. No-op outside glibc.
void retain_freed_memory();

}  // namespace mmfusion::nn

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

#include "mmfusion/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "mmfusion/error.hpp"

namespace mmfusion::nn {
namespace {

constexpr const char* kMagic = "MMFUSION-CHECKPOINT 1";

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(std::ostream& out, std::span<const Parameter* const> params) {
  out << kMagic << "\n" << params.size() << "\n";
  for (const Parameter* p : params) {
    out << p->name << " " << p->shape.size();
    for (int d : p->shape) out << " " << d;
    out << "\n";
  }
  out << "END\n";
  for (const Parameter* p : params) {
    for (double v : p->value) put_f64(out, v);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_checkpoint(out, params);
}

void load_checkpoint(std::istream& in, std::span<Parameter* const> params) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError("checkpoint: bad magic");
  std::size_t count = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> count)) {
    throw FormatError("checkpoint: missing parameter count");
  }
  if (count != params.size()) {
    throw FormatError("checkpoint: holds " + std::to_string(count) + " parameters, model has " +
                      std::to_string(params.size()));
  }
  for (const Parameter* p : params) {
    if (!std::getline(in, line)) throw FormatError("checkpoint: truncated header");
    std::istringstream ls(line);
    std::string name;
    std::size_t rank = 0;
    ls >> name >> rank;
    std::vector<int> shape(rank);
    for (int& d : shape) ls >> d;
    if (!ls || name != p->name || shape != p->shape) {
      throw FormatError("checkpoint: header entry '" + line + "' does not match " + p->name);
    }
  }
  if (!std::getline(in, line) || line != "END") throw FormatError("checkpoint: missing END");
  for (Parameter* p : params) {
    for (double& v : p->value) v = get_f64(in);
  }
}

void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  load_checkpoint(in, params);
}

}  // namespace mmfusion::nn

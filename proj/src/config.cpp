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

#include "mmfusion/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "mmfusion/error.hpp"

namespace mmfusion {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int round_up8(int v) { return (v + 7) / 8 * 8; }

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return cfg;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ValueError("config key " + key + ": not a number: " + it->second);
  }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValueError("config key " + key + ": not an integer: " + s);
  }
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ValueError("config key " + key + ": not a boolean: " + it->second);
}

DetectorConfig DetectorConfig::full_scale() { return {}; }

DetectorConfig DetectorConfig::desk(int divisor) {
  DetectorConfig cfg;
  cfg.grid = BevGridSpec::desk(divisor);
  cfg.image_height = round_up8((360 + divisor - 1) / divisor);
  cfg.image_width = round_up8((1200 + divisor - 1) / divisor);
  return cfg;
}

void DetectorConfig::apply(const KeyValueConfig& kv) {
  if (kv.has("scale")) {
    const long div = kv.get_int("scale", 1);
    *this = div == 1 ? full_scale() : desk(static_cast<int>(div));
  }
  const std::map<std::string, std::function<void(const std::string&)>> setters{
      {"scale", [](const std::string&) {}},
      {"grid.x_min", [&](const std::string& k) { grid.x_min = kv.get_double(k, 0); }},
      {"grid.x_max", [&](const std::string& k) { grid.x_max = kv.get_double(k, 0); }},
      {"grid.y_min", [&](const std::string& k) { grid.y_min = kv.get_double(k, 0); }},
      {"grid.y_max", [&](const std::string& k) { grid.y_max = kv.get_double(k, 0); }},
      {"grid.z_min", [&](const std::string& k) { grid.z_min = kv.get_double(k, 0); }},
      {"grid.z_max", [&](const std::string& k) { grid.z_max = kv.get_double(k, 0); }},
      {"grid.resolution", [&](const std::string& k) { grid.resolution = kv.get_double(k, 0); }},
      {"grid.slices", [&](const std::string& k) { grid.n_slices = static_cast<int>(kv.get_int(k, 0)); }},
      {"image.height", [&](const std::string& k) { image_height = static_cast<int>(kv.get_int(k, 0)); }},
      {"image.width", [&](const std::string& k) { image_width = static_cast<int>(kv.get_int(k, 0)); }},
      {"net.base_channels", [&](const std::string& k) { base_channels = static_cast<int>(kv.get_int(k, 0)); }},
      {"net.fc_width", [&](const std::string& k) { fc_width = static_cast<int>(kv.get_int(k, 0)); }},
      {"net.roi_pool", [&](const std::string& k) { roi_pool_size = static_cast<int>(kv.get_int(k, 0)); }},
      {"anchor.height", [&](const std::string& k) { anchor_height = kv.get_double(k, 0); }},
      {"anchor.stride", [&](const std::string& k) { anchor_stride = kv.get_double(k, 0); }},
      {"anchor.dims",
       [&](const std::string& k) {
         std::istringstream in(kv.get_string(k, ""));
         std::vector<anchors::DimPair> dims;
         std::string tok;
         while (in >> tok) {
           const auto x = tok.find('x');
           if (x == std::string::npos) throw ValueError("anchor.dims entries look like 3.9x1.6");
           try {
             dims.push_back({std::stod(tok.substr(0, x)), std::stod(tok.substr(x + 1))});
           } catch (const std::exception&) {
             throw ValueError("anchor.dims: bad entry " + tok);
           }
         }
         if (dims.empty()) throw ValueError("anchor.dims is empty");
         anchor_dims = dims;
       }},
      {"rpn.positive_iou", [&](const std::string& k) { rpn_positive_iou = kv.get_double(k, 0); }},
      {"rpn.negative_iou", [&](const std::string& k) { rpn_negative_iou = kv.get_double(k, 0); }},
      {"rpn.nms_iou", [&](const std::string& k) { rpn_nms_iou = kv.get_double(k, 0); }},
      {"rpn.batch", [&](const std::string& k) { rpn_batch = static_cast<int>(kv.get_int(k, 0)); }},
      {"rpn.proposals_train", [&](const std::string& k) { proposals_train = static_cast<int>(kv.get_int(k, 0)); }},
      {"rpn.proposals_test", [&](const std::string& k) { proposals_test = static_cast<int>(kv.get_int(k, 0)); }},
      {"dh.positive_iou", [&](const std::string& k) { dh_positive_iou = kv.get_double(k, 0); }},
      {"dh.nms_iou", [&](const std::string& k) { dh_nms_iou = kv.get_double(k, 0); }},
      {"dh.batch", [&](const std::string& k) { dh_batch = static_cast<int>(kv.get_int(k, 0)); }},
      {"dh.gt_proposals", [&](const std::string& k) { gt_proposals = kv.get_bool(k, true); }},
      {"train.learning_rate", [&](const std::string& k) { learning_rate = kv.get_double(k, 0); }},
      {"train.lr_decay", [&](const std::string& k) { lr_decay = kv.get_double(k, 0); }},
      {"train.decay_every", [&](const std::string& k) { decay_every = kv.get_int(k, 0); }},
      {"train.iterations", [&](const std::string& k) { iterations = kv.get_int(k, 0); }},
      {"train.checkpoint_every", [&](const std::string& k) { checkpoint_every = kv.get_int(k, 0); }},
      {"seed", [&](const std::string& k) { seed = static_cast<std::uint64_t>(kv.get_int(k, 0)); }},
  };
  for (const auto& [key, value] : kv.entries()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ValueError("unknown config key: " + key);
    it->second(key);
  }
  grid.validate();
  if (image_height % 8 != 0 || image_width % 8 != 0 || image_height <= 0 || image_width <= 0) {
    throw ValueError("image size must be a positive multiple of 8");
  }
  if (grid.rows() % 8 != 0 || grid.cols() % 8 != 0) {
    throw ValueError("BEV grid size must be a multiple of 8");
  }
  if (base_channels < 1 || fc_width < 1 || roi_pool_size < 1) {
    throw ValueError("network widths must be positive");
  }
  if (!(rpn_negative_iou <= rpn_positive_iou)) throw ValueError("rpn.negative_iou > rpn.positive_iou");
  if (decay_every < 1 || iterations < 0) throw ValueError("bad training schedule");
}

std::string DetectorConfig::to_text() const {
  std::ostringstream os;
  os.precision(10);
  os << "grid.x_min = " << grid.x_min << "\ngrid.x_max = " << grid.x_max
     << "\ngrid.y_min = " << grid.y_min << "\ngrid.y_max = " << grid.y_max
     << "\ngrid.z_min = " << grid.z_min << "\ngrid.z_max = " << grid.z_max
     << "\ngrid.resolution = " << grid.resolution << "\ngrid.slices = " << grid.n_slices
     << "\nimage.height = " << image_height << "\nimage.width = " << image_width
     << "\nnet.base_channels = " << base_channels << "\nnet.fc_width = " << fc_width
     << "\nnet.roi_pool = " << roi_pool_size << "\nanchor.height = " << anchor_height
     << "\nanchor.stride = " << anchor_stride << "\nanchor.dims =";
  for (const auto& d : anchor_dims) os << " " << d.l << "x" << d.w;
  os << "\nrpn.positive_iou = " << rpn_positive_iou << "\nrpn.negative_iou = " << rpn_negative_iou
     << "\nrpn.nms_iou = " << rpn_nms_iou << "\nrpn.batch = " << rpn_batch
     << "\nrpn.proposals_train = " << proposals_train << "\nrpn.proposals_test = " << proposals_test
     << "\ndh.positive_iou = " << dh_positive_iou << "\ndh.nms_iou = " << dh_nms_iou
     << "\ndh.batch = " << dh_batch << "\ndh.gt_proposals = " << (gt_proposals ? "true" : "false")
     << "\ntrain.learning_rate = " << learning_rate << "\ntrain.lr_decay = " << lr_decay
     << "\ntrain.decay_every = " << decay_every << "\ntrain.iterations = " << iterations
     << "\ntrain.checkpoint_every = " << checkpoint_every << "\nseed = " << seed << "\n";
  return os.str();
}

DetectorConfig load_detector_config(std::string_view text) {
  DetectorConfig cfg;
  cfg.apply(KeyValueConfig::parse(text));
  return cfg;
}

}  // namespace mmfusion

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

// Five hand-built frames with hand-tabulated AP values.
//
// Ranked detections over all frames and their role per bin (T = TP, F = FP,
// - = ignored):
//
//   score  frame  what                     easy  moderate  hard
//   0.95   f0     exact on A (easy)         T      T        T
//   0.90   f1     exact on C (easy)         T      T        T
//   0.85   f3     inside a DontCare region  -      -        -
//   0.80   f1     nowhere near anything     F      F        F
//   0.75   f4     H (easy) shifted, IoU 0.5 F      F        F
//   0.70   f2     exact on D (hard)         -      -        T
//   0.60   f0     exact on B (moderate)     -      T        T
//   0.50   f4     exact on F (too small)    -      -        -
//   0.40   f4     exact on a Van            -      -        -
//   0.30   f2     nowhere near anything     F      F        F
//
// Positives: easy {A, C, E, H} = 4, moderate adds B = 5, hard adds D = 6.
//
//   easy:     P/R = 1/.25 1/.5 .67/.5 .5/.5 .4/.5
//             R11: anchors 0..0.5 reach precision 1, the rest 0 -> 6/11
//             R40: anchors 1/40..20/40 reach 1 -> 20/40
//   moderate: P/R = 1/.2 1/.4 .67/.4 .5/.4 .6/.6 .5/.6
//             R11: 0..0.4 -> 1 (5 anchors), 0.5 and 0.6 -> 0.6 -> 6.2/11
//   hard:     P/R = 1/.17 1/.33 .67/.33 .5/.33 .6/.5 .67/.67 .57/.67
//             R11: 0..0.3 -> 1 (4 anchors), 0.4..0.6 -> 2/3 (3 anchors) -> 6/11

#include <string>
#include <vector>

#include "mmfusion/eval_ap.hpp"
#include "mmfusion/types.hpp"

namespace fixture {

using mmfusion::GroundTruthObject;
using mmfusion::eval::FrameObjects;

// Camera-frame car of 3.9 x 1.6 x 1.5 m at (x, 1.5, z), yaw 0, whose 2D box
// is `height_px` tall with its left edge at `left`.
inline GroundTruthObject car(double x, double z, double height_px, int occlusion,
                             double truncation, double left = 100) {
  GroundTruthObject o;
  o.class_name = "Car";
  o.truncation = truncation;
  o.occlusion = occlusion;
  o.left = left;
  o.top = 150;
  o.right = left + 2 * height_px;
  o.bottom = 150 + height_px;
  o.h = 1.5;
  o.w = 1.6;
  o.l = 3.9;
  o.x = x;
  o.y = 1.5;
  o.z = z;
  return o;
}

inline GroundTruthObject scored(GroundTruthObject o, double score) {
  o.score = score;
  o.truncation = -1;
  o.occlusion = -1;
  return o;
}

struct Suite {
  FrameObjects gts, dets;
};

inline Suite five_frames() {
  Suite s;
  const GroundTruthObject a = car(-4, 20, 50, 0, 0.0);
  const GroundTruthObject b = car(4, 30, 30, 1, 0.2, 400);
  s.gts["f0"] = {a, b};
  s.dets["f0"] = {scored(a, 0.95), scored(b, 0.6)};

  const GroundTruthObject c = car(0, 15, 60, 0, 0.0);
  s.gts["f1"] = {c};
  s.dets["f1"] = {scored(c, 0.9), scored(car(10, 45, 30, 0, 0, 900), 0.8)};

  const GroundTruthObject d = car(2, 25, 30, 2, 0.4);
  s.gts["f2"] = {d};
  s.dets["f2"] = {scored(d, 0.7), scored(car(-12, 50, 30, 0, 0, 1000), 0.3)};

  const GroundTruthObject e = car(-3, 12, 80, 0, 0.1);
  GroundTruthObject dontcare;
  dontcare.class_name = "DontCare";
  dontcare.left = 600;
  dontcare.top = 100;
  dontcare.right = 800;
  dontcare.bottom = 250;
  dontcare.x = dontcare.y = dontcare.z = -1000;
  dontcare.h = dontcare.w = dontcare.l = -1;
  dontcare.rotation_y = -10;
  s.gts["f3"] = {e, dontcare};
  s.dets["f3"] = {scored(car(15, 60, 40, 0, 0, 640), 0.85)};

  const GroundTruthObject f = car(-6, 40, 20, 0, 0.0);
  GroundTruthObject van = car(6, 35, 45, 0, 0.0, 500);
  van.class_name = "Van";
  const GroundTruthObject h = car(0, 10, 90, 0, 0.0);
  GroundTruthObject h_shifted = h;
  h_shifted.x += 1.3;  // along the 3.9 m length: overlap 2.6 / union 5.2
  s.gts["f4"] = {f, van, h};
  s.dets["f4"] = {scored(h_shifted, 0.75), scored(f, 0.5), scored(van, 0.4)};
  s.dets["f4"][2].class_name = "Car";
  return s;
}

inline constexpr double kEasyR11 = 6.0 / 11.0;
inline constexpr double kModerateR11 = 6.2 / 11.0;
inline constexpr double kHardR11 = 6.0 / 11.0;
inline constexpr double kEasyR40 = 20.0 / 40.0;

}  // namespace fixture

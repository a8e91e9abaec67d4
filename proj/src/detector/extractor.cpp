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

#include "mmfusion/detector/extractor.hpp"

#include "mmfusion/error.hpp"

namespace mmfusion::detector {
namespace {

nn::Conv2d conv3x3(const std::string& name, int cin, int cout) {
  return nn::Conv2d(name, 3, 3, cin, cout, 1, nn::Padding::kSame, true);
}

void check_divisible(const nn::Shape4& s) {
  if (s.h % 8 != 0 || s.w % 8 != 0 || s.h <= 0 || s.w <= 0) {
    throw ShapeError("feature extractor input " + s.str() + " is not divisible by 8");
  }
}

nn::Shape4 with_channels(nn::Shape4 s, int c) {
  s.c = c;
  return s;
}

}  // namespace

FeatureExtractor::FeatureExtractor(const std::string& prefix, int in_channels, int base)
    : in_(in_channels),
      base_(base),
      conv1a_(conv3x3(prefix + ".conv1a", in_channels, base)),
      conv1b_(conv3x3(prefix + ".conv1b", base, base)),
      conv2a_(conv3x3(prefix + ".conv2a", base, 2 * base)),
      conv2b_(conv3x3(prefix + ".conv2b", 2 * base, 2 * base)),
      conv3a_(conv3x3(prefix + ".conv3a", 2 * base, 4 * base)),
      conv3b_(conv3x3(prefix + ".conv3b", 4 * base, 4 * base)),
      conv4a_(conv3x3(prefix + ".conv4a", 4 * base, 8 * base)),
      conv4b_(conv3x3(prefix + ".conv4b", 8 * base, 8 * base)),
      up1_(prefix + ".upconv1", 8 * base, 4 * base),
      up2_(prefix + ".upconv2", 8 * base, 2 * base),
      up3_(prefix + ".upconv3", 4 * base, base),
      conv5_(conv3x3(prefix + ".conv5", 2 * base, base)),
      conv6_(conv3x3(prefix + ".conv6", 5 * base, 2 * base)),
      conv7_(conv3x3(prefix + ".conv7", 10 * base, 4 * base)) {
  if (in_channels < 1 || base < 1) throw ValueError("extractor channel counts must be positive");
}

PyramidFeatures FeatureExtractor::forward(const nn::Tensor4& x) {
  check_divisible(x.shape());
  const nn::Tensor4 c1 = conv1b_.forward(conv1a_.forward(x));
  const nn::Tensor4 c2 = conv2b_.forward(conv2a_.forward(pool1_.forward(c1)));
  const nn::Tensor4 c3 = conv3b_.forward(conv3a_.forward(pool2_.forward(c2)));
  const nn::Tensor4 c4 = conv4b_.forward(conv4a_.forward(pool3_.forward(c3)));

  const nn::Tensor4 u1 = up1_.forward(c4);
  const nn::Tensor4 u2 = up2_.forward(nn::concat_channels({&u1, &c3}));
  const nn::Tensor4 u3 = up3_.forward(nn::concat_channels({&u2, &c2}));

  PyramidFeatures out;
  out.full = conv5_.forward(nn::concat_channels({&u3, &c1}));
  const nn::Tensor4 p5 = pool5_.forward(out.full);
  out.half = conv6_.forward(nn::concat_channels({&p5, &c2, &u2}));
  const nn::Tensor4 p6 = pool6_.forward(out.half);
  out.quarter = conv7_.forward(nn::concat_channels({&p6, &c3, &u1}));
  return out;
}

void FeatureExtractor::backward(const PyramidFeatures& g) {
  const int b = base_;
  const int split7[] = {2 * b, 4 * b, 4 * b};
  auto d7 = nn::split_channels(conv7_.backward(g.quarter), split7);  // p6, c3, u1
  nn::Tensor4 d_half = g.half;
  d_half += pool6_.backward(d7[0]);
  const int split6[] = {b, 2 * b, 2 * b};
  auto d6 = nn::split_channels(conv6_.backward(d_half), split6);  // p5, c2, u2
  nn::Tensor4 d_full = g.full;
  d_full += pool5_.backward(d6[0]);
  const int split5[] = {b, b};
  auto d5 = nn::split_channels(conv5_.backward(d_full), split5);  // u3, c1

  const int split_u3[] = {2 * b, 2 * b};
  auto du3 = nn::split_channels(up3_.backward(d5[0]), split_u3);  // u2, c2
  nn::Tensor4 d_u2 = d6[2];
  d_u2 += du3[0];
  const int split_u2[] = {4 * b, 4 * b};
  auto du2 = nn::split_channels(up2_.backward(d_u2), split_u2);  // u1, c3
  nn::Tensor4 d_u1 = d7[2];
  d_u1 += du2[0];
  const nn::Tensor4 d_c4 = up1_.backward(d_u1);

  nn::Tensor4 d_c3 = d7[1];
  d_c3 += du2[1];
  d_c3 += pool3_.backward(conv4a_.backward(conv4b_.backward(d_c4)));
  nn::Tensor4 d_c2 = d6[1];
  d_c2 += du3[1];
  d_c2 += pool2_.backward(conv3a_.backward(conv3b_.backward(d_c3)));
  nn::Tensor4 d_c1 = d5[1];
  d_c1 += pool1_.backward(conv2a_.backward(conv2b_.backward(d_c2)));
  conv1a_.backward(conv1b_.backward(d_c1), /*input_grad=*/false);
}

std::vector<NamedShape> FeatureExtractor::trace_shapes(const nn::Shape4& input) const {
  check_divisible(input);
  const int b = base_;
  std::vector<NamedShape> t;
  const nn::Shape4 c1 = conv1b_.output_shape(conv1a_.output_shape(input));
  t.push_back({"Conv-1", c1});
  const nn::Shape4 c2 =
      conv2b_.output_shape(conv2a_.output_shape(nn::MaxPool2d::output_shape(c1)));
  t.push_back({"Conv-2", c2});
  const nn::Shape4 c3 =
      conv3b_.output_shape(conv3a_.output_shape(nn::MaxPool2d::output_shape(c2)));
  t.push_back({"Conv-3", c3});
  const nn::Shape4 c4 =
      conv4b_.output_shape(conv4a_.output_shape(nn::MaxPool2d::output_shape(c3)));
  t.push_back({"Conv-4", c4});
  const nn::Shape4 u1 = up1_.output_shape(c4);
  t.push_back({"Upconv-1", u1});
  const nn::Shape4 u2 = up2_.output_shape(with_channels(u1, u1.c + c3.c));
  t.push_back({"Upconv-2", u2});
  const nn::Shape4 u3 = up3_.output_shape(with_channels(u2, u2.c + c2.c));
  t.push_back({"Upconv-3", u3});
  const nn::Shape4 c5 = conv5_.output_shape(with_channels(u3, u3.c + c1.c));
  t.push_back({"Conv-5", c5});
  const nn::Shape4 p5 = nn::MaxPool2d::output_shape(c5);
  const nn::Shape4 c6 = conv6_.output_shape(with_channels(p5, p5.c + c2.c + u2.c));
  t.push_back({"Conv-6", c6});
  const nn::Shape4 p6 = nn::MaxPool2d::output_shape(c6);
  const nn::Shape4 c7 = conv7_.output_shape(with_channels(p6, p6.c + c3.c + u1.c));
  t.push_back({"Conv-7", c7});
  if (c5.c != b || c6.c != 2 * b || c7.c != 4 * b) throw ShapeError("extractor channel plan broken");
  return t;
}

std::vector<nn::Parameter*> FeatureExtractor::parameters() {
  std::vector<nn::Parameter*> out;
  for (nn::Conv2d* c : {&conv1a_, &conv1b_, &conv2a_, &conv2b_, &conv3a_, &conv3b_, &conv4a_,
                        &conv4b_}) {
    for (nn::Parameter* p : c->parameters()) out.push_back(p);
  }
  for (nn::ConvTranspose2d* u : {&up1_, &up2_, &up3_}) {
    for (nn::Parameter* p : u->parameters()) out.push_back(p);
  }
  for (nn::Conv2d* c : {&conv5_, &conv6_, &conv7_}) {
    for (nn::Parameter* p : c->parameters()) out.push_back(p);
  }
  return out;
}

void FeatureExtractor::initialize(nn::Rng& rng) {
  for (nn::Conv2d* c : {&conv1a_, &conv1b_, &conv2a_, &conv2b_, &conv3a_, &conv3b_, &conv4a_,
                        &conv4b_, &conv5_, &conv6_, &conv7_}) {
    nn::he_uniform(c->weight(), 9 * c->in_channels(), rng);
    c->bias().value.assign(c->bias().size(), 0.0);
  }
  // Each output of a 4x4 stride-2 transposed convolution sees 2x2 taps per input channel.
  for (nn::ConvTranspose2d* u : {&up1_, &up2_, &up3_}) {
    nn::he_uniform(u->weight(), 4 * u->weight().shape[3], rng);
    u->bias().value.assign(u->bias().size(), 0.0);
  }
}

}  // namespace mmfusion::detector

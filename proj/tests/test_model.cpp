#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmtsm/model/tsm_model.hpp"
#include "mmtsm/train/loss.hpp"
#include "test_util.hpp"

using namespace mmtsm;
using testutil::rand_tensor;

namespace {

struct Counts {
  long trainable = 0;
  long bn = 0;
};

void add_conv(Counts& c, long out_c, long in_per_group, long k, bool bias = false) {
  c.trainable += out_c * in_per_group * k * k + (bias ? out_c : 0);
}
void add_bn(Counts& c, long ch) {
  c.trainable += 2 * ch;
  c.bn += 2 * ch;
}

/// Scalar counts rebuilt from the layer shapes alone.
Counts deep_oracle(const std::vector<int>& layout, Real w, int ci, int classes, int m) {
  Counts c;
  const int stem = scaled_channels(64, w);
  add_conv(c, stem, ci, 7);
  add_bn(c, stem);
  int in_c = stem;
  const int bases[4] = {64, 128, 256, 512};
  for (int stage = 0; stage < 4; ++stage) {
    const int p = scaled_channels(bases[stage], w);
    for (int b = 0; b < layout[stage]; ++b) {
      const int stride = (b == 0 && stage != 0) ? 2 : 1;
      add_conv(c, p, in_c, 1);
      add_bn(c, p);
      add_conv(c, p, p, 3);
      add_bn(c, p);
      add_conv(c, 4 * p, p, 1);
      add_bn(c, 4 * p);
      if (stride != 1 || in_c != 4 * p) {
        add_conv(c, 4 * p, in_c, 1);
        add_bn(c, 4 * p);
      }
      in_c = 4 * p;
    }
  }
  c.trainable += static_cast<long>(m) * classes * in_c + static_cast<long>(m) * classes;
  return c;
}

Counts mobile_oracle(Real w, int ci, int classes, int m) {
  Counts c;
  const int stem = scaled_channels(16, w);
  add_conv(c, stem, ci, 3);
  add_bn(c, stem);
  int in_c = stem;
  const int outs[4] = {24, 32, 64, 96};
  for (int s = 0; s < 4; ++s) {
    const int out_c = scaled_channels(outs[s], w);
    for (int b = 0; b < 2; ++b) {
      const int e = in_c * 4;
      add_conv(c, e, in_c, 1);
      add_bn(c, e);
      add_conv(c, e, 1, 3);  // depthwise
      add_bn(c, e);
      add_conv(c, out_c, e, 1);
      add_bn(c, out_c);
      in_c = out_c;
    }
  }
  const int last = scaled_channels(256, w);
  add_conv(c, last, in_c, 1);
  add_bn(c, last);
  c.trainable += static_cast<long>(m) * classes * last + static_cast<long>(m) * classes;
  return c;
}

std::pair<long, long> walk_params(TsmModel& model) {
  long trainable = 0, buffers = 0;
  for (const auto& p : model.params()) {
    if (p.buffer)
      buffers += static_cast<long>(p.value->numel());
    else
      trainable += static_cast<long>(p.value->numel());
  }
  return {trainable, buffers};
}

bool has_param(TsmModel& model, const std::string& name) {
  for (const auto& p : model.params())
    if (p.name == name) return true;
  return false;
}

template <typename Map>
TensorR permute_segments(const TensorR& x, int segments, Map&& map) {
  TensorR y(x.shape());
  const int n = x.dim(0);
  const std::size_t frame = x.numel() / static_cast<std::size_t>(n);
  const int groups = n / segments;
  for (int g = 0; g < groups; ++g)
    for (int s = 0; s < segments; ++s)
      std::copy_n(x.data() + (static_cast<std::size_t>(g) * segments + map(s)) * frame, frame,
                  y.data() + (static_cast<std::size_t>(g) * segments + s) * frame);
  return y;
}

}  // namespace

TEST_CASE("channel scaling rounds and never collapses to zero") {
  CHECK(scaled_channels(64, 1.0) == 64);
  CHECK(scaled_channels(64, 0.125) == 8);
  CHECK(scaled_channels(24, 0.125) == 3);
  CHECK(scaled_channels(1, 0.01) == 1);
}

TEST_CASE("parameter counts match the layer-shape arithmetic") {
  struct Case {
    const char* preset;
    std::vector<int> layout;
    Real w;
  };
  for (const auto& c : {Case{"deep-50", {3, 4, 6, 3}, 0.125},
                        Case{"deep-101", {3, 4, 23, 3}, 0.125},
                        Case{"mobile", {}, 0.5}}) {
    CAPTURE(c.preset);
    ModelConfig cfg;
    cfg.preset = c.preset;
    cfg.width_mult = c.w;
    cfg.classes = 5;
    TsmModel model(cfg);
    const Counts want = c.layout.empty() ? mobile_oracle(c.w, 3, 5, 3)
                                         : deep_oracle(c.layout, c.w, 3, 5, 3);
    const auto [trainable, buffers] = walk_params(model);
    CHECK(trainable == want.trainable);
    CHECK(buffers == want.bn);  // each bn channel carries one mean and one var
  }
}

TEST_CASE("parameter names follow the layer layout") {
  ModelConfig cfg;
  cfg.width_mult = 0.125;
  TsmModel model(cfg);
  CHECK(has_param(model, "backbone.stem.conv.weight"));
  CHECK(has_param(model, "backbone.layer1.0.downsample.conv.weight"));
  CHECK(has_param(model, "backbone.layer4.2.bn3.running_var"));
  CHECK(has_param(model, "head.weight"));
  CHECK_FALSE(has_param(model, "backbone.layer4.3.conv1.weight"));

  ModelConfig deep;
  deep.preset = "deep-101";
  deep.width_mult = 0.125;
  TsmModel big(deep);
  CHECK(has_param(big, "backbone.layer3.22.conv2.weight"));

  ModelConfig mob;
  mob.preset = "mobile";
  mob.width_mult = 0.25;
  TsmModel small(mob);
  CHECK(has_param(small, "backbone.features.7.project.weight"));
  CHECK(has_param(small, "backbone.final.conv.weight"));

  ModelConfig bad;
  bad.preset = "deep-18";
  CHECK_THROWS_AS(TsmModel{bad}, std::invalid_argument);
}

TEST_CASE("forward shape and input validation") {
  ModelConfig cfg;
  cfg.width_mult = 0.125;
  cfg.classes = 4;
  TsmModel model(cfg);
  model.init(11);
  CHECK(model.features() == 256);

  const TensorR x = rand_tensor({2 * 3 * 2, 3, 32, 32}, 210);
  const TensorR y = model.forward(x, 2, false);
  REQUIRE(y.rank() == 3);
  CHECK(y.dim(0) == 2);
  CHECK(y.dim(1) == 3);
  CHECK(y.dim(2) == 4);
  for (std::size_t i = 0; i < y.numel(); ++i) CHECK(std::isfinite(y[i]));

  CHECK_THROWS_AS(model.forward(x, 0, false), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(rand_tensor({10, 3, 32, 32}, 1), 2, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(model.forward(rand_tensor({12, 3, 32}, 1), 2, false), std::invalid_argument);
}

TEST_CASE("segments are exchangeable without shift, coupled with it") {
  ModelConfig cfg;
  cfg.width_mult = 0.125;
  cfg.classes = 4;
  TsmModel model(cfg);
  model.init(3);
  const int segments = 4;
  const TensorR x = rand_tensor({1 * 3 * segments, 3, 16, 16}, 220);
  const TensorR x_rot =
      permute_segments(x, segments, [&](int s) { return (s + 1) % segments; });
  const TensorR x_rev =
      permute_segments(x, segments, [&](int s) { return segments - 1 - s; });

  model.set_shift_enabled(false);
  const TensorR off_base = model.forward(x, segments, false);
  const TensorR off_rot = model.forward(x_rot, segments, false);
  CHECK(max_abs_diff(off_base, off_rot) <= 1e-9);

  model.set_shift_enabled(true);
  const TensorR on_base = model.forward(x, segments, false);
  const TensorR on_rev = model.forward(x_rev, segments, false);
  CHECK(max_abs_diff(on_base, on_rev) > 1e-6);    // time direction is visible
  CHECK(max_abs_diff(on_base, off_base) > 1e-6);  // shift changes the function
}

TEST_CASE("whole-model gradient agrees with a directional finite difference") {
  ModelConfig cfg;
  cfg.preset = "mobile";
  cfg.width_mult = 0.25;
  cfg.classes = 3;
  TsmModel model(cfg);
  model.init(5);
  const int segments = 2;
  const TensorR x = rand_tensor({2 * 3 * segments, 3, 16, 16}, 230);
  const std::vector<int> labels = {0, 2};
  const FusionWeights fw;

  auto loss_value = [&] {
    const TensorR logits = model.forward(x, segments, true);
    return fused_cross_entropy(logits, labels, fw, false).value;
  };

  const TensorR logits = model.forward(x, segments, true);
  const LossResult res = fused_cross_entropy(logits, labels, fw);
  model.zero_grads();
  model.backward(res.glogits);

  auto& refs = model.params();
  std::mt19937_64 rng(231);
  std::uniform_real_distribution<Real> dist(-1.0, 1.0);
  std::vector<std::vector<Real>> dir(refs.size());
  Real analytic = 0;
  for (std::size_t j = 0; j < refs.size(); ++j) {
    if (refs[j].buffer) continue;
    dir[j].resize(refs[j].value->numel());
    for (std::size_t i = 0; i < dir[j].size(); ++i) {
      dir[j][i] = dist(rng);
      analytic += (*refs[j].grad)[i] * dir[j][i];
    }
  }
  auto nudge = [&](Real scale) {
    for (std::size_t j = 0; j < refs.size(); ++j)
      for (std::size_t i = 0; i < dir[j].size(); ++i) (*refs[j].value)[i] += scale * dir[j][i];
  };

  const Real eps = 1e-5;
  nudge(eps);
  const Real lp = loss_value();
  nudge(-2 * eps);
  const Real lm = loss_value();
  nudge(eps);
  const Real fd = (lp - lm) / (2 * eps);
  CHECK(std::abs(fd - analytic) <= 1e-4 * std::max(Real(1), std::abs(analytic)));

  model.zero_grads();
  Real residue = 0;
  for (const auto& p : refs)
    if (p.grad)
      for (std::size_t i = 0; i < p.grad->numel(); ++i)
        residue = std::max(residue, std::abs((*p.grad)[i]));
  CHECK(residue == 0);
}

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mmtsm/core/tensor.hpp"

namespace mmtsm {

/// One named parameter or buffer of a module tree. Optimizers walk entries
/// with buffer == false; checkpoints persist every entry.
struct ParamRef {
  std::string name;
  TensorR* value = nullptr;
  TensorR* grad = nullptr;  // null for buffers
  bool buffer = false;
};

using ParamRefs = std::vector<ParamRef>;

inline void add_param(ParamRefs& out, const std::string& name, TensorR& v, TensorR& g) {
  out.push_back({name, &v, &g, false});
}
inline void add_buffer(ParamRefs& out, const std::string& name, TensorR& v) {
  out.push_back({name, &v, nullptr, true});
}

/// He-normal init, fan-out mode, the usual choice for ReLU conv stacks.
inline void kaiming_normal_fan_out(TensorR& w, std::size_t fan_out, std::mt19937_64& rng) {
  std::normal_distribution<Real> dist(0.0, std::sqrt(2.0 / static_cast<Real>(fan_out)));
  for (std::size_t i = 0; i < w.numel(); ++i) w[i] = dist(rng);
}

inline void normal_init(TensorR& w, Real stddev, std::mt19937_64& rng) {
  std::normal_distribution<Real> dist(0.0, stddev);
  for (std::size_t i = 0; i < w.numel(); ++i) w[i] = dist(rng);
}

inline TensorR relu(const TensorR& x) {
  TensorR y(x.shape());
  y.as_array() = x.as_array().max(Real(0));
  return y;
}

/// Backward through ReLU given its output (mask is output > 0).
inline TensorR relu_backward(const TensorR& y, const TensorR& gout) {
  TensorR gin(y.shape());
  gin.as_array() = (y.as_array() > Real(0)).select(gout.as_array(), Real(0));
  return gin;
}

}  // namespace mmtsm

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mmtsm {

/// Default scalar for the whole stack. Double keeps checkpoint averaging,
/// gradient checks, and determinism tolerances trivial on CPU.
using Real = double;

namespace detail {
inline std::size_t numel_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}
}  // namespace detail

/// Dense row-major tensor with a dynamic shape, backed by contiguous storage.
/// Rank is small (<= 5) and known by the call site; ops reinterpret the flat
/// buffer through Eigen maps rather than carrying stride machinery around.
template <typename S>
class Tensor {
 public:
  using Scalar = S;
  using MatrixMap =
      Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixMap =
      Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ArrayMap = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>;
  using ConstArrayMap = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape)
      : shape_(std::move(shape)), data_(detail::numel_of(shape_), S(0)) {}
  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, S value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }

  S& at(int a, int b) { return data_[idx2(a, b)]; }
  const S& at(int a, int b) const { return data_[idx2(a, b)]; }
  S& at(int a, int b, int c) { return data_[idx3(a, b, c)]; }
  const S& at(int a, int b, int c) const { return data_[idx3(a, b, c)]; }
  S& at(int a, int b, int c, int d) { return data_[idx4(a, b, c, d)]; }
  const S& at(int a, int b, int c, int d) const { return data_[idx4(a, b, c, d)]; }

  /// Reinterpret the flat buffer with a new shape of equal element count.
  void reshape(std::vector<int> shape) {
    if (detail::numel_of(shape) != data_.size())
      throw std::invalid_argument("tensor: reshape changes element count");
    shape_ = std::move(shape);
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), S(0)); }

  MatrixMap as_matrix(long rows, long cols) {
    check_view(rows * cols);
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap as_matrix(long rows, long cols) const {
    check_view(rows * cols);
    return ConstMatrixMap(data_.data(), rows, cols);
  }
  ArrayMap as_array() { return ArrayMap(data_.data(), static_cast<long>(data_.size())); }
  ConstArrayMap as_array() const {
    return ConstArrayMap(data_.data(), static_cast<long>(data_.size()));
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ']';
    return os.str();
  }

 private:
  std::size_t idx2(int a, int b) const {
    return static_cast<std::size_t>(a) * shape_[1] + b;
  }
  std::size_t idx3(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
  }
  std::size_t idx4(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
  }
  void check_view(long n) const {
    if (static_cast<std::size_t>(n) != data_.size())
      throw std::invalid_argument("tensor: map size mismatch");
  }

  std::vector<int> shape_;
  std::vector<S> data_;
};

using TensorR = Tensor<Real>;

template <typename S>
Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor: shape mismatch in +");
  Tensor<S> out(a.shape());
  out.as_array() = a.as_array() + b.as_array();
  return out;
}

template <typename S>
void axpy(S alpha, const Tensor<S>& x, Tensor<S>& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("tensor: shape mismatch in axpy");
  y.as_array() += alpha * x.as_array();
}

template <typename S>
S max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor: shape mismatch in diff");
  if (a.numel() == 0) return S(0);
  return (a.as_array() - b.as_array()).abs().maxCoeff();
}

}  // namespace mmtsm

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dstg/types.hpp"

namespace dstg::ad {

class Tape;

// Handle into a tape; cheap to copy, valid until Tape::clear().
struct Value {
  int id = -1;
  Tape* tape = nullptr;
  bool valid() const { return id >= 0 && tape != nullptr; }
};

// Reverse-mode tape over dense Eigen matrices. One forward build, one
// backward() sweep; clear() recycles the storage between training steps.
class Tape {
 public:
  Value leaf(Mat v, bool requires_grad = false);
  Value scalar(Scalar s, bool requires_grad = false);

  const Mat& val(Value v) const { return nodes_[v.id].value; }
  Scalar val_scalar(Value v) const { return nodes_[v.id].value(0, 0); }
  // Gradient of the last backward() root w.r.t. v; zero matrix if untouched.
  Mat grad(Value v) const;

  void backward(Value root);
  void clear();
  std::size_t size() const { return nodes_.size(); }

  // Low-level node builder used by the op implementations.
  using PullFn = std::function<void(Tape&, const Mat&, int self)>;
  Value make(Mat value, PullFn pull);
  void accumulate(int id, const Mat& g);
  bool wants_grad(int id) const { return nodes_[id].needs_grad; }
  void mark_needs_grad(int id, std::span<const int> inputs);

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until touched
    bool needs_grad = false;
    PullFn pull;  // null for leaves
  };
  std::vector<Node> nodes_;
};

// --- ops -------------------------------------------------------------

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value neg(Value a);
Value scale(Value a, Scalar s);
Value add_const(Value a, Scalar s);
Value cwise_mul(Value a, Value b);
// Elementwise product with a fixed (non-differentiated) mask, e.g. dropout.
Value cwise_mul_const(Value a, const Mat& mask);
Value matmul(Value a, Value b);
Value transpose(Value a);
Value vcat(Value a, Value b);
Value vcat(std::span<const Value> parts);
Value rows(Value a, Index r0, Index n);
Value sigmoid(Value a);
Value tanh_(Value a);
Value leaky_relu(Value a, Scalar slope);
// Numerically stable softmax over a column vector.
Value softmax(Value a);
Value sum(Value a);     // 1x1
Value mean(Value a);    // 1x1
Value dot(Value a, Value b);  // 1x1
Value log_(Value a);
// Clamp with pass-through gradient strictly inside (lo, hi), zero outside.
Value clamp(Value a, Scalar lo, Scalar hi);
// x / ||x||2 for a column vector; the zero vector maps to itself.
Value l2_normalize(Value a);
Value norm2(Value a);  // 1x1; zero gradient at the origin
// a * s where s is a 1x1 value.
Value scale_by(Value a, Value s);

inline Value operator+(Value a, Value b) { return add(a, b); }
inline Value operator-(Value a, Value b) { return sub(a, b); }
inline Value operator-(Value a) { return neg(a); }
inline Value operator*(Value a, Value b) { return matmul(a, b); }

}  // namespace dstg::ad

#include "dstg/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace dstg::ad {

Value Tape::leaf(Mat v, bool requires_grad) {
  Node n;
  n.value = std::move(v);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1, this};
}

Value Tape::scalar(Scalar s, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = s;
  return leaf(std::move(m), requires_grad);
}

Mat Tape::grad(Value v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Value Tape::make(Mat value, PullFn pull) {
  Node n;
  n.value = std::move(value);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1, this};
}

void Tape::mark_needs_grad(int id, std::span<const int> inputs) {
  for (int in : inputs) {
    if (nodes_[in].needs_grad) {
      nodes_[id].needs_grad = true;
      return;
    }
  }
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(Value root) {
  assert(root.tape == this);
  assert(nodes_[root.id].value.size() == 1);
  Node& r = nodes_[root.id];
  r.grad = Mat::Ones(1, 1);
  r.needs_grad = true;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.pull || n.grad.size() == 0 || !n.needs_grad) continue;
    n.pull(*this, n.grad, id);
  }
}

void Tape::clear() { nodes_.clear(); }

namespace {

Value unary(Value a, Mat out, std::function<void(Tape&, const Mat&, int)> pull) {
  Tape& t = *a.tape;
  Value v = t.make(std::move(out), std::move(pull));
  const int in[] = {a.id};
  t.mark_needs_grad(v.id, in);
  return v;
}

Value binary(Value a, Value b, Mat out,
             std::function<void(Tape&, const Mat&, int)> pull) {
  assert(a.tape == b.tape);
  Tape& t = *a.tape;
  Value v = t.make(std::move(out), std::move(pull));
  const int in[] = {a.id, b.id};
  t.mark_needs_grad(v.id, in);
  return v;
}

}  // namespace

Value add(Value a, Value b) {
  Tape& t = *a.tape;
  return binary(a, b, t.val(a) + t.val(b),
                [ia = a.id, ib = b.id](Tape& t, const Mat& g, int) {
                  t.accumulate(ia, g);
                  t.accumulate(ib, g);
                });
}

Value sub(Value a, Value b) {
  Tape& t = *a.tape;
  return binary(a, b, t.val(a) - t.val(b),
                [ia = a.id, ib = b.id](Tape& t, const Mat& g, int) {
                  t.accumulate(ia, g);
                  t.accumulate(ib, -g);
                });
}

Value neg(Value a) {
  Tape& t = *a.tape;
  return unary(a, -t.val(a), [ia = a.id](Tape& t, const Mat& g, int) {
    t.accumulate(ia, -g);
  });
}

Value scale(Value a, Scalar s) {
  Tape& t = *a.tape;
  return unary(a, s * t.val(a), [ia = a.id, s](Tape& t, const Mat& g, int) {
    t.accumulate(ia, s * g);
  });
}

Value add_const(Value a, Scalar s) {
  Tape& t = *a.tape;
  return unary(a, t.val(a).array() + s,
               [ia = a.id](Tape& t, const Mat& g, int) { t.accumulate(ia, g); });
}

Value cwise_mul(Value a, Value b) {
  Tape& t = *a.tape;
  return binary(a, b, t.val(a).cwiseProduct(t.val(b)),
                [ia = a.id, ib = b.id](Tape& t, const Mat& g, int) {
                  t.accumulate(ia, g.cwiseProduct(t.val({ib, &t})));
                  t.accumulate(ib, g.cwiseProduct(t.val({ia, &t})));
                });
}

Value cwise_mul_const(Value a, const Mat& mask) {
  Tape& t = *a.tape;
  return unary(a, t.val(a).cwiseProduct(mask),
               [ia = a.id, mask](Tape& t, const Mat& g, int) {
                 t.accumulate(ia, g.cwiseProduct(mask));
               });
}

Value matmul(Value a, Value b) {
  Tape& t = *a.tape;
  return binary(a, b, t.val(a) * t.val(b),
                [ia = a.id, ib = b.id](Tape& t, const Mat& g, int) {
                  t.accumulate(ia, g * t.val({ib, &t}).transpose());
                  t.accumulate(ib, t.val({ia, &t}).transpose() * g);
                });
}

Value transpose(Value a) {
  Tape& t = *a.tape;
  return unary(a, t.val(a).transpose(),
               [ia = a.id](Tape& t, const Mat& g, int) {
                 t.accumulate(ia, g.transpose());
               });
}

Value vcat(Value a, Value b) {
  const Value parts[] = {a, b};
  return vcat(parts);
}

Value vcat(std::span<const Value> parts) {
  assert(!parts.empty());
  Tape& t = *parts[0].tape;
  Index total = 0;
  const Index cols = t.val(parts[0]).cols();
  for (const Value& p : parts) total += t.val(p).rows();
  Mat out(total, cols);
  Index at = 0;
  std::vector<int> ids;
  std::vector<Index> row_count;
  ids.reserve(parts.size());
  for (const Value& p : parts) {
    const Mat& m = t.val(p);
    out.middleRows(at, m.rows()) = m;
    at += m.rows();
    ids.push_back(p.id);
    row_count.push_back(m.rows());
  }
  Value v = t.make(std::move(out),
                   [ids, row_count](Tape& t, const Mat& g, int) {
                     Index at = 0;
                     for (std::size_t i = 0; i < ids.size(); ++i) {
                       t.accumulate(ids[i], g.middleRows(at, row_count[i]));
                       at += row_count[i];
                     }
                   });
  t.mark_needs_grad(v.id, ids);
  return v;
}

Value rows(Value a, Index r0, Index n) {
  Tape& t = *a.tape;
  const Index rows_total = t.val(a).rows();
  const Index cols = t.val(a).cols();
  return unary(a, t.val(a).middleRows(r0, n),
               [ia = a.id, r0, n, rows_total, cols](Tape& t, const Mat& g, int) {
                 Mat full = Mat::Zero(rows_total, cols);
                 full.middleRows(r0, n) = g;
                 t.accumulate(ia, full);
               });
}

Value sigmoid(Value a) {
  Tape& t = *a.tape;
  Mat out = t.val(a).unaryExpr([](Scalar x) { return dstg::sigmoid(x); });
  return unary(a, std::move(out), [ia = a.id](Tape& t, const Mat& g, int self) {
    const Mat& y = t.val({self, &t});
    t.accumulate(ia, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Value tanh_(Value a) {
  Tape& t = *a.tape;
  Mat out = t.val(a).array().tanh();
  return unary(a, std::move(out), [ia = a.id](Tape& t, const Mat& g, int self) {
    const Mat& y = t.val({self, &t});
    t.accumulate(ia, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Value leaky_relu(Value a, Scalar slope) {
  Tape& t = *a.tape;
  Mat out = t.val(a).unaryExpr(
      [slope](Scalar x) { return x > 0 ? x : slope * x; });
  return unary(a, std::move(out),
               [ia = a.id, slope](Tape& t, const Mat& g, int) {
                 const Mat& x = t.val({ia, &t});
                 Mat gx = g;
                 for (Index i = 0; i < gx.size(); ++i)
                   if (x(i) <= 0) gx(i) *= slope;
                 t.accumulate(ia, gx);
               });
}

Value softmax(Value a) {
  Tape& t = *a.tape;
  const Mat& x = t.val(a);
  assert(x.cols() == 1);
  const Scalar mx = x.maxCoeff();
  Mat e = (x.array() - mx).exp();
  Mat y = e / e.sum();
  return unary(a, std::move(y), [ia = a.id](Tape& t, const Mat& g, int self) {
    const Mat& y = t.val({self, &t});
    const Scalar inner = (g.array() * y.array()).sum();
    t.accumulate(ia, (y.array() * (g.array() - inner)).matrix());
  });
}

Value sum(Value a) {
  Tape& t = *a.tape;
  Mat out(1, 1);
  out(0, 0) = t.val(a).sum();
  return unary(a, std::move(out), [ia = a.id](Tape& t, const Mat& g, int) {
    const Mat& x = t.val({ia, &t});
    t.accumulate(ia, Mat::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Value mean(Value a) {
  Tape& t = *a.tape;
  return scale(sum(a), 1.0 / static_cast<Scalar>(t.val(a).size()));
}

Value dot(Value a, Value b) {
  Tape& t = *a.tape;
  Mat out(1, 1);
  out(0, 0) = (t.val(a).array() * t.val(b).array()).sum();
  return binary(a, b, std::move(out),
                [ia = a.id, ib = b.id](Tape& t, const Mat& g, int) {
                  t.accumulate(ia, g(0, 0) * t.val({ib, &t}));
                  t.accumulate(ib, g(0, 0) * t.val({ia, &t}));
                });
}

Value log_(Value a) {
  Tape& t = *a.tape;
  Mat out = t.val(a).array().log();
  return unary(a, std::move(out), [ia = a.id](Tape& t, const Mat& g, int) {
    t.accumulate(ia, (g.array() / t.val({ia, &t}).array()).matrix());
  });
}

Value clamp(Value a, Scalar lo, Scalar hi) {
  Tape& t = *a.tape;
  Mat out = t.val(a).unaryExpr(
      [lo, hi](Scalar x) { return std::min(hi, std::max(lo, x)); });
  return unary(a, std::move(out),
               [ia = a.id, lo, hi](Tape& t, const Mat& g, int) {
                 const Mat& x = t.val({ia, &t});
                 Mat gx = g;
                 for (Index i = 0; i < gx.size(); ++i)
                   if (x(i) <= lo || x(i) >= hi) gx(i) = 0;
                 t.accumulate(ia, gx);
               });
}

Value l2_normalize(Value a) {
  Tape& t = *a.tape;
  const Mat& x = t.val(a);
  const Scalar n = x.norm();
  Mat out = n > 0 ? Mat(x / n) : Mat(Mat::Zero(x.rows(), x.cols()));
  return unary(a, std::move(out),
               [ia = a.id, n](Tape& t, const Mat& g, int self) {
                 if (n <= 0) return;
                 const Mat& y = t.val({self, &t});
                 const Scalar inner = (g.array() * y.array()).sum();
                 t.accumulate(ia, (g - inner * y) / n);
               });
}

Value norm2(Value a) {
  Tape& t = *a.tape;
  const Scalar n = t.val(a).norm();
  Mat out(1, 1);
  out(0, 0) = n;
  return unary(a, std::move(out), [ia = a.id, n](Tape& t, const Mat& g, int) {
    if (n <= 0) return;
    t.accumulate(ia, (g(0, 0) / n) * t.val({ia, &t}));
  });
}

Value scale_by(Value a, Value s) {
  Tape& t = *a.tape;
  assert(t.val(s).size() == 1);
  return binary(a, s, t.val_scalar(s) * t.val(a),
                [ia = a.id, is = s.id](Tape& t, const Mat& g, int) {
                  t.accumulate(ia, t.val_scalar({is, &t}) * g);
                  Mat gs(1, 1);
                  gs(0, 0) = (g.array() * t.val({ia, &t}).array()).sum();
                  t.accumulate(is, gs);
                });
}

}  // namespace dstg::ad

#include <doctest.h>

#include <cmath>
#include <functional>

#include "dstg/autodiff.hpp"
#include "dstg/rng.hpp"

using namespace dstg;

namespace {

Mat random_mat(Index r, Index c, Rng& rng, Scalar lo = -1, Scalar hi = 1) {
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Central finite differences of a scalar function of one leaf matrix.
Scalar max_grad_err(const std::function<ad::Value(ad::Tape&, ad::Value)>& f,
                    Mat x0, Scalar h = 1e-6) {
  ad::Tape tape;
  ad::Value x = tape.leaf(x0, true);
  ad::Value y = f(tape, x);
  tape.backward(y);
  const Mat analytic = tape.grad(x);

  Scalar worst = 0;
  for (Index i = 0; i < x0.size(); ++i) {
    Mat xp = x0, xm = x0;
    xp(i) += h;
    xm(i) -= h;
    ad::Tape tp, tm;
    const Scalar up = tp.val_scalar(f(tp, tp.leaf(xp)));
    const Scalar dn = tm.val_scalar(f(tm, tm.leaf(xm)));
    const Scalar numeric = (up - dn) / (2 * h);
    const Scalar rel = std::abs(analytic(i) - numeric) /
                       std::max(1e-6, std::abs(analytic(i)) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("forward values") {
  ad::Tape t;
  ad::Value a = t.leaf((Mat(2, 1) << 1.0, 2.0).finished());
  ad::Value b = t.leaf((Mat(2, 1) << 3.0, -1.0).finished());
  CHECK(t.val(ad::add(a, b))(0) == 4.0);
  CHECK(t.val(ad::dot(a, b))(0, 0) == 1.0);
  CHECK(t.val(ad::sigmoid(t.scalar(0.0)))(0, 0) == 0.5);

  ad::Value sm = ad::softmax(t.leaf((Mat(2, 1) << 0.0, std::log(3.0)).finished()));
  CHECK(t.val(sm)(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(t.val(sm)(1) == doctest::Approx(0.75).epsilon(1e-12));

  // leaky_relu keeps positives, scales negatives
  ad::Value lr = ad::leaky_relu(t.leaf((Mat(2, 1) << 2.0, -2.0).finished()), 0.2);
  CHECK(t.val(lr)(0) == 2.0);
  CHECK(t.val(lr)(1) == doctest::Approx(-0.4));

  // l2_normalize of the zero vector stays zero
  CHECK(t.val(ad::l2_normalize(t.leaf(Mat::Zero(3, 1)))).norm() == 0.0);
}

TEST_CASE("gradients match finite differences") {
  Rng rng(123);
  const Mat w = random_mat(3, 4, rng);
  const Mat v = random_mat(4, 1, rng);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::matmul(t.leaf(w), x));
        }, random_mat(4, 1, rng)) < 1e-7);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::sigmoid(ad::matmul(t.leaf(w), x)));
        }, random_mat(4, 1, rng)) < 1e-7);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::tanh_(x));
        }, random_mat(3, 2, rng)) < 1e-7);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::leaky_relu(x, 0.2));
        }, random_mat(4, 1, rng)) < 1e-7);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::softmax(x));
        }, random_mat(5, 1, rng)) < 1e-6);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::dot(ad::softmax(x), t.leaf(v.topRows(4)));
        }, random_mat(4, 1, rng)) < 1e-6);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::cwise_mul(x, x));
        }, random_mat(3, 3, rng)) < 1e-7);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::vcat(ad::rows(x, 0, 2), ad::rows(x, 2, 2)));
        }, random_mat(4, 1, rng)) < 1e-9);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::sum(ad::transpose(ad::matmul(t.leaf(w), x)));
        }, random_mat(4, 2, rng)) < 1e-7);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::norm2(x);
        }, random_mat(4, 1, rng)) < 1e-6);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::norm2(ad::sub(ad::l2_normalize(ad::rows(x, 0, 3)),
                                   ad::l2_normalize(ad::rows(x, 3, 3))));
        }, random_mat(6, 1, rng)) < 1e-6);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::neg(ad::log_(ad::clamp(ad::sigmoid(ad::sum(x)), 1e-7, 1 - 1e-7)));
        }, random_mat(3, 1, rng)) < 1e-6);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::scale_by(ad::sum(x), ad::dot(ad::rows(x, 0, 1), ad::rows(x, 1, 1)));
        }, random_mat(3, 1, rng)) < 1e-6);

  CHECK(max_grad_err([&](ad::Tape& t, ad::Value x) {
          return ad::mean(ad::scale(ad::add_const(x, 0.3), -1.7));
        }, random_mat(3, 2, rng)) < 1e-8);
}

TEST_CASE("gradient accumulates over shared subexpressions") {
  ad::Tape t;
  ad::Value x = t.leaf((Mat(1, 1) << 2.0).finished(), true);
  ad::Value y = ad::add(ad::cwise_mul(x, x), x);  // x^2 + x
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(5.0));  // 2x + 1
}

TEST_CASE("clamp zeroes gradient outside bounds") {
  ad::Tape t;
  ad::Value x = t.leaf((Mat(1, 1) << 2.0).finished(), true);
  ad::Value y = ad::sum(ad::clamp(x, 0.0, 1.0));
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == 0.0);
}

}

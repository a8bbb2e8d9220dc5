#include <doctest.h>

#include <cmath>
#include <set>

#include "dstg/rng.hpp"

using namespace dstg;

TEST_SUITE("rng") {

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform_int covers its range") {
  Rng rng(3);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.uniform_int(5);
    CHECK(v >= 0);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("gaussian has roughly unit variance") {
  Rng rng(11);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("forked streams differ from the parent") {
  Rng rng(5);
  Rng child = rng.fork(1);
  Rng child2 = rng.fork(2);
  CHECK(child.next_u64() != child2.next_u64());
}

TEST_CASE("state round-trips") {
  Rng rng(9);
  rng.next_u64();
  Rng copy(rng.state());
  CHECK(copy.next_u64() == rng.next_u64());
}

}

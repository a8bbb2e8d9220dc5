#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dstg {

// xoshiro256** seeded through splitmix64. Self-contained so that streams are
// reproducible byte-for-byte across platforms and standard-library versions,
// which the dataset and checkpoint determinism contracts rely on.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed);
  explicit Rng(const State& state) : s_(state) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), n >= 1.
  std::int64_t uniform_int(std::int64_t n);
  // Standard normal via Box-Muller; no cached spare so the state alone
  // determines the stream.
  double gaussian();

  // Derive an independent child stream; deterministic in (state, tag).
  Rng fork(std::uint64_t tag) const;

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<std::size_t>(i)],
                v[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(v.size())))];
  }

  const State& state() const { return s_; }

 private:
  State s_{};
};

std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace dstg

#pragma once
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace pacbma {

// Counter-based random streams. A Stream is identified by a 64-bit key; the
// i-th draw is a pure function of (key, i), so independent streams can be
// derived by index (task id, repetition id, ...) and consumed in any order
// without affecting each other.
//
// Draw i = splitmix64(key + (i + 1) * 0x9E3779B97F4A7C15).
class Stream {
public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Child stream keyed on (this key, id). Does not advance this stream.
  Stream substream(std::uint64_t id) const;

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Order-dependent hash combination of seed material.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// FNV-1a over the bytes of a double array.
std::uint64_t content_hash(std::span<const double> values);

} // namespace pacbma

#include <doctest.h>

#include <cmath>
#include <set>

#include "pacbma/rng.hpp"

using namespace pacbma;

namespace {

// Reference splitmix64 written out from the published constants.
std::uint64_t ref_splitmix(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace

TEST_CASE("splitmix64 matches the reference") {
  for (std::uint64_t x : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL, ~0ULL}) CHECK(splitmix64(x) == ref_splitmix(x));
  // first output of the generator seeded with 0
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("stream draws are a pure function of key and counter") {
  Stream a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.counter() == 100);
  Stream c(124);
  Stream d(123);
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("substreams do not advance the parent and are distinct") {
  Stream a(5);
  const auto s1 = a.substream(1);
  const auto s2 = a.substream(2);
  CHECK(a.counter() == 0);
  CHECK(s1.key() != s2.key());
  CHECK(a.substream(1).key() == s1.key());
}

TEST_CASE("uniform and normal moments") {
  Stream s(2024);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    su += u;
    su2 += u * u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n - (su / n) * (su / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("index covers the range") {
  Stream s(9);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto k = s.index(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
  CHECK_THROWS(s.index(0));
}

TEST_CASE("derive_seed is order dependent and deterministic") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(77, {i}));
  CHECK(seeds.size() == 1000);
}

TEST_CASE("content_hash") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{1.0, 2.0, 3.0000000001};
  CHECK(content_hash(a) == content_hash(std::vector<double>{1.0, 2.0, 3.0}));
  CHECK(content_hash(a) != content_hash(b));
  // FNV-1a offset basis for empty input
  CHECK(content_hash(std::span<const double>{}) == 0xcbf29ce484222325ULL);
}

TEST_CASE("shuffle is a permutation") {
  Stream s(4);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  s.shuffle(v);
  std::set<int> u(v.begin(), v.end());
  CHECK(u.size() == 50);
}

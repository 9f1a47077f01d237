#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "ffc/kernels.hpp"
#include "ffc/rng.hpp"

using namespace ffc;

namespace {

// Plain one-accumulator sums; order differs from the kernels, so compare
// with a tolerance. The scalar/AVX2 cross-check below is exact.
double naive_l2sq(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double naive_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = (rng.unit() - 0.5) * scale;
  return v;
}

}  // namespace

TEST_CASE("kernels match a naive reference within tolerance") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = rng.below(67);
    const auto a = random_vec(rng, n, 100.0);
    const auto b = random_vec(rng, n, 100.0);
    CHECK(kern::l2sq(a.data(), b.data(), n) ==
          doctest::Approx(naive_l2sq(a, b)).epsilon(1e-12));
    CHECK(kern::l1(a.data(), b.data(), n) == doctest::Approx(naive_l1(a, b)).epsilon(1e-12));
  }
  const std::vector<double> x{1.0, 2.0, 3.0};
  CHECK(kern::sum(x.data(), 3) == 6.0);
}

TEST_CASE("scalar and AVX2 kernels agree bit for bit") {
  if (!kern::supports(kern::Isa::Avx2)) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  Rng rng(1234);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = rng.below(67);
    auto a = random_vec(rng, n, 1e6);
    auto b = random_vec(rng, n, 1e6);
    if (n > 0) {
      a[rng.below(n)] = 0.0;
      b[rng.below(n)] = -0.0;
      a[rng.below(n)] = 5e-324;  // denormal
    }

    kern::force(kern::Isa::Scalar);
    const double l2_s = kern::l2sq(a.data(), b.data(), n);
    const double l1_s = kern::l1(a.data(), b.data(), n);
    const double sum_s = kern::sum(a.data(), n);
    std::vector<double> acc_s(n, 1.5), dev_s(n, 0.25);
    kern::add(acc_s.data(), a.data(), n);
    kern::sq_dev(dev_s.data(), a.data(), b.data(), n);

    kern::force(kern::Isa::Avx2);
    const double l2_v = kern::l2sq(a.data(), b.data(), n);
    const double l1_v = kern::l1(a.data(), b.data(), n);
    const double sum_v = kern::sum(a.data(), n);
    std::vector<double> acc_v(n, 1.5), dev_v(n, 0.25);
    kern::add(acc_v.data(), a.data(), n);
    kern::sq_dev(dev_v.data(), a.data(), b.data(), n);

    CHECK(std::memcmp(&l2_s, &l2_v, sizeof(double)) == 0);
    CHECK(std::memcmp(&l1_s, &l1_v, sizeof(double)) == 0);
    CHECK(std::memcmp(&sum_s, &sum_v, sizeof(double)) == 0);
    if (n > 0) {
      CHECK(std::memcmp(acc_s.data(), acc_v.data(), n * sizeof(double)) == 0);
      CHECK(std::memcmp(dev_s.data(), dev_v.data(), n * sizeof(double)) == 0);
    }
  }
  kern::force(kern::Isa::Avx2);
}

TEST_CASE("dispatch reports a supported ISA and can be forced") {
  CHECK(kern::supports(kern::Isa::Scalar));
  kern::force(kern::Isa::Scalar);
  CHECK(kern::active() == kern::Isa::Scalar);
  if (kern::supports(kern::Isa::Avx2)) {
    kern::force(kern::Isa::Avx2);
    CHECK(kern::active() == kern::Isa::Avx2);
  }
}

TEST_CASE("edge cases: empty and single-element inputs") {
  CHECK(kern::l2sq(nullptr, nullptr, 0) == 0.0);
  CHECK(kern::l1(nullptr, nullptr, 0) == 0.0);
  CHECK(kern::sum(nullptr, 0) == 0.0);
  const double a = 3.0, b = -1.0;
  CHECK(kern::l2sq(&a, &b, 1) == 16.0);
  CHECK(kern::l1(&a, &b, 1) == 4.0);
}

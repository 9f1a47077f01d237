#include "ffc/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace ffc::kern {

// Scalar reference kernels. The reduction kernels keep four independent
// accumulator lanes (element i feeds lane i % 4) and combine them as
// (l0 + l2) + (l1 + l3); the AVX2 variants keep exactly the same shape, so
// the two implementations agree bit-for-bit.

namespace scalar {

double l2sq(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) {
      const double d = a[i + l] - b[i + l];
      lane[l] = std::fma(d, d, lane[l]);
    }
  }
  for (int l = 0; i < n; ++i, ++l) {
    const double d = a[i] - b[i];
    lane[l] = std::fma(d, d, lane[l]);
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double l1(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) lane[l] += std::fabs(a[i + l] - b[i + l]);
  }
  for (int l = 0; i < n; ++i, ++l) lane[l] += std::fabs(a[i] - b[i]);
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double sum(const double* x, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) lane[l] += x[i + l];
  }
  for (int l = 0; i < n; ++i, ++l) lane[l] += x[i];
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

void add(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void sq_dev(double* acc, const double* x, const double* mu, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mu[i];
    acc[i] = std::fma(d, d, acc[i]);
  }
}

}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
namespace avx2 {
double l2sq(const double* a, const double* b, std::size_t n);
double l1(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void add(double* acc, const double* x, std::size_t n);
void sq_dev(double* acc, const double* x, const double* mu, std::size_t n);
}  // namespace avx2
#endif

namespace {

struct Table {
  double (*l2sq)(const double*, const double*, std::size_t);
  double (*l1)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*add)(double*, const double*, std::size_t);
  void (*sq_dev)(double*, const double*, const double*, std::size_t);
};

constexpr Table kScalar{scalar::l2sq, scalar::l1, scalar::sum, scalar::add,
                        scalar::sq_dev};

#if defined(__x86_64__) || defined(__i386__)
constexpr Table kAvx2{avx2::l2sq, avx2::l1, avx2::sum, avx2::add,
                      avx2::sq_dev};
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const Table*> g_table{nullptr};
std::atomic<Isa> g_isa{Isa::Scalar};

const Table* init_table() {
  Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
  if (const char* env = std::getenv("FFC_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) isa = Isa::Scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) isa = Isa::Avx2;
  }
  const Table* t = &kScalar;
#if defined(__x86_64__) || defined(__i386__)
  if (isa == Isa::Avx2) t = &kAvx2;
#endif
  g_isa.store(isa, std::memory_order_relaxed);
  g_table.store(t, std::memory_order_release);
  return t;
}

inline const Table& table() {
  const Table* t = g_table.load(std::memory_order_acquire);
  return t ? *t : *init_table();
}

}  // namespace

Isa active() {
  table();
  return g_isa.load(std::memory_order_relaxed);
}

bool supports(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

void force(Isa isa) {
  if (!supports(isa)) throw std::runtime_error("kernels: ISA not supported on this CPU");
#if defined(__x86_64__) || defined(__i386__)
  g_table.store(isa == Isa::Avx2 ? &kAvx2 : &kScalar, std::memory_order_release);
#else
  g_table.store(&kScalar, std::memory_order_release);
#endif
  g_isa.store(isa, std::memory_order_relaxed);
}

double l2sq(const double* a, const double* b, std::size_t n) { return table().l2sq(a, b, n); }
double l1(const double* a, const double* b, std::size_t n) { return table().l1(a, b, n); }
double sum(const double* x, std::size_t n) { return table().sum(x, n); }
void add(double* acc, const double* x, std::size_t n) { table().add(acc, x, n); }
void sq_dev(double* acc, const double* x, const double* mu, std::size_t n) {
  table().sq_dev(acc, x, mu, n);
}

}  // namespace ffc::kern

#pragma once

// Deterministic parallel reduction kernels.
//
// All sums are accumulated in fixed-size chunks whose partial results are
// folded in chunk order, so a reduction returns bit-identical values for any
// thread count, including the serial reference path. Tests compare the OpenMP
// kernels against the *_serial variants directly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tmx::par {

inline constexpr std::size_t kChunk = 1024;

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Serial reference: same chunking, same fold order.
template <class Term>
double chunked_sum_serial(std::size_t n, Term&& term) {
  double total = 0.0;
  for (std::size_t c0 = 0; c0 < n; c0 += kChunk) {
    const std::size_t c1 = std::min(n, c0 + kChunk);
    double part = 0.0;
    for (std::size_t i = c0; i < c1; ++i) part += term(i);
    total += part;
  }
  return total;
}

template <class Term>
double chunked_sum(std::size_t n, Term&& term) {
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks <= 1) return chunked_sum_serial(n, term);
  std::vector<double> parts(nchunks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    const std::size_t c0 = static_cast<std::size_t>(c) * kChunk;
    const std::size_t c1 = std::min(n, c0 + kChunk);
    double part = 0.0;
    for (std::size_t i = c0; i < c1; ++i) part += term(i);
    parts[static_cast<std::size_t>(c)] = part;
  }
  double total = 0.0;
  for (double p : parts) total += p;
  return total;
}

// log(sum_i exp(term(i))) with the same chunk-ordered fold. Terms may span a
// huge dynamic range; each chunk keeps (max, sum of exp relative to max) and
// chunks are merged left to right.
struct LogSum {
  double max_log = -std::numeric_limits<double>::infinity();
  double rel_sum = 0.0;  // sum of exp(term - max_log)

  void add(double t) {
    if (t <= max_log) {
      rel_sum += std::exp(t - max_log);
    } else {
      rel_sum = rel_sum * std::exp(max_log - t) + 1.0;
      max_log = t;
    }
  }
  void merge(const LogSum& o) {
    if (o.rel_sum == 0.0) return;
    if (rel_sum == 0.0) {
      *this = o;
      return;
    }
    if (o.max_log <= max_log) {
      rel_sum += o.rel_sum * std::exp(o.max_log - max_log);
    } else {
      rel_sum = rel_sum * std::exp(max_log - o.max_log) + o.rel_sum;
      max_log = o.max_log;
    }
  }
  double value() const {
    if (rel_sum == 0.0) return -std::numeric_limits<double>::infinity();
    return max_log + std::log(rel_sum);
  }
};

template <class Term>
double chunked_log_sum_exp_serial(std::size_t n, Term&& term) {
  LogSum total;
  for (std::size_t c0 = 0; c0 < n; c0 += kChunk) {
    const std::size_t c1 = std::min(n, c0 + kChunk);
    LogSum part;
    for (std::size_t i = c0; i < c1; ++i) part.add(term(i));
    total.merge(part);
  }
  return total.value();
}

template <class Term>
double chunked_log_sum_exp(std::size_t n, Term&& term) {
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks <= 1) return chunked_log_sum_exp_serial(n, term);
  std::vector<LogSum> parts(nchunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    const std::size_t c0 = static_cast<std::size_t>(c) * kChunk;
    const std::size_t c1 = std::min(n, c0 + kChunk);
    LogSum part;
    for (std::size_t i = c0; i < c1; ++i) part.add(term(i));
    parts[static_cast<std::size_t>(c)] = part;
  }
  LogSum total;
  for (const auto& p : parts) total.merge(p);
  return total.value();
}

// Elementwise map, parallel over chunks. Writes are disjoint, so the result
// does not depend on scheduling at all.
template <class Fn>
void parallel_apply(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static, 4096)
#endif
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    fn(static_cast<std::size_t>(i));
}

}  // namespace tmx::par

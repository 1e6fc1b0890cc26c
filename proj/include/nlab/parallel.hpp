#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

namespace nlab {

/// Number of worker threads used by the parallel loops (default 1).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Fixed chunk size of every parallel loop. Chunk boundaries never depend on
/// the thread count, which keeps reductions bit-identical across runs.
inline constexpr std::size_t kChunk = 2048;

/// Calls body(chunk, begin, end) once per chunk of [0, n).
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

/// Sum of term(k) for k in [0, n); partial sums per chunk are combined in
/// chunk order.
template <class Term>
double ordered_sum(std::size_t n, Term&& term) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t k = b; k < e; ++k) s += term(k);
    partial[c] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <class Term>
double ordered_max(std::size_t n, Term&& term) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t k = b; k < e; ++k) s = std::max(s, term(k));
    partial[c] = s;
  });
  double best = 0.0;
  for (double p : partial) best = std::max(best, p);
  return best;
}

}  // namespace nlab

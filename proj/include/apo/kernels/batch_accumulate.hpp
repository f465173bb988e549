#pragma once

// Per-sample loss/gradient accumulation over a minibatch.
//
// Samples are grouped into fixed chunks of kChunk. Each chunk sums its
// samples in index order into a private buffer, and chunk buffers are then
// added into the output in chunk order. The summation tree therefore depends
// only on n, never on the thread count, so the serial and OpenMP variants
// return bit-identical results.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#if defined(APO_HAVE_OPENMP)
#include <omp.h>
#endif

namespace apo::kernels {

enum class Exec { serial, parallel };

inline constexpr std::size_t kChunk = 8;

inline bool parallel_available() {
#if defined(APO_HAVE_OPENMP)
  return true;
#else
  return false;
#endif
}

namespace detail {

template <class Fn>
void run_chunk(std::size_t c, std::size_t n, std::span<double> grad, std::span<double> stats,
               Fn& fn) {
  const std::size_t lo = c * kChunk;
  const std::size_t hi = std::min(n, lo + kChunk);
  for (std::size_t i = lo; i < hi; ++i) fn(i, grad, stats);
}

}  // namespace detail

// Calls fn(i, grad, stats) for every i in [0, n). `fn` must *add* its
// contribution into the spans it is given and must be safe to call
// concurrently for different i. Results are added into grad_out/stats_out.
template <class Fn>
void accumulate(Exec exec, std::size_t n, std::span<double> grad_out, std::span<double> stats_out,
                Fn&& fn) {
  if (n == 0) return;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const std::size_t gsz = grad_out.size();
  const std::size_t ssz = stats_out.size();
  std::vector<double> gbuf(chunks * gsz, 0.0);
  std::vector<double> sbuf(chunks * ssz, 0.0);
  auto gslice = [&](std::size_t c) { return std::span<double>(gbuf).subspan(c * gsz, gsz); };
  auto sslice = [&](std::size_t c) { return std::span<double>(sbuf).subspan(c * ssz, ssz); };

#if defined(APO_HAVE_OPENMP)
  if (exec == Exec::parallel && chunks > 1) {
    std::vector<std::exception_ptr> errors(chunks);
    const auto count = static_cast<long long>(chunks);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < count; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      try {
        detail::run_chunk(cu, n, gslice(cu), sslice(cu), fn);
      } catch (...) {
        errors[cu] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else
#endif
  {
    (void)exec;
    for (std::size_t c = 0; c < chunks; ++c) detail::run_chunk(c, n, gslice(c), sslice(c), fn);
  }

  for (std::size_t c = 0; c < chunks; ++c) {
    auto g = gslice(c);
    for (std::size_t j = 0; j < gsz; ++j) grad_out[j] += g[j];
    auto s = sslice(c);
    for (std::size_t j = 0; j < ssz; ++j) stats_out[j] += s[j];
  }
}

}  // namespace apo::kernels

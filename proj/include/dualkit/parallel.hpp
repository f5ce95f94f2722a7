#pragma once

#include <exception>
#include <vector>

namespace dualkit {

// requested > 0 wins; otherwise DUALKIT_THREADS, otherwise the OpenMP default.
int resolve_threads(int requested);

// Runs fn(j) for j in [0, count). With threads <= 1 this is the serial reference loop.
// Exceptions are collected per index and the lowest-index one is rethrown.
template <class Fn>
void for_each_block(int count, int threads, Fn&& fn)
{
  if (threads <= 1 || count <= 1) {
    for (int j = 0; j < count; ++j) { fn(j); }
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int j = 0; j < count; ++j) {
    try {
      fn(j);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) { std::rethrow_exception(e); }
  }
}

} // namespace dualkit

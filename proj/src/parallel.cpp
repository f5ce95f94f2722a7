#include "dualkit/parallel.hpp"

#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace dualkit {

int resolve_threads(int requested)
{
  if (requested > 0) { return requested; }
  if (const char* env = std::getenv("DUALKIT_THREADS")) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
    if (ec == std::errc() && value > 0) { return value; }
  }
  return omp_get_max_threads();
}

} // namespace dualkit

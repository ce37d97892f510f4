#include "kpzlab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace kpzlab {

std::size_t worker_count() {
  const char* env = std::getenv("KPZLAB_WORKERS");
  if (!env) return 1;
  try {
    const long v = std::stol(env);
    return v > 0 ? static_cast<std::size_t>(v) : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace kpzlab

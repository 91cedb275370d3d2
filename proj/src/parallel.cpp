#include "qsurf/parallel.hpp"

#include <cstdlib>
#include <string>

namespace qsurf {

namespace {
std::atomic<unsigned> configured_threads{ 0 };
}

unsigned
default_threads()
{
  if (const unsigned t = configured_threads.load(); t > 0)
    return t;
  if (const char* env = std::getenv("QSURF_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0)
        return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void
set_default_threads(unsigned threads)
{
  configured_threads.store(threads);
}

} // namespace qsurf

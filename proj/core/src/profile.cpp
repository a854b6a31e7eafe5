#include "radmark/profile.hpp"

#include <cstdlib>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "radmark/error.hpp"

namespace radmark {

ComputeProfile current_profile() {
  const char* env = std::getenv("RADMARK_PROFILE");
  if (!env || std::string(env).empty() || std::string(env) == "deterministic") return ComputeProfile::kDeterministic;
  if (std::string(env) == "fast") return ComputeProfile::kFast;
  throw InvalidArgument(std::string("RADMARK_PROFILE must be 'deterministic' or 'fast', got '") + env + "'");
}

std::string to_string(ComputeProfile p) { return p == ComputeProfile::kFast ? "fast" : "deterministic"; }

unsigned worker_threads() {
  if (current_profile() == ComputeProfile::kDeterministic) return 1;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string cache_dir() {
  const char* env = std::getenv("RADMARK_CACHE_DIR");
  return env && *env ? env : ".radmark-cache";
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace radmark

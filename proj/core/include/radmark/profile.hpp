#pragma once

#include <string>

namespace radmark {

// RADMARK_PROFILE=deterministic (default) runs everything on one thread in a
// fixed order. RADMARK_PROFILE=fast spreads independent per-image work
// (embedding, victim queries) over hardware threads.
enum class ComputeProfile { kDeterministic, kFast };

ComputeProfile current_profile();
std::string to_string(ComputeProfile p);
unsigned worker_threads();

// RADMARK_CACHE_DIR, default ".radmark-cache".
std::string cache_dir();

// Keeps large activation buffers in the heap instead of fresh page mappings.
// Call once at program start; a no-op outside glibc.
void tune_allocator();

}  // namespace radmark

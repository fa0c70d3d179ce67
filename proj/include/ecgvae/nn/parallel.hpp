#pragma once

#include <cstddef>
#include <functional>

namespace ecgvae::nn {

/// Upper bound on worker threads for intra-op parallelism. Defaults to the
/// value of ECGVAE_THREADS, or 1 when unset.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(begin, end) over a static partition of [0, n). Callers only
/// partition over independent output elements, so results do not depend on
/// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ecgvae::nn

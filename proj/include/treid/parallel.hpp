#pragma once

#include <cstddef>
#include <functional>

namespace treid {

// Worker count: min(hardware, REID_THREADS env var when set). At least 1.
std::size_t worker_count();

// Runs fn(begin, end) over a static partition of [0, n) into contiguous
// ranges, one per worker. Exceptions are rethrown on the caller.
void parallel_ranges(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// Runs fn(i) for i in [0, n). fn must only write to per-index slots, so
// results do not depend on the number of workers.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_ranges(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
    });
}

// Like parallel_for, but each worker owns a context built by make_ctx
// (used to clone an encoder once per thread instead of once per item).
template <typename Ctx>
void parallel_for_with(std::size_t n, const std::function<Ctx()>& make_ctx,
                       const std::function<void(Ctx&, std::size_t)>& fn) {
    parallel_ranges(n, [&](std::size_t begin, std::size_t end) {
        Ctx ctx = make_ctx();
        for (std::size_t i = begin; i < end; ++i) fn(ctx, i);
    });
}

}  // namespace treid

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace dhpm {

/// Runs fn(0..n-1) on up to `threads` workers. Work is split by index, never
/// by timing, so any per-index result is independent of the thread count.
/// The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Keeps large training buffers in the heap instead of returning them to the
/// OS after every step. Idempotent.
void configure_allocator();

/// Counter-based seed split (splitmix64 finalizer over master, stream and two
/// counters). Used for every random stream so that any record, epoch or step
/// can be regenerated on its own.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t a = 0,
                          std::uint64_t b = 0);

namespace seed_stream {
inline constexpr std::uint64_t kInputFunction = 1;
inline constexpr std::uint64_t kMeasurements = 2;
inline constexpr std::uint64_t kEpochOrder = 3;
inline constexpr std::uint64_t kCollocation = 4;
inline constexpr std::uint64_t kTestFunction = 5;
inline constexpr std::uint64_t kSolutionNet = 6;
inline constexpr std::uint64_t kHiddenNet = 7;
}  // namespace seed_stream

}  // namespace dhpm

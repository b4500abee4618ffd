#pragma once

#include "slrt/timing.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace slrt {

enum class copy_strategy { byte_wise, word_wise_aligned, platform_bulk };

const char* strategy_name(copy_strategy s);

// dst[0..len) = src[0..len); identical semantics across strategies. Throws
// OverlapUnsupported when the regions overlap.
void copy(copy_strategy s, uint8_t* dst, const uint8_t* src, size_t len);

// Path taken by word_wise_aligned, per copy() call: the word loop only runs
// when src and dst offsets are congruent modulo the word size.
struct copy_path_counters {
    uint64_t word_path = 0;
    uint64_t byte_path = 0;
};
copy_path_counters path_counters();
void reset_path_counters();

struct copy_bench_point {
    size_t size_bytes = 0;
    bool aligned = false;
    copy_strategy strategy = copy_strategy::byte_wise;
    double throughput_mb_s = 0.0;
};

// Pure-copy throughput: for each (size, alignment, strategy), median over
// `reps` timed batches. Aligned means both offsets 0 from page-aligned
// buffers; unaligned offsets the source by 1 (incongruent mod word).
std::vector<copy_bench_point> throughput_sweep(const std::vector<size_t>& sizes, size_t reps);

// End-to-end variant: every copy is wrapped in a simulated boundary crossing
// (half the transition charged before, half after), `ops` copies per point.
std::vector<copy_bench_point> throughput_sweep_boundary(const std::vector<size_t>& sizes,
                                                        size_t ops,
                                                        const boundary_profile& profile);

// `# schema=1` header plus size_bytes,alignment,strategy,throughput_mb_s
void write_copybench_csv(std::ostream& os, const std::vector<copy_bench_point>& points);

namespace detail {
// Raw kernels, built in a translation unit where the compiler may not
// vectorize or substitute memcpy.
void copy_bytes(uint8_t* dst, const uint8_t* src, size_t len);
void copy_words_congruent(uint8_t* dst, const uint8_t* src, size_t len);
void copy_platform(uint8_t* dst, const uint8_t* src, size_t len);
} // namespace detail

} // namespace slrt

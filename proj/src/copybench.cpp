#include "slrt/copybench.hpp"
#include "slrt/errors.hpp"
#include "slrt/stats.hpp"

#include <atomic>
#include <cstdlib>
#include <memory>
#include <ostream>

namespace slrt {

namespace {
std::atomic<uint64_t> word_path_count{0};
std::atomic<uint64_t> byte_path_count{0};
} // namespace

const char* strategy_name(copy_strategy s) {
    switch (s) {
        case copy_strategy::byte_wise: return "ByteWise";
        case copy_strategy::word_wise_aligned: return "WordWiseAligned";
        case copy_strategy::platform_bulk: return "PlatformBulk";
    }
    return "?";
}

copy_path_counters path_counters() {
    return {word_path_count.load(std::memory_order_relaxed),
            byte_path_count.load(std::memory_order_relaxed)};
}

void reset_path_counters() {
    word_path_count.store(0, std::memory_order_relaxed);
    byte_path_count.store(0, std::memory_order_relaxed);
}

void copy(copy_strategy s, uint8_t* dst, const uint8_t* src, size_t len) {
    if (len == 0) return;
    if (dst < src + len && src < dst + len)
        throw OverlapUnsupported("copy: overlapping source and destination");
    switch (s) {
        case copy_strategy::byte_wise:
            detail::copy_bytes(dst, src, len);
            break;
        case copy_strategy::word_wise_aligned:
            if ((reinterpret_cast<uintptr_t>(dst) & (sizeof(size_t) - 1)) ==
                (reinterpret_cast<uintptr_t>(src) & (sizeof(size_t) - 1))) {
                word_path_count.fetch_add(1, std::memory_order_relaxed);
                detail::copy_words_congruent(dst, src, len);
            } else {
                byte_path_count.fetch_add(1, std::memory_order_relaxed);
                detail::copy_bytes(dst, src, len);
            }
            break;
        case copy_strategy::platform_bulk:
            detail::copy_platform(dst, src, len);
            break;
    }
}

namespace {

struct bench_buffers {
    static constexpr size_t margin = 4096;
    std::unique_ptr<uint8_t[], decltype(&std::free)> src{nullptr, &std::free};
    std::unique_ptr<uint8_t[], decltype(&std::free)> dst{nullptr, &std::free};

    explicit bench_buffers(size_t max_size) {
        src.reset(static_cast<uint8_t*>(std::aligned_alloc(4096, max_size + margin)));
        dst.reset(static_cast<uint8_t*>(std::aligned_alloc(4096, max_size + margin)));
        for (size_t i = 0; i < max_size + margin; i++) src[i] = uint8_t(i * 31 + 7);
    }
};

double measure_point(copy_strategy s, uint8_t* dst, const uint8_t* src, size_t size,
                     size_t reps, const boundary_profile* boundary, size_t boundary_ops) {
    volatile uint8_t sink = 0;
    if (boundary) {
        // One timed pass: `boundary_ops` copies, each wrapped in a full
        // simulated crossing.
        uint64_t half = boundary->transition_cost_cycles / 2;
        uint64_t rest = boundary->transition_cost_cycles - half;
        uint64_t t0 = monotonic_ns();
        for (size_t i = 0; i < boundary_ops; i++) {
            spin_for_cycles(half);
            copy(s, dst, src, size);
            spin_for_cycles(rest);
            sink ^= size ? dst[size / 2] : uint8_t(0);
        }
        uint64_t dt = monotonic_ns() - t0;
        if (dt == 0) return 0.0;
        return double(size) * double(boundary_ops) / (double(dt) / 1e9) / 1e6;
    }

    // Batched reps so small sizes get measurable windows; median over reps.
    size_t batch = std::max<size_t>(1, 262144 / std::max<size_t>(size, 1));
    for (size_t i = 0; i < 4; i++) copy(s, dst, src, size); // warm
    std::vector<double> samples;
    samples.reserve(reps);
    for (size_t r = 0; r < reps; r++) {
        uint64_t t0 = monotonic_ns();
        for (size_t b = 0; b < batch; b++) {
            copy(s, dst, src, size);
            sink ^= size ? dst[size / 2] : uint8_t(0);
        }
        uint64_t dt = monotonic_ns() - t0;
        if (dt == 0) dt = 1;
        samples.push_back(double(size) * double(batch) / (double(dt) / 1e9) / 1e6);
    }
    return median(std::move(samples));
}

std::vector<copy_bench_point> run_sweep(const std::vector<size_t>& sizes, size_t reps,
                                        const boundary_profile* boundary,
                                        size_t boundary_ops) {
    size_t max_size = 0;
    for (size_t s : sizes) max_size = std::max(max_size, s);
    bench_buffers buf(max_size);

    std::vector<copy_bench_point> out;
    for (size_t size : sizes) {
        for (bool aligned : {true, false}) {
            // Unaligned: source off by one, incongruent mod word size.
            const uint8_t* src = buf.src.get() + (aligned ? 0 : 1);
            uint8_t* dst = buf.dst.get();
            for (copy_strategy s : {copy_strategy::byte_wise, copy_strategy::word_wise_aligned,
                                    copy_strategy::platform_bulk}) {
                copy_bench_point p;
                p.size_bytes = size;
                p.aligned = aligned;
                p.strategy = s;
                p.throughput_mb_s =
                    measure_point(s, dst, src, size, reps, boundary, boundary_ops);
                out.push_back(p);
            }
        }
    }
    return out;
}

} // namespace

std::vector<copy_bench_point> throughput_sweep(const std::vector<size_t>& sizes, size_t reps) {
    if (sizes.empty()) throw ConfigError("throughput_sweep: sizes must be non-empty");
    if (reps == 0) throw ConfigError("throughput_sweep: reps must be >= 1");
    return run_sweep(sizes, reps, nullptr, 0);
}

std::vector<copy_bench_point> throughput_sweep_boundary(const std::vector<size_t>& sizes,
                                                        size_t ops,
                                                        const boundary_profile& profile) {
    if (sizes.empty()) throw ConfigError("throughput_sweep_boundary: sizes must be non-empty");
    return run_sweep(sizes, 1, &profile, ops);
}

void write_copybench_csv(std::ostream& os, const std::vector<copy_bench_point>& points) {
    os << "# schema=1\n";
    os << "size_bytes,alignment,strategy,throughput_mb_s\n";
    for (const auto& p : points)
        os << p.size_bytes << ',' << (p.aligned ? "aligned" : "unaligned") << ','
           << strategy_name(p.strategy) << ',' << p.throughput_mb_s << '\n';
}

} // namespace slrt

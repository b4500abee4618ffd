#include "slrt/timing.hpp"
#include "slrt/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>

#include <sched.h>
#include <time.h>

#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>
#endif

namespace slrt {

namespace {

inline void spin_hint() {
#if defined(__x86_64__) || defined(__i386__)
    _mm_pause();
#elif defined(__aarch64__)
    asm volatile("yield");
#else
    std::this_thread::yield();
#endif
}

uint64_t clock_ns(clockid_t id) {
    timespec ts;
    clock_gettime(id, &ts);
    return uint64_t(ts.tv_sec) * 1000000000ull + uint64_t(ts.tv_nsec);
}

// Fallback rate for hosts without a hardware counter: cycles are synthesized
// from the monotonic clock at a fixed nominal rate so the model stays
// unit-consistent.
constexpr double synthetic_cycles_per_second = 1e9;

} // namespace

uint64_t read_cycles() {
#if defined(__x86_64__) || defined(__i386__)
    return __rdtsc();
#else
    return uint64_t(double(clock_ns(CLOCK_MONOTONIC)) * (synthetic_cycles_per_second / 1e9));
#endif
}

void pause_spin(uint64_t n) {
    for (uint64_t i = 0; i < n; i++) spin_hint();
}

void spin_for_cycles(uint64_t cycles) {
    uint64_t start = read_cycles();
    while (read_cycles() - start < cycles) spin_hint();
}

uint64_t thread_cpu_ns() {
    return clock_ns(CLOCK_THREAD_CPUTIME_ID);
}

uint64_t monotonic_ns() {
    return clock_ns(CLOCK_MONOTONIC);
}

uint64_t pause_cost_from_samples(std::vector<uint64_t> samples) {
    std::sort(samples.begin(), samples.end());
    uint64_t median = samples[samples.size() / 2];
    std::vector<uint64_t> dev(samples.size());
    for (size_t i = 0; i < samples.size(); i++)
        dev[i] = samples[i] > median ? samples[i] - median : median - samples[i];
    std::sort(dev.begin(), dev.end());
    uint64_t mad = dev[dev.size() / 2];
    if (mad * 2 > median)
        throw CalibrationUnstable("pause calibration unstable: MAD " + std::to_string(mad) +
                                  " exceeds half of median " + std::to_string(median));
    return median;
}

boundary_profile calibrate(uint64_t transition_cost_cycles) {
    constexpr size_t n_samples = 2000;

    // Per-sample counter-read overhead, measured the same way as the samples.
    std::vector<uint64_t> overhead(n_samples);
    for (auto& v : overhead) {
        uint64_t a = read_cycles();
        v = read_cycles() - a;
    }
    std::sort(overhead.begin(), overhead.end());
    uint64_t read_overhead = overhead[n_samples / 2];

    std::vector<uint64_t> samples(n_samples);
    for (auto& v : samples) {
        uint64_t a = read_cycles();
        spin_hint();
        uint64_t d = read_cycles() - a;
        v = d > read_overhead ? d - read_overhead : 1;
    }
    uint64_t pause_cost = pause_cost_from_samples(std::move(samples));

    // Rate against the monotonic clock over a 50 ms window.
    uint64_t n0 = monotonic_ns();
    uint64_t c0 = read_cycles();
    while (monotonic_ns() - n0 < 50'000'000ull) spin_hint();
    uint64_t n1 = monotonic_ns();
    uint64_t c1 = read_cycles();
    double cps = double(c1 - c0) / (double(n1 - n0) / 1e9);

    boundary_profile p;
    p.transition_cost_cycles = transition_cost_cycles;
    p.pause_cost_cycles = std::max<uint64_t>(pause_cost, 1);
    p.cycles_per_second = cps;
    return p;
}

uint64_t spin_yield_period() {
    static const uint64_t period = [] {
        unsigned cores = std::thread::hardware_concurrency();
        return cores <= 1 ? 64ull : 65536ull;
    }();
    return period;
}

void spin_waiter::step() {
    spin_hint();
    if (++iters_ % spin_yield_period() == 0) sched_yield();
}

} // namespace slrt

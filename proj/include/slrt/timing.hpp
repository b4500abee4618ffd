#pragma once

#include <cstdint>
#include <vector>

namespace slrt {

inline constexpr uint64_t default_transition_cost_cycles = 13500;

// Calibrated cost model shared by every module: the synthetic boundary
// transition T_es, the measured spin-hint cost, and the TSC rate.
struct boundary_profile {
    uint64_t transition_cost_cycles = default_transition_cost_cycles;
    uint64_t pause_cost_cycles = 0;
    double cycles_per_second = 0.0;
};

// Monotone per-thread cycle counter (rdtsc on x86, monotonic clock scaled by
// a measured rate elsewhere).
uint64_t read_cycles();

// n iterations of the platform spin-hint, nothing else.
void pause_spin(uint64_t n);

// Busy-spins until `cycles` wall cycles have elapsed. Used to charge
// transition costs; never yields or sleeps.
void spin_for_cycles(uint64_t cycles);

// CPU time consumed by the calling thread, in nanoseconds.
uint64_t thread_cpu_ns();

uint64_t monotonic_ns();

// Measures pause_cost_cycles (median of single-pause samples with the
// counter-read overhead subtracted) and cycles_per_second, and records the
// configured transition cost. Must run before workers exist.
// Throws CalibrationUnstable when the samples' MAD exceeds half the median.
boundary_profile calibrate(uint64_t transition_cost_cycles = default_transition_cost_cycles);

// Median/MAD stage of calibrate(), split out so the instability path is
// testable with synthetic samples. Samples are net of read overhead.
uint64_t pause_cost_from_samples(std::vector<uint64_t> samples);

// Cooperative spin: pause hints with a periodic sched_yield escape so that
// protocol waits stay live when threads outnumber cores. Never sleeps.
class spin_waiter {
  public:
    void step();

  private:
    uint64_t iters_ = 0;
};

// Yield period used by spin_waiter; picked once per process from the core
// count (tight on single-core hosts, effectively off on multicore).
uint64_t spin_yield_period();

} // namespace slrt

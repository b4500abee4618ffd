#pragma once

#include "slrt/zc_core.hpp"

#include <iosfwd>
#include <optional>
#include <thread>
#include <vector>

namespace slrt {

struct scheduler_config {
    uint64_t quantum_ms = 10;           // Q
    uint64_t mu_inverse = 100;          // mu = 1 / mu_inverse
    size_t num_cores_N = 0;             // 0: hardware core count
    std::optional<size_t> max_workers{}; // default floor(N/2); overriding also sets N = 2*max
};

// U = F * T_es + M * T, exactly. Throws std::overflow_error instead of
// wrapping.
uint64_t wasted_cycles(uint64_t F, uint64_t M, uint64_t T, uint64_t T_es);

// Index of the minimal element, ties to the smaller index.
size_t pick_m_prime(const std::vector<uint64_t>& U);

struct sched_record {
    uint64_t timestamp_ms = 0;
    bool config_phase = false; // false: scheduling phase
    size_t active_workers = 0; // probe count i, or the held M'
    uint64_t fallback_calls = 0;   // delta within this window
    uint64_t switchless_calls = 0; // delta within this window
    uint64_t wasted_cycles_estimate = 0;
};

// Alternates configuration phases (probe i = 0..max_workers for mu*Q each,
// pick argmin of U_i) with scheduling phases (hold M' for Q).
class zc_scheduler {
  public:
    zc_scheduler(zc_runtime& rt, scheduler_config cfg, const boundary_profile& profile);
    ~zc_scheduler() { stop(); }

    zc_scheduler(const zc_scheduler&) = delete;
    zc_scheduler& operator=(const zc_scheduler&) = delete;

    void start();
    void stop(); // stops the loop and terminates the runtime's workers

    // Single blocking phases, for driving without the thread.
    size_t configuration_phase();
    void scheduling_phase(size_t m_prime);

    std::vector<sched_record> history() const;
    size_t current_m() const { return current_m_.load(std::memory_order_relaxed); }
    size_t max_workers() const { return max_workers_; }
    uint64_t micro_quantum_us() const { return micro_quantum_us_; }

  private:
    void loop();
    void set_active_count(size_t n);
    void add_record(bool config, size_t workers, uint64_t fb, uint64_t sl, uint64_t wasted);

    zc_runtime& rt_;
    scheduler_config cfg_;
    boundary_profile profile_;
    size_t max_workers_ = 0;
    uint64_t micro_quantum_us_ = 0;
    uint64_t t_cycles_ = 0; // mu * Q * CPU_FREQ, the per-probe worker charge

    uint64_t start_ns_ = 0;

    std::atomic<size_t> current_m_{0};
    std::atomic<bool> stop_flag_{false};
    std::thread thread_;
    bool running_ = false;

    mutable std::mutex history_mutex_;
    std::vector<sched_record> history_;
};

// `# schema=1` header plus
// timestamp_ms,phase,active_workers,fallback_calls,switchless_calls,wasted_cycles_estimate
void write_history_csv(std::ostream& os, const std::vector<sched_record>& records);

} // namespace slrt

#pragma once

#include "slrt/boundary.hpp"
#include "slrt/timing.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace slrt {

struct intel_config {
    size_t num_workers = 1;
    uint64_t rbf = 20000; // caller retries before fallback
    uint64_t rbs = 20000; // worker empty polls before sleep
    std::vector<fn_id> switchless_fn_ids{};
    size_t task_pool_capacity = 0; // 0: 2 * num_workers
};

// Per-call measurement surfaced for the rbf-cost experiments.
struct intel_call_detail {
    uint64_t prefallback_spin_cycles = 0; // wall cycles from enqueue to claim/withdraw
    uint64_t prefallback_spin_cpu_ns = 0; // the caller's own CPU over the same window
    bool withdrawn = false;
};

struct intel_stats {
    uint64_t switchless_calls = 0;
    uint64_t fallback_withdrawn = 0;
    uint64_t fallback_pool_full = 0;
    uint64_t regular_calls = 0; // ids outside the switchless set
    uint64_t tasks_enqueued = 0;
    uint64_t tasks_executed = 0;
    uint64_t tasks_withdrawn = 0;
    uint64_t worker_sleeps = 0;
    uint64_t prefallback_spin_cycles_total = 0;
    uint64_t worker_poll_cpu_ns = 0;
};

// Intel-SDK-style switchless semantics: fixed worker pool, shared bounded
// task pool, rbf caller spin with atomic withdrawal, rbs worker polls before
// sleeping on a signal.
class intel_runtime {
  public:
    intel_runtime(host_fn_table table, const boundary_profile& profile, intel_config cfg);
    ~intel_runtime();

    intel_runtime(const intel_runtime&) = delete;
    intel_runtime& operator=(const intel_runtime&) = delete;

    void start();
    void stop();

    call_outcome switchless_call(fn_id id, std::span<const uint8_t> args,
                                 intel_call_detail* detail = nullptr);

    intel_stats snapshot() const;
    uint64_t worker_cpu_ns(size_t index) const;
    size_t num_workers() const { return cfg_.num_workers; }
    const host_fn_table& table() const { return table_; }
    const boundary_profile& profile() const { return profile_; }

  private:
    struct task;
    void worker_loop(size_t index);
    bool enqueue(task* t);
    task* try_claim_one();

    host_fn_table table_;
    boundary_profile profile_;
    intel_config cfg_;
    std::vector<bool> eligible_;

    std::vector<std::unique_ptr<std::atomic<task*>>> pool_;
    std::atomic<uint64_t> pending_{0};
    std::mutex sleep_mutex_;
    std::condition_variable sleep_cv_;
    std::atomic<int> sleepers_{0};
    std::atomic<bool> stop_flag_{false};
    std::vector<std::thread> workers_;
    bool started_ = false;

    std::atomic<uint64_t> switchless_calls_{0};
    std::atomic<uint64_t> fallback_withdrawn_{0};
    std::atomic<uint64_t> fallback_pool_full_{0};
    std::atomic<uint64_t> regular_calls_{0};
    std::atomic<uint64_t> tasks_enqueued_{0};
    std::atomic<uint64_t> tasks_executed_{0};
    std::atomic<uint64_t> tasks_withdrawn_{0};
    std::atomic<uint64_t> worker_sleeps_{0};
    std::atomic<uint64_t> prefallback_spin_cycles_{0};
    std::atomic<uint64_t> worker_poll_cpu_ns_{0};
};

} // namespace slrt

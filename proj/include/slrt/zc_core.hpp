#pragma once

#include "slrt/boundary.hpp"
#include "slrt/timing.hpp"

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace slrt {

enum class worker_status : uint8_t {
    unused = 0,
    reserved = 1,
    processing = 2,
    waiting = 3,
    paused = 4,
    exited = 5,
};
inline constexpr size_t n_worker_states = 6;

enum class spinner : uint8_t { none = 0, worker = 1, caller = 2 };

// One atomic word carries the slot state, which side (if either) is currently
// spin-waiting on it, and the reserving caller's tag. Packing the spinner in
// the same word is what keeps "at most one spinner per slot" true under
// arbitrary preemption: it changes only on the CAS edges of the protocol.
struct slot_word {
    worker_status status = worker_status::unused;
    spinner spin = spinner::none;
    uint32_t owner = 0;

    static slot_word unpack(uint64_t w) {
        return {worker_status(w & 0xff), spinner((w >> 8) & 0xff), uint32_t(w >> 32)};
    }
    uint64_t pack() const {
        return uint64_t(status) | (uint64_t(spin) << 8) | (uint64_t(owner) << 32);
    }
};

// Records every status edge as a (from, to) count; callers of record() pass
// the words observed on the atomic edge itself, so a disallowed transition
// can never hide behind a race.
class transition_log {
  public:
    void record(worker_status from, worker_status to);
    uint64_t count(worker_status from, worker_status to) const;
    uint64_t disallowed_total() const;
    static bool edge_allowed(worker_status from, worker_status to);

  private:
    std::array<std::atomic<uint64_t>, n_worker_states * n_worker_states> counts_{};
};

// Per-slot preallocated argument/result arena. Bump allocation; reset only
// happens while the owning caller holds the slot, so no region is live.
struct request_pool {
    std::unique_ptr<uint8_t[]> base;
    size_t capacity = 0;
    size_t cursor = 0;
};

inline constexpr uint32_t result_error_marker = UINT32_MAX;

// The shared request slot: written by the caller while RESERVED, read by the
// worker while PROCESSING, result read back by the caller while WAITING.
struct call_request {
    fn_id id = 0;
    uint32_t arg_offset = 0;
    uint32_t arg_len = 0;
    uint32_t result_offset = 0;
    uint32_t result_capacity = 0;
    uint32_t result_len = 0; // result_error_marker when dispatch failed
};

struct worker_slot {
    std::atomic<uint64_t> word{slot_word{}.pack()};
    call_request request;
    request_pool pool;
    std::atomic<bool> deactivate_flag{false};
    std::atomic<bool> terminate_flag{false};

    // Sleep channel for PAUSED; the flag writers notify under the mutex.
    std::mutex wake_mutex;
    std::condition_variable wake_cv;

    std::atomic<uint64_t> calls_served{0};
    std::atomic<uint64_t> idle_spin_ns{0};

    std::thread thread;
};

struct zc_config {
    std::optional<size_t> max_workers{}; // default: floor(hardware cores / 2)
    size_t pool_capacity_bytes = 64 * 1024;
};

// Bump-allocates header + args + result regions; nullopt means the pool is
// full (caller resets and retries once). Throws RequestTooLarge when a single
// request can never fit.
std::optional<call_request> alloc_request(request_pool& pool, size_t arg_len,
                                          size_t result_capacity);

struct zc_stats {
    uint64_t switchless_calls = 0;
    uint64_t fallback_calls = 0;
    uint64_t pool_resets = 0;
    uint64_t caller_spin_ns = 0;     // thread-CPU time callers spent waiting on workers
    uint64_t worker_idle_spin_ns = 0;
};

// The switchless runtime: per-worker slots driven by the four-state protocol,
// immediate fallback to regular_call when no idle worker is found.
class zc_runtime {
  public:
    zc_runtime(host_fn_table table, const boundary_profile& profile, zc_config cfg = {});
    ~zc_runtime();

    zc_runtime(const zc_runtime&) = delete;
    zc_runtime& operator=(const zc_runtime&) = delete;

    // Spawns `count` workers, all UNUSED. Throws AlreadyStarted on a second
    // call and ConfigError when count exceeds max_workers.
    void start_workers(size_t count);

    call_outcome switchless_call(fn_id id, std::span<const uint8_t> args);

    // active=false asks the worker to pause at its next idle check;
    // active=true clears the flag and wakes it if paused.
    void set_worker_active(size_t index, bool active);

    // Sets terminate flags, wakes sleepers, joins all workers.
    void stop();

    size_t worker_count() const { return slots_.size(); }
    size_t max_workers() const { return max_workers_; }
    worker_status status_of(size_t index) const;
    // Full packed word for invariant checks (spinner and owner fields).
    slot_word word_of(size_t index) const;
    // CPU time the worker thread has consumed so far; usable while running.
    uint64_t worker_cpu_ns(size_t index) const;
    uint64_t worker_calls_served(size_t index) const;
    const transition_log& transitions() const { return log_; }
    const host_fn_table& table() const { return table_; }
    const boundary_profile& profile() const { return profile_; }

    zc_stats snapshot() const;
    uint64_t fallback_count() const { return fallback_calls_.load(std::memory_order_relaxed); }
    uint64_t switchless_count() const { return switchless_calls_.load(std::memory_order_relaxed); }

  private:
    void worker_loop(worker_slot& slot);

    host_fn_table table_;
    boundary_profile profile_;
    zc_config cfg_;
    size_t max_workers_ = 0;
    std::vector<std::unique_ptr<worker_slot>> slots_;
    transition_log log_;
    bool started_ = false;
    bool stopped_ = false;

    std::atomic<uint64_t> switchless_calls_{0};
    std::atomic<uint64_t> fallback_calls_{0};
    std::atomic<uint64_t> pool_resets_{0};
    std::atomic<uint64_t> caller_spin_ns_{0};
    std::atomic<uint32_t> scan_start_{0};
};

} // namespace slrt

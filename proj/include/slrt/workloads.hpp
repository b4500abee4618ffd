#pragma once

#include "slrt/boundary.hpp"
#include "slrt/intel_baseline.hpp"
#include "slrt/stats.hpp"
#include "slrt/zc_core.hpp"
#include "slrt/zc_scheduler.hpp"

#include <atomic>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slrt {

enum class run_mode { no_sl, intel, zc };

const char* mode_name(run_mode m);
std::optional<run_mode> parse_mode(std::string_view s);

// How workloads stand up the call path. One struct so the CLI maps flags
// onto it directly.
struct mode_options {
    run_mode mode = run_mode::no_sl;
    uint64_t transition_cost_cycles = default_transition_cost_cycles;
    uint64_t host_fn_extra_cycles = 0; // lengthens read/write-like host fns

    // zc
    std::optional<size_t> zc_max_workers{};
    bool zc_scheduler_on = true;
    size_t zc_fixed_workers = 1; // active worker count when the scheduler is off
    uint64_t quantum_ms = 10;
    uint64_t mu_inverse = 100;
    size_t pool_capacity_bytes = 64 * 1024;

    // intel
    size_t intel_workers = 1;
    uint64_t rbf = 20000;
    uint64_t rbs = 20000;
    std::vector<fn_id> intel_eligible{}; // empty: workload picks its own set

    // Reused across runs when set; otherwise each run calibrates.
    std::optional<boundary_profile> profile{};
};

struct run_stats {
    double wall_s = 0.0;
    uint64_t total_calls = 0;
    uint64_t switchless = 0;
    uint64_t fallback = 0;
    uint64_t regular = 0;
    uint64_t cycles_spent = 0; // summed boundary cost over all calls
    double mean_cpu_percent = 0.0;
    bool cpu_internal = false;

    // kv host-call profile
    uint64_t seek_calls = 0;
    uint64_t read_calls = 0;
    uint64_t write_calls = 0;

    // zc runs
    uint64_t pool_resets = 0;
    std::vector<sched_record> history{}; // non-empty when the scheduler ran
};

enum class synth_cfg { C1 = 1, C2, C3, C4, C5 };

const char* synth_cfg_name(synth_cfg c);
std::optional<synth_cfg> parse_synth_cfg(std::string_view s);

// f is an empty host function; g spins g_pauses pause instructions.
struct synthetic_config {
    size_t n_total = 100000;
    size_t alpha = 75000; // calls to f
    size_t beta = 25000;  // calls to g, alpha = 3 * beta
    size_t g_pauses = 100;
    synth_cfg configuration = synth_cfg::C1;
    size_t caller_threads = 1;
    uint64_t seed = 1;

    // Rounds n_total down to a multiple of 4 and rederives alpha/beta.
    void derive_counts();
};

// Per-call routing: true means attempt the switchless path. `occurrence` is
// the caller's running count of this function, used by the half-and-half
// configuration.
bool plan_attempt_switchless(synth_cfg c, bool is_g, uint64_t occurrence);

run_stats synthetic_bench(const synthetic_config& cfg, const mode_options& opt);

// Minimal file-backed hash table with 8-byte keys and values. Every probe
// goes through three host functions: a seek (offset bookkeeping only, no
// syscall), a slot read (pread) and a slot write (pwrite), so the host-call
// profile is roughly 2 seeks : 1 read : 1 write per SET.
class kv_store {
  public:
    static constexpr fn_id seek_fn = 0;
    static constexpr fn_id read_fn = 1;
    static constexpr fn_id write_fn = 2;

    kv_store(std::string path, size_t num_slots);
    ~kv_store();
    kv_store(const kv_store&) = delete;
    kv_store& operator=(const kv_store&) = delete;

    // extra_cycles lengthens the read/write functions (call-duration knob).
    void register_fns(host_fn_table& table, uint64_t extra_cycles = 0);

    using call_fn = std::function<call_outcome(fn_id, std::span<const uint8_t>)>;
    void set(uint64_t key, uint64_t value, const call_fn& call);
    std::optional<uint64_t> get(uint64_t key, const call_fn& call);

    uint64_t seek_count() const { return seeks_.load(std::memory_order_relaxed); }
    uint64_t read_count() const { return reads_.load(std::memory_order_relaxed); }
    uint64_t write_count() const { return writes_.load(std::memory_order_relaxed); }
    size_t num_slots() const { return num_slots_; }

  private:
    struct entry; // used flag + key + value, fixed width on disk

    int fd_ = -1;
    std::string path_;
    size_t num_slots_ = 0;
    std::atomic<uint64_t> offset_{0};
    std::atomic<uint64_t> seeks_{0};
    std::atomic<uint64_t> reads_{0};
    std::atomic<uint64_t> writes_{0};
};

// num_keys SET operations of 8-byte key/value pairs through the selected
// call path.
run_stats kv_workload(size_t num_keys, uint64_t seed, const mode_options& opt);

struct dynamic_config {
    uint64_t tau_ms = 500;
    uint64_t phase_len_ms = 6000; // desk scale; 20000 reproduces the full run
    uint64_t base_ops = 32;       // per issuing thread per tau at phase start
    size_t reader_threads = 1;
    size_t writer_threads = 1;
};

// Target ops per issuing thread for each tau tick: phase 1 doubles every
// tick from base_ops, phase 2 holds the peak, phase 3 halves every tick.
std::vector<uint64_t> dynamic_schedule(const dynamic_config& cfg);

struct dyn_sample {
    uint64_t t_ms = 0;
    run_mode mode = run_mode::no_sl;
    double ops_per_s = 0.0;
    double cpu_percent = 0.0;
    size_t active_workers = 0;
    uint64_t fallbacks = 0; // deltas within this tick
    uint64_t switchless = 0;
    uint64_t regular = 0;
};

// Reader and writer threads issue single-word transfers to the zero/null
// devices at the scheduled per-tick rate; one sample row per tick.
std::vector<dyn_sample> dynamic_workload(const dynamic_config& cfg, const mode_options& opt);

// `# schema=1` header plus
// t_ms,mode,ops_per_s,cpu_percent,active_workers,fallbacks,switchless,regular
void write_timeseries_csv(std::ostream& os, const std::vector<dyn_sample>& samples);

} // namespace slrt

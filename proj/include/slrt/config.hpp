#pragma once

#include "slrt/timing.hpp"
#include "slrt/workloads.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slrt {

// One run of the harness: mode + workload + every module knob, settable from
// a key=value file or flags (flags win). Durations are milliseconds, costs
// are cycles.
struct run_config {
    run_mode mode = run_mode::no_sl;
    std::string workload = "synthetic"; // synthetic | kv | dynamic | copybench | sweep
    uint64_t seed = 1;
    std::string out;     // CSV path; empty derives <out_dir>/<workload>.csv
    std::string out_dir; // seeded from SWITCHLESS_RT_OUT_DIR

    // synthetic
    synth_cfg configuration = synth_cfg::C1;
    uint64_t n_total = 100000;
    std::vector<uint64_t> g_pauses{100}; // several values: sweep axis
    uint64_t caller_threads = 1;

    // kv
    uint64_t num_keys = 10000;
    uint64_t host_fn_cycles = 0;

    // dynamic
    uint64_t tau_ms = 500;
    uint64_t phase_len_ms = 6000;
    uint64_t base_ops = 32;
    bool paper_scale = false;

    // copybench
    uint64_t copy_reps = 9;
    uint64_t copy_boundary_ops = 2000; // 100000 at paper scale

    // zc
    uint64_t quantum_ms = 10;
    uint64_t mu_inverse = 100;
    std::optional<uint64_t> max_workers{};
    uint64_t pool_capacity_bytes = 64 * 1024;

    // intel
    std::vector<uint64_t> intel_workers{1}; // several values: sweep axis
    uint64_t rbf = 20000;
    uint64_t rbs = 20000;
    std::vector<std::string> switchless_fns{}; // names or numeric ids

    uint64_t transition_cost_cycles = default_transition_cost_cycles;

    // Assigns one key. Throws ConfigError naming the key when it is unknown
    // or the value does not parse.
    void apply(const std::string& key, const std::string& value);

    // Restores the full-length values the desk-scale defaults shrink.
    void apply_paper_scale();

    // Runtime knobs for the workloads; the eligible-fn set stays empty here
    // because its names are workload-specific.
    mode_options to_mode_options() const;
};

// (key, value) pairs in file order; `#` starts a comment, blank lines skipped.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

// Parses the file and applies every pair onto `base`.
run_config load_config_file(const std::string& path, run_config base = {});

// The effective config as key=value text; load_config_file round-trips it.
std::string serialize_config(const run_config& cfg);

// "a" | "a:b" (step 1) | "a:b:c" (inclusive, step c) | "v1,v2,...".
// ConfigError names `key` on malformed input.
std::vector<uint64_t> parse_count_list(const std::string& key, const std::string& value);

// Maps --switchless-fns tokens through the workload's name table; numeric
// tokens pass through as ids.
std::vector<fn_id> resolve_fn_names(const std::vector<std::string>& tokens,
                                    const std::vector<std::pair<std::string, fn_id>>& names);

} // namespace slrt

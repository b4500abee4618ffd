#include "slrt/config.hpp"
#include "slrt/copybench.hpp"
#include "slrt/errors.hpp"
#include "slrt/workloads.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

using namespace slrt;

namespace {

std::string default_out_path(const run_config& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    return (dir / (cfg.workload + ".csv")).string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write output file: " + path);
    return os;
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    std::filesystem::path out = p.parent_path() / (p.stem().string() + suffix);
    return out.string();
}

// Duration-weighted share of each active-worker count over the run.
std::map<size_t, double> worker_distribution(const std::vector<sched_record>& history,
                                             const run_config& cfg) {
    std::map<size_t, double> weight;
    double total = 0;
    for (const sched_record& r : history) {
        double ms = r.config_phase ? double(cfg.quantum_ms) / double(cfg.mu_inverse)
                                   : double(cfg.quantum_ms);
        weight[r.active_workers] += ms;
        total += ms;
    }
    if (total > 0)
        for (auto& [k, v] : weight) v = v * 100.0 / total;
    return weight;
}

void print_summary(const run_config& cfg, const run_stats& st, const std::string& csv_path) {
    std::cout << "== run summary ==\n";
    std::cout << "workload=" << cfg.workload << " mode=" << mode_name(cfg.mode)
              << " config=" << synth_cfg_name(cfg.configuration) << " seed=" << cfg.seed
              << "\n";
    std::cout << "wall_s=" << st.wall_s << " total_calls=" << st.total_calls << "\n";
    std::cout << "routes: switchless=" << st.switchless << " fallback=" << st.fallback
              << " regular=" << st.regular << "\n";
    double denom = double(st.switchless + st.fallback + st.regular);
    std::cout << "fallback_ratio=" << (denom > 0 ? double(st.fallback) / denom : 0.0) << "\n";
    std::cout << "cycles_spent=" << st.cycles_spent << " fallback_wasted_cycles_estimate="
              << st.fallback * cfg.transition_cost_cycles << "\n";
    std::cout << "cpu_percent=" << st.mean_cpu_percent
              << (st.cpu_internal ? " (internal accounting)" : "") << "\n";
    if (st.seek_calls + st.read_calls + st.write_calls > 0)
        std::cout << "host calls: seek=" << st.seek_calls << " read=" << st.read_calls
                  << " write=" << st.write_calls << "\n";
    if (cfg.mode == run_mode::zc) {
        if (st.history.empty()) {
            std::cout << "workers held fixed (scheduler off)\n";
        } else {
            for (const auto& [workers, pct] : worker_distribution(st.history, cfg)) {
                std::cout << "workers=" << workers << " for ";
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.1f", pct);
                std::cout << buf << "% of lifetime\n";
            }
        }
    }
    std::cout << "csv=" << csv_path << "\n";
}

void write_stats_csv(std::ostream& os, const run_config& cfg, const run_stats& st) {
    os << "# schema=1\n";
    os << "workload,mode,config,wall_s,total_calls,switchless,fallback,regular,"
          "cycles_spent,cpu_percent,seek_calls,read_calls,write_calls\n";
    os << cfg.workload << ',' << mode_name(cfg.mode) << ','
       << synth_cfg_name(cfg.configuration) << ',' << st.wall_s << ',' << st.total_calls
       << ',' << st.switchless << ',' << st.fallback << ',' << st.regular << ','
       << st.cycles_spent << ',' << st.mean_cpu_percent << ',' << st.seek_calls << ','
       << st.read_calls << ',' << st.write_calls << '\n';
}

void maybe_write_history(const run_stats& st, const std::string& csv_path) {
    if (st.history.empty()) return;
    std::string path = sibling_path(csv_path, "_history.csv");
    std::ofstream os = open_out(path);
    write_history_csv(os, st.history);
    std::cout << "history_csv=" << path << "\n";
}

mode_options options_for(const run_config& cfg, const boundary_profile& profile,
                         const std::vector<std::pair<std::string, fn_id>>& fn_names) {
    mode_options opt = cfg.to_mode_options();
    opt.profile = profile;
    if (!cfg.switchless_fns.empty())
        opt.intel_eligible = resolve_fn_names(cfg.switchless_fns, fn_names);
    return opt;
}

synthetic_config synth_config_from(const run_config& cfg) {
    synthetic_config sc;
    sc.n_total = size_t(cfg.n_total);
    sc.derive_counts();
    sc.g_pauses = size_t(cfg.g_pauses.front());
    sc.configuration = cfg.configuration;
    sc.caller_threads = size_t(cfg.caller_threads);
    sc.seed = cfg.seed;
    return sc;
}

int run_synthetic(const run_config& cfg, const boundary_profile& profile) {
    mode_options opt = options_for(cfg, profile, {{"f", 0}, {"g", 1}});
    run_stats st = synthetic_bench(synth_config_from(cfg), opt);
    std::string path = default_out_path(cfg);
    std::ofstream os = open_out(path);
    write_stats_csv(os, cfg, st);
    print_summary(cfg, st, path);
    maybe_write_history(st, path);
    return 0;
}

int run_kv(const run_config& cfg, const boundary_profile& profile) {
    mode_options opt =
        options_for(cfg, profile, {{"seek", kv_store::seek_fn},
                                   {"read", kv_store::read_fn},
                                   {"write", kv_store::write_fn}});
    run_stats st = kv_workload(size_t(cfg.num_keys), cfg.seed, opt);
    std::string path = default_out_path(cfg);
    std::ofstream os = open_out(path);
    write_stats_csv(os, cfg, st);
    print_summary(cfg, st, path);
    maybe_write_history(st, path);
    return 0;
}

int run_dynamic(const run_config& cfg, const boundary_profile& profile) {
    mode_options opt = options_for(cfg, profile, {{"read", 0}, {"write", 1}});
    dynamic_config dc;
    dc.tau_ms = cfg.tau_ms;
    dc.phase_len_ms = cfg.phase_len_ms;
    dc.base_ops = cfg.base_ops;
    std::vector<dyn_sample> samples = dynamic_workload(dc, opt);

    std::string path = default_out_path(cfg);
    std::ofstream os = open_out(path);
    write_timeseries_csv(os, samples);

    run_stats st;
    double ops_total = 0;
    double cpu_total = 0;
    for (const dyn_sample& s : samples) {
        ops_total += s.ops_per_s * double(cfg.tau_ms) / 1000.0;
        cpu_total += s.cpu_percent;
        st.switchless += s.switchless;
        st.fallback += s.fallbacks;
        st.regular += s.regular;
    }
    st.total_calls = uint64_t(ops_total + 0.5);
    st.wall_s = double(samples.size() * cfg.tau_ms) / 1000.0;
    st.mean_cpu_percent = samples.empty() ? 0.0 : cpu_total / double(samples.size());
    print_summary(cfg, st, path);

    // Worker counts over time are already columns of the time series.
    if (cfg.mode == run_mode::zc) {
        std::map<size_t, size_t> by_workers;
        for (const dyn_sample& s : samples) by_workers[s.active_workers]++;
        for (const auto& [workers, ticks] : by_workers) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f",
                          100.0 * double(ticks) / double(samples.size()));
            std::cout << "workers=" << workers << " for " << buf << "% of lifetime\n";
        }
    }
    return 0;
}

int run_copybench(const run_config& cfg, const boundary_profile& profile) {
    std::vector<size_t> sizes;
    for (size_t s = 512; s <= 32 * 1024; s *= 2) sizes.push_back(s);

    std::vector<copy_bench_point> pure = throughput_sweep(sizes, size_t(cfg.copy_reps));
    std::string path = default_out_path(cfg);
    {
        std::ofstream os = open_out(path);
        write_copybench_csv(os, pure);
    }
    std::vector<copy_bench_point> wrapped =
        throughput_sweep_boundary(sizes, size_t(cfg.copy_boundary_ops), profile);
    std::string bpath = sibling_path(path, "_boundary.csv");
    {
        std::ofstream os = open_out(bpath);
        write_copybench_csv(os, wrapped);
    }

    auto at = [&](bool aligned, copy_strategy st) -> double {
        for (const copy_bench_point& p : pure)
            if (p.size_bytes == 32 * 1024 && p.aligned == aligned && p.strategy == st)
                return p.throughput_mb_s;
        return 0.0;
    };
    std::cout << "== copybench summary (32 KiB) ==\n";
    for (bool aligned : {true, false}) {
        double byte = at(aligned, copy_strategy::byte_wise);
        double word = at(aligned, copy_strategy::word_wise_aligned);
        double bulk = at(aligned, copy_strategy::platform_bulk);
        std::cout << (aligned ? "aligned:  " : "unaligned:") << " byte=" << byte
                  << " word=" << word << " bulk=" << bulk
                  << " MB/s, bulk/word=" << (word > 0 ? bulk / word : 0.0) << "\n";
    }
    std::cout << "csv=" << path << "\n";
    std::cout << "boundary_csv=" << bpath << "\n";
    return 0;
}

int run_sweep(const run_config& cfg, const boundary_profile& profile) {
    std::string path = default_out_path(cfg);
    std::ofstream os = open_out(path);
    os << "# schema=1\n";
    os << "g_pauses,intel_workers,mode,config,wall_s,switchless,fallback,regular\n";

    size_t points = 0;
    for (uint64_t gp : cfg.g_pauses) {
        for (uint64_t iw : cfg.intel_workers) {
            run_config point = cfg;
            point.g_pauses = {gp};
            point.intel_workers = {iw};
            mode_options opt = options_for(point, profile, {{"f", 0}, {"g", 1}});
            run_stats st = synthetic_bench(synth_config_from(point), opt);
            os << gp << ',' << iw << ',' << mode_name(cfg.mode) << ','
               << synth_cfg_name(cfg.configuration) << ',' << st.wall_s << ','
               << st.switchless << ',' << st.fallback << ',' << st.regular << '\n';
            points++;
        }
    }
    std::cout << "== sweep summary ==\n";
    std::cout << "grid_points=" << points << "\n";
    std::cout << "csv=" << path << "\n";
    return 0;
}

int run(const run_config& cfg) {
    boundary_profile profile = cfg.transition_cost_cycles == default_transition_cost_cycles
                                   ? calibrate()
                                   : calibrate(cfg.transition_cost_cycles);
    std::cout << "calibration: transition_cost_cycles=" << profile.transition_cost_cycles
              << " pause_cost_cycles=" << profile.pause_cost_cycles
              << " cycles_per_second=" << profile.cycles_per_second << "\n";

    if (cfg.workload == "synthetic") return run_synthetic(cfg, profile);
    if (cfg.workload == "kv") return run_kv(cfg, profile);
    if (cfg.workload == "dynamic") return run_dynamic(cfg, profile);
    if (cfg.workload == "copybench") return run_copybench(cfg, profile);
    if (cfg.workload == "sweep") return run_sweep(cfg, profile);
    throw ConfigError("config key workload: unknown workload '" + cfg.workload + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"switchless-call runtime benchmarks"};
    app.option_defaults()->ignore_case(false);

    // All values stay strings so run_config::apply is the single validator.
    std::map<std::string, std::string> flags;
    auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
        flags[key] = {};
        app.add_option(flag, flags[key], help);
        (void)key;
    };
    opt("--mode", "mode", "no_sl | intel | zc");
    opt("--workload", "workload", "synthetic | kv | dynamic | copybench | sweep");
    std::string config_arg;
    app.add_option("--config", config_arg,
                   "C1..C5 synthetic configuration, or a key=value config file path");
    opt("--seed", "seed", "deterministic op-schedule seed");
    opt("--out", "out", "output CSV path");
    opt("--out-dir", "out_dir", "output directory (default $SWITCHLESS_RT_OUT_DIR or .)");
    opt("--quantum-ms", "quantum_ms", "scheduler quantum Q in ms");
    opt("--mu-inverse", "mu_inverse", "configuration-phase micro-quantum divisor");
    opt("--max-workers", "max_workers", "worker cap (default: cores/2)");
    opt("--intel-workers", "intel_workers", "intel worker count, or range a:b[:c]");
    opt("--rbf", "rbf", "intel caller retries before fallback");
    opt("--rbs", "rbs", "intel worker polls before sleep");
    opt("--switchless-fns", "switchless_fns", "comma list of switchless function names/ids");
    opt("--transition-cost-cycles", "transition_cost_cycles", "simulated crossing cost");
    opt("--g-pauses", "g_pauses", "pause count of the g function, or range a:b[:c]");
    opt("--num-keys", "num_keys", "kv workload SET count");
    opt("--tau-ms", "tau_ms", "dynamic workload tick length in ms");
    opt("--n-total", "n_total", "synthetic workload call count");
    opt("--caller-threads", "caller_threads", "synthetic caller thread count");
    opt("--host-fn-cycles", "host_fn_cycles", "extra cycles in read/write-like host fns");
    opt("--base-ops", "base_ops", "dynamic workload ops per thread at phase start");
    opt("--pool-capacity-bytes", "pool_capacity_bytes", "per-worker request pool bytes");
    opt("--copy-reps", "copy_reps", "copybench repetitions per point");
    opt("--copy-boundary-ops", "copy_boundary_ops", "copybench boundary-wrapped op count");

    std::string phase_len_s;
    app.add_option("--phase-len-s", phase_len_s, "dynamic workload phase length in seconds");
    bool paper_scale = false;
    app.add_flag("--paper-scale", paper_scale,
                 "full-length phases and boundary-wrapped op counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e); // prints help or the usage error
        return rc == 0 ? 0 : 2;
    }

    try {
        run_config cfg;
        if (const char* env = std::getenv("SWITCHLESS_RT_OUT_DIR")) cfg.out_dir = env;

        if (!config_arg.empty()) {
            if (std::optional<synth_cfg> c = parse_synth_cfg(config_arg))
                cfg.configuration = *c;
            else
                cfg = load_config_file(config_arg, cfg);
        }
        // Paper-scale presets land before explicit flags so flags still win.
        if (paper_scale) cfg.paper_scale = true;
        cfg.apply_paper_scale();
        for (const auto& [key, value] : flags)
            if (!value.empty()) cfg.apply(key, value);
        if (!phase_len_s.empty()) {
            uint64_t s = 0;
            auto [p, ec] = std::from_chars(phase_len_s.data(),
                                           phase_len_s.data() + phase_len_s.size(), s);
            if (ec != std::errc{} || p != phase_len_s.data() + phase_len_s.size())
                throw ConfigError("config key phase_len_s: expected an integer, got '" +
                                  phase_len_s + "'");
            cfg.phase_len_ms = s * 1000;
        }
        return run(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
}

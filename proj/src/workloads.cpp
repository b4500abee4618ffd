#include "slrt/workloads.hpp"
#include "slrt/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <memory>
#include <ostream>
#include <random>
#include <thread>

#include <fcntl.h>
#include <unistd.h>

namespace slrt {

const char* mode_name(run_mode m) {
    switch (m) {
        case run_mode::no_sl: return "no_sl";
        case run_mode::intel: return "intel";
        case run_mode::zc: return "zc";
    }
    return "?";
}

std::optional<run_mode> parse_mode(std::string_view s) {
    if (s == "no_sl") return run_mode::no_sl;
    if (s == "intel") return run_mode::intel;
    if (s == "zc") return run_mode::zc;
    return std::nullopt;
}

const char* synth_cfg_name(synth_cfg c) {
    switch (c) {
        case synth_cfg::C1: return "C1";
        case synth_cfg::C2: return "C2";
        case synth_cfg::C3: return "C3";
        case synth_cfg::C4: return "C4";
        case synth_cfg::C5: return "C5";
    }
    return "?";
}

std::optional<synth_cfg> parse_synth_cfg(std::string_view s) {
    for (synth_cfg c : {synth_cfg::C1, synth_cfg::C2, synth_cfg::C3, synth_cfg::C4,
                        synth_cfg::C5})
        if (s == synth_cfg_name(c)) return c;
    return std::nullopt;
}

void synthetic_config::derive_counts() {
    beta = n_total / 4;
    alpha = 3 * beta;
    n_total = alpha + beta;
}

bool plan_attempt_switchless(synth_cfg c, bool is_g, uint64_t occurrence) {
    switch (c) {
        case synth_cfg::C1: return !is_g;
        case synth_cfg::C2: return is_g;
        case synth_cfg::C3: return occurrence % 2 == 0;
        case synth_cfg::C4: return true;
        case synth_cfg::C5: return false;
    }
    return false;
}

namespace {

// The selected runtime plus uniform call entry points. Heap-held because the
// runtimes are not movable.
struct call_path {
    run_mode mode = run_mode::no_sl;
    boundary_profile profile;
    host_fn_table plain; // no_sl
    std::unique_ptr<zc_runtime> zc;
    std::unique_ptr<zc_scheduler> sched;
    std::unique_ptr<intel_runtime> intel;

    const host_fn_table& table() const {
        if (zc) return zc->table();
        if (intel) return intel->table();
        return plain;
    }

    // The mode's switchless entry point; no_sl has none, so it degrades to a
    // plain crossing.
    call_outcome attempt(fn_id id, std::span<const uint8_t> args) {
        if (zc) return zc->switchless_call(id, args);
        if (intel) return intel->switchless_call(id, args);
        return regular_call(plain, profile, id, args);
    }

    // Always a plain crossing, whatever the mode.
    call_outcome direct(fn_id id, std::span<const uint8_t> args) {
        return regular_call(table(), profile, id, args);
    }

    size_t active_workers() const {
        if (sched) return sched->current_m();
        if (zc) return zc->worker_count();
        if (intel) return intel->num_workers();
        return 0;
    }

    void shutdown() {
        if (sched) sched->stop(); // also terminates the runtime's workers
        else if (zc) zc->stop();
        if (intel) intel->stop();
    }
    ~call_path() { shutdown(); }
};

std::unique_ptr<call_path> make_call_path(host_fn_table table, const mode_options& opt,
                                          std::vector<fn_id> default_eligible) {
    auto p = std::make_unique<call_path>();
    p->mode = opt.mode;
    p->profile = opt.profile ? *opt.profile : calibrate(opt.transition_cost_cycles);
    switch (opt.mode) {
        case run_mode::no_sl:
            p->plain = std::move(table);
            p->plain.seal();
            break;
        case run_mode::zc: {
            zc_config cfg;
            cfg.max_workers = opt.zc_max_workers;
            cfg.pool_capacity_bytes = opt.pool_capacity_bytes;
            p->zc = std::make_unique<zc_runtime>(std::move(table), p->profile, cfg);
            if (opt.zc_scheduler_on) {
                p->zc->start_workers(p->zc->max_workers());
                scheduler_config sc;
                sc.quantum_ms = opt.quantum_ms;
                sc.mu_inverse = opt.mu_inverse;
                sc.max_workers = opt.zc_max_workers;
                p->sched = std::make_unique<zc_scheduler>(*p->zc, sc, p->profile);
                p->sched->start();
            } else {
                p->zc->start_workers(std::min(opt.zc_fixed_workers, p->zc->max_workers()));
            }
            break;
        }
        case run_mode::intel: {
            intel_config cfg;
            cfg.num_workers = opt.intel_workers;
            cfg.rbf = opt.rbf;
            cfg.rbs = opt.rbs;
            cfg.switchless_fn_ids =
                opt.intel_eligible.empty() ? std::move(default_eligible) : opt.intel_eligible;
            p->intel = std::make_unique<intel_runtime>(std::move(table), p->profile, cfg);
            p->intel->start();
            break;
        }
    }
    return p;
}

void tally(const call_outcome& o, uint64_t& sw, uint64_t& fb, uint64_t& rg, uint64_t& cy) {
    switch (o.route) {
        case call_route::switchless: sw++; break;
        case call_route::fallback_regular: fb++; break;
        case call_route::regular: rg++; break;
    }
    cy += o.cycles_spent;
}

} // namespace

run_stats synthetic_bench(const synthetic_config& cfg, const mode_options& opt) {
    if (cfg.alpha + cfg.beta != cfg.n_total || cfg.alpha != 3 * cfg.beta)
        throw ConfigError("synthetic: requires alpha + beta == n_total and alpha == 3*beta");
    if (cfg.caller_threads == 0) throw ConfigError("synthetic: caller_threads must be >= 1");

    host_fn_table table;
    table.register_host_fn(
        0, [](std::span<const uint8_t>, std::span<uint8_t>) -> size_t { return 0; }, 8);
    uint64_t pauses = cfg.g_pauses;
    table.register_host_fn(
        1,
        [pauses](std::span<const uint8_t>, std::span<uint8_t>) -> size_t {
            pause_spin(pauses);
            return 0;
        },
        8);

    std::vector<fn_id> eligible;
    switch (cfg.configuration) {
        case synth_cfg::C1: eligible = {0}; break;
        case synth_cfg::C2: eligible = {1}; break;
        case synth_cfg::C3:
        case synth_cfg::C4: eligible = {0, 1}; break;
        case synth_cfg::C5: break;
    }
    auto path = make_call_path(std::move(table), opt, std::move(eligible));

    // Deterministic interleaving: alpha f's and beta g's, seeded shuffle.
    std::vector<uint8_t> schedule(cfg.n_total, 0);
    std::fill(schedule.begin() + std::min(cfg.alpha, schedule.size()), schedule.end(), 1);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(schedule.begin(), schedule.end(), rng);

    std::atomic<uint64_t> switchless{0}, fallback{0}, regular{0}, cycles{0};
    auto issue_range = [&](size_t begin, size_t end) {
        uint64_t occ[2] = {0, 0};
        uint64_t sw = 0, fb = 0, rg = 0, cy = 0;
        for (size_t i = begin; i < end; i++) {
            bool is_g = schedule[i] != 0;
            fn_id id = is_g ? 1u : 0u;
            bool att = plan_attempt_switchless(cfg.configuration, is_g, occ[is_g]++);
            call_outcome o = att ? path->attempt(id, {}) : path->direct(id, {});
            tally(o, sw, fb, rg, cy);
        }
        switchless += sw;
        fallback += fb;
        regular += rg;
        cycles += cy;
    };

    cpu_sampler cs;
    cs.sample();
    uint64_t t0 = monotonic_ns();
    if (cfg.caller_threads == 1) {
        issue_range(0, schedule.size());
    } else {
        std::vector<std::thread> threads;
        size_t chunk = (schedule.size() + cfg.caller_threads - 1) / cfg.caller_threads;
        for (size_t t = 0; t < cfg.caller_threads; t++) {
            size_t b = std::min(t * chunk, schedule.size());
            size_t e = std::min(b + chunk, schedule.size());
            threads.emplace_back(issue_range, b, e);
        }
        for (auto& th : threads) th.join();
    }

    run_stats st;
    st.wall_s = double(monotonic_ns() - t0) / 1e9;
    cpu_sample cpu = cs.sample();
    st.mean_cpu_percent = cpu.percent_used;
    st.cpu_internal = cpu.internal;
    st.total_calls = cfg.n_total;
    st.switchless = switchless.load();
    st.fallback = fallback.load();
    st.regular = regular.load();
    st.cycles_spent = cycles.load();
    if (path->zc) st.pool_resets = path->zc->snapshot().pool_resets;
    path->shutdown();
    if (path->sched) st.history = path->sched->history();
    return st;
}

namespace {

struct disk_entry {
    uint64_t used;
    uint64_t key;
    uint64_t val;
};
constexpr size_t entry_bytes = sizeof(disk_entry);

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

struct kv_store::entry : disk_entry {};

kv_store::kv_store(std::string path, size_t num_slots)
    : path_(std::move(path)), num_slots_(num_slots) {
    if (num_slots_ == 0) throw ConfigError("kv_store: num_slots must be >= 1");
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0600);
    if (fd_ < 0) throw StoreIo("kv_store: cannot open " + path_);
    if (::ftruncate(fd_, off_t(num_slots_ * entry_bytes)) != 0) {
        ::close(fd_);
        ::unlink(path_.c_str());
        fd_ = -1;
        throw StoreIo("kv_store: cannot size " + path_);
    }
}

kv_store::~kv_store() {
    if (fd_ >= 0) {
        ::close(fd_);
        ::unlink(path_.c_str());
    }
}

void kv_store::register_fns(host_fn_table& table, uint64_t extra_cycles) {
    table.register_host_fn(
        seek_fn,
        [this](std::span<const uint8_t> args, std::span<uint8_t>) -> size_t {
            if (args.size() != 8) throw StoreIo("kv seek: offset must be 8 bytes");
            uint64_t off;
            std::memcpy(&off, args.data(), 8);
            offset_.store(off, std::memory_order_relaxed);
            seeks_.fetch_add(1, std::memory_order_relaxed);
            return 0;
        },
        8);
    table.register_host_fn(
        read_fn,
        [this, extra_cycles](std::span<const uint8_t>, std::span<uint8_t> result) -> size_t {
            if (result.size() < entry_bytes) return hostfn_overflow;
            off_t off = off_t(offset_.load(std::memory_order_relaxed));
            if (::pread(fd_, result.data(), entry_bytes, off) != ssize_t(entry_bytes))
                throw StoreIo("kv read: short read");
            if (extra_cycles) spin_for_cycles(extra_cycles);
            reads_.fetch_add(1, std::memory_order_relaxed);
            return entry_bytes;
        },
        32);
    table.register_host_fn(
        write_fn,
        [this, extra_cycles](std::span<const uint8_t> args, std::span<uint8_t>) -> size_t {
            if (args.size() != entry_bytes) throw StoreIo("kv write: bad entry size");
            off_t off = off_t(offset_.load(std::memory_order_relaxed));
            if (::pwrite(fd_, args.data(), entry_bytes, off) != ssize_t(entry_bytes))
                throw StoreIo("kv write: short write");
            if (extra_cycles) spin_for_cycles(extra_cycles);
            writes_.fetch_add(1, std::memory_order_relaxed);
            return 0;
        },
        8);
}

void kv_store::set(uint64_t key, uint64_t value, const call_fn& call) {
    size_t slot = size_t(mix64(key) % num_slots_);
    for (size_t probes = 0;; probes++) {
        if (probes > num_slots_) throw StoreIo("kv_store: table full");
        uint64_t off = uint64_t(slot) * entry_bytes;
        uint8_t off_bytes[8];
        std::memcpy(off_bytes, &off, 8);
        call(seek_fn, off_bytes);
        call_outcome o = call(read_fn, {});
        if (o.result.size() != entry_bytes) throw StoreIo("kv_store: bad read result");
        disk_entry e;
        std::memcpy(&e, o.result.data(), entry_bytes);
        if (!e.used || e.key == key) {
            call(seek_fn, off_bytes);
            disk_entry w{1, key, value};
            uint8_t buf[entry_bytes];
            std::memcpy(buf, &w, entry_bytes);
            call(write_fn, buf);
            return;
        }
        slot = (slot + 1) % num_slots_;
    }
}

std::optional<uint64_t> kv_store::get(uint64_t key, const call_fn& call) {
    size_t slot = size_t(mix64(key) % num_slots_);
    for (size_t probes = 0; probes <= num_slots_; probes++) {
        uint64_t off = uint64_t(slot) * entry_bytes;
        uint8_t off_bytes[8];
        std::memcpy(off_bytes, &off, 8);
        call(seek_fn, off_bytes);
        call_outcome o = call(read_fn, {});
        if (o.result.size() != entry_bytes) throw StoreIo("kv_store: bad read result");
        disk_entry e;
        std::memcpy(&e, o.result.data(), entry_bytes);
        if (!e.used) return std::nullopt;
        if (e.key == key) return e.val;
        slot = (slot + 1) % num_slots_;
    }
    return std::nullopt;
}

run_stats kv_workload(size_t num_keys, uint64_t seed, const mode_options& opt) {
    static std::atomic<uint64_t> scratch_counter{0};
    std::string path =
        (std::filesystem::temp_directory_path() /
         ("slrt_kv_" + std::to_string(::getpid()) + "_" +
          std::to_string(scratch_counter.fetch_add(1)) + ".db"))
            .string();

    kv_store store(path, std::max<size_t>(16, 2 * num_keys));
    host_fn_table table;
    store.register_fns(table, opt.host_fn_extra_cycles);
    auto rt = make_call_path(std::move(table), opt,
                             {kv_store::seek_fn, kv_store::read_fn, kv_store::write_fn});

    uint64_t sw = 0, fb = 0, rg = 0, cy = 0, issued = 0;
    kv_store::call_fn call = [&](fn_id id, std::span<const uint8_t> args) {
        call_outcome o = rt->attempt(id, args);
        issued++;
        tally(o, sw, fb, rg, cy);
        return o;
    };

    std::mt19937_64 rng(seed);
    cpu_sampler cs;
    cs.sample();
    uint64_t t0 = monotonic_ns();
    for (size_t i = 0; i < num_keys; i++) {
        uint64_t k = rng();
        store.set(k, mix64(k), call);
    }

    run_stats st;
    st.wall_s = double(monotonic_ns() - t0) / 1e9;
    cpu_sample cpu = cs.sample();
    st.mean_cpu_percent = cpu.percent_used;
    st.cpu_internal = cpu.internal;
    st.total_calls = issued;
    st.switchless = sw;
    st.fallback = fb;
    st.regular = rg;
    st.cycles_spent = cy;
    st.seek_calls = store.seek_count();
    st.read_calls = store.read_count();
    st.write_calls = store.write_count();
    if (rt->zc) st.pool_resets = rt->zc->snapshot().pool_resets;
    rt->shutdown();
    if (rt->sched) st.history = rt->sched->history();
    return st;
}

std::vector<uint64_t> dynamic_schedule(const dynamic_config& cfg) {
    if (cfg.tau_ms == 0) throw ConfigError("dynamic: tau_ms must be > 0");
    if (cfg.phase_len_ms < cfg.tau_ms)
        throw ConfigError("dynamic: phase_len_ms must be >= tau_ms");
    if (cfg.base_ops == 0) throw ConfigError("dynamic: base_ops must be >= 1");

    size_t ticks = size_t(cfg.phase_len_ms / cfg.tau_ms);
    std::vector<uint64_t> v;
    v.reserve(3 * ticks);
    uint64_t ops = cfg.base_ops;
    for (size_t i = 0; i < ticks; i++) {
        v.push_back(ops);
        if (i + 1 < ticks) ops = ops > UINT64_MAX / 2 ? UINT64_MAX : ops * 2;
    }
    uint64_t peak = ops;
    for (size_t i = 0; i < ticks; i++) v.push_back(peak);
    uint64_t down = peak;
    for (size_t i = 0; i < ticks; i++) {
        down /= 2;
        v.push_back(down);
    }
    return v;
}

std::vector<dyn_sample> dynamic_workload(const dynamic_config& cfg, const mode_options& opt) {
    if (cfg.reader_threads == 0 && cfg.writer_threads == 0)
        throw ConfigError("dynamic: need at least one issuing thread");
    std::vector<uint64_t> schedule = dynamic_schedule(cfg);

    int zero_fd = ::open("/dev/zero", O_RDONLY);
    int null_fd = ::open("/dev/null", O_WRONLY);
    if (zero_fd < 0 || null_fd < 0) {
        if (zero_fd >= 0) ::close(zero_fd);
        if (null_fd >= 0) ::close(null_fd);
        throw IoError("dynamic: cannot open zero/null devices");
    }

    host_fn_table table;
    uint64_t extra = opt.host_fn_extra_cycles;
    table.register_host_fn(
        0,
        [zero_fd, extra](std::span<const uint8_t>, std::span<uint8_t> result) -> size_t {
            if (result.size() < 8) return hostfn_overflow;
            if (::pread(zero_fd, result.data(), 8, 0) != 8) throw IoError("dynamic read");
            if (extra) spin_for_cycles(extra);
            return 8;
        },
        8);
    table.register_host_fn(
        1,
        [null_fd, extra](std::span<const uint8_t> args, std::span<uint8_t>) -> size_t {
            if (::pwrite(null_fd, args.data(), args.size(), 0) != ssize_t(args.size()))
                throw IoError("dynamic write");
            if (extra) spin_for_cycles(extra);
            return 0;
        },
        8);
    auto rt = make_call_path(std::move(table), opt, {0, 1});

    std::atomic<uint64_t> ops_done{0}, sw_ct{0}, fb_ct{0}, rg_ct{0};
    uint64_t tau_ns = cfg.tau_ms * 1'000'000ull;

    cpu_sampler cs;
    cs.sample();
    uint64_t t0 = monotonic_ns();

    auto issue = [&](bool writer) {
        uint8_t word[8] = {1, 2, 3, 4, 5, 6, 7, 8};
        for (size_t t = 0; t < schedule.size(); t++) {
            uint64_t deadline = t0 + (uint64_t(t) + 1) * tau_ns;
            for (uint64_t k = 0; k < schedule[t]; k++) {
                call_outcome o =
                    rt->attempt(writer ? 1u : 0u,
                                writer ? std::span<const uint8_t>(word, 8)
                                       : std::span<const uint8_t>{});
                switch (o.route) {
                    case call_route::switchless:
                        sw_ct.fetch_add(1, std::memory_order_relaxed);
                        break;
                    case call_route::fallback_regular:
                        fb_ct.fetch_add(1, std::memory_order_relaxed);
                        break;
                    case call_route::regular:
                        rg_ct.fetch_add(1, std::memory_order_relaxed);
                        break;
                }
                ops_done.fetch_add(1, std::memory_order_relaxed);
                // Saturation guard: never let one tick's quota spill over.
                if ((k & 15u) == 15u && monotonic_ns() >= deadline) break;
            }
            uint64_t now = monotonic_ns();
            if (now < deadline)
                std::this_thread::sleep_for(std::chrono::nanoseconds(deadline - now));
        }
    };

    std::vector<std::thread> threads;
    for (size_t i = 0; i < cfg.reader_threads; i++) threads.emplace_back(issue, false);
    for (size_t i = 0; i < cfg.writer_threads; i++) threads.emplace_back(issue, true);

    std::vector<dyn_sample> out;
    out.reserve(schedule.size());
    uint64_t last_ops = 0, last_sw = 0, last_fb = 0, last_rg = 0;
    for (size_t t = 0; t < schedule.size(); t++) {
        uint64_t deadline = t0 + (uint64_t(t) + 1) * tau_ns;
        uint64_t now = monotonic_ns();
        if (now < deadline)
            std::this_thread::sleep_for(std::chrono::nanoseconds(deadline - now));
        dyn_sample s;
        s.t_ms = (uint64_t(t) + 1) * cfg.tau_ms;
        s.mode = opt.mode;
        uint64_t ops = ops_done.load(std::memory_order_relaxed);
        s.ops_per_s = double(ops - last_ops) * 1000.0 / double(cfg.tau_ms);
        last_ops = ops;
        cpu_sample cpu = cs.sample();
        s.cpu_percent = cpu.percent_used;
        s.active_workers = rt->active_workers();
        uint64_t sw = sw_ct.load(std::memory_order_relaxed);
        uint64_t fb = fb_ct.load(std::memory_order_relaxed);
        uint64_t rg = rg_ct.load(std::memory_order_relaxed);
        s.switchless = sw - last_sw;
        s.fallbacks = fb - last_fb;
        s.regular = rg - last_rg;
        last_sw = sw;
        last_fb = fb;
        last_rg = rg;
        out.push_back(s);
    }
    for (auto& th : threads) th.join();
    rt->shutdown();
    ::close(zero_fd);
    ::close(null_fd);
    return out;
}

void write_timeseries_csv(std::ostream& os, const std::vector<dyn_sample>& samples) {
    os << "# schema=1\n";
    os << "t_ms,mode,ops_per_s,cpu_percent,active_workers,fallbacks,switchless,regular\n";
    for (const dyn_sample& s : samples)
        os << s.t_ms << ',' << mode_name(s.mode) << ',' << s.ops_per_s << ','
           << s.cpu_percent << ',' << s.active_workers << ',' << s.fallbacks << ','
           << s.switchless << ',' << s.regular << '\n';
}

} // namespace slrt

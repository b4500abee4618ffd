#include "slrt/zc_scheduler.hpp"
#include "slrt/errors.hpp"

#include <chrono>
#include <ostream>
#include <stdexcept>

namespace slrt {

uint64_t wasted_cycles(uint64_t F, uint64_t M, uint64_t T, uint64_t T_es) {
    unsigned __int128 u = (unsigned __int128)F * T_es + (unsigned __int128)M * T;
    if (u > UINT64_MAX) throw std::overflow_error("wasted_cycles overflows 64 bits");
    return uint64_t(u);
}

size_t pick_m_prime(const std::vector<uint64_t>& U) {
    if (U.empty()) throw std::invalid_argument("pick_m_prime: empty U");
    size_t best = 0;
    for (size_t i = 1; i < U.size(); i++)
        if (U[i] < U[best]) best = i;
    return best;
}

zc_scheduler::zc_scheduler(zc_runtime& rt, scheduler_config cfg, const boundary_profile& profile)
    : rt_(rt), cfg_(cfg), profile_(profile) {
    if (cfg_.quantum_ms == 0) throw ConfigError("quantum_ms must be > 0");
    if (cfg_.mu_inverse < 2) throw ConfigError("mu_inverse must be >= 2 so that 0 < mu < 1");

    size_t n = cfg_.num_cores_N;
    if (cfg_.max_workers) {
        max_workers_ = *cfg_.max_workers;
        n = 2 * max_workers_; // keeps max_workers = floor(N/2)
    } else {
        if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
        max_workers_ = n / 2;
    }
    cfg_.num_cores_N = n;
    max_workers_ = std::min(max_workers_, rt_.worker_count());

    micro_quantum_us_ = cfg_.quantum_ms * 1000 / cfg_.mu_inverse;
    if (micro_quantum_us_ == 0) throw ConfigError("micro-quantum mu*Q must be > 0");
    t_cycles_ = uint64_t(double(micro_quantum_us_) * 1e-6 * profile_.cycles_per_second);
    start_ns_ = monotonic_ns();
}

void zc_scheduler::set_active_count(size_t n) {
    for (size_t i = 0; i < rt_.worker_count(); i++) rt_.set_worker_active(i, i < n);
}

void zc_scheduler::add_record(bool config, size_t workers, uint64_t fb, uint64_t sl,
                              uint64_t wasted) {
    sched_record r;
    r.timestamp_ms = (monotonic_ns() - start_ns_) / 1000000ull;
    r.config_phase = config;
    r.active_workers = workers;
    r.fallback_calls = fb;
    r.switchless_calls = sl;
    r.wasted_cycles_estimate = wasted;
    std::lock_guard lk(history_mutex_);
    history_.push_back(r);
}

size_t zc_scheduler::configuration_phase() {
    std::vector<uint64_t> U(max_workers_ + 1);
    for (size_t i = 0; i <= max_workers_; i++) {
        set_active_count(i);
        // Deltas are taken within the probe window itself so a directly
        // driven phase is not charged for traffic that predates it.
        uint64_t fb0 = rt_.fallback_count();
        uint64_t sl0 = rt_.switchless_count();
        std::this_thread::sleep_for(std::chrono::microseconds(micro_quantum_us_));
        uint64_t f_i = rt_.fallback_count() - fb0;
        uint64_t s_i = rt_.switchless_count() - sl0;
        U[i] = wasted_cycles(f_i, i, t_cycles_, profile_.transition_cost_cycles);
        add_record(true, i, f_i, s_i, U[i]);
    }
    return pick_m_prime(U);
}

void zc_scheduler::scheduling_phase(size_t m_prime) {
    current_m_.store(m_prime, std::memory_order_relaxed);
    set_active_count(m_prime);
    uint64_t fb0 = rt_.fallback_count();
    uint64_t sl0 = rt_.switchless_count();
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.quantum_ms));
    uint64_t f = rt_.fallback_count() - fb0;
    uint64_t s = rt_.switchless_count() - sl0;
    uint64_t q_cycles = uint64_t(double(cfg_.quantum_ms) * 1e-3 * profile_.cycles_per_second);
    add_record(false, m_prime, f, s,
               wasted_cycles(f, m_prime, q_cycles, profile_.transition_cost_cycles));
}

void zc_scheduler::loop() {
    while (!stop_flag_.load(std::memory_order_acquire)) {
        size_t m = configuration_phase();
        if (stop_flag_.load(std::memory_order_acquire)) break;
        scheduling_phase(m);
    }
}

void zc_scheduler::start() {
    if (running_) throw AlreadyStarted("scheduler already running");
    stop_flag_.store(false);
    thread_ = std::thread([this] { loop(); });
    running_ = true;
}

void zc_scheduler::stop() {
    if (running_) {
        stop_flag_.store(true, std::memory_order_release);
        thread_.join();
        running_ = false;
    }
    rt_.stop();
}

std::vector<sched_record> zc_scheduler::history() const {
    std::lock_guard lk(history_mutex_);
    return history_;
}

void write_history_csv(std::ostream& os, const std::vector<sched_record>& records) {
    os << "# schema=1\n";
    os << "timestamp_ms,phase,active_workers,fallback_calls,switchless_calls,"
          "wasted_cycles_estimate\n";
    for (const auto& r : records)
        os << r.timestamp_ms << ',' << (r.config_phase ? "config" : "sched") << ','
           << r.active_workers << ',' << r.fallback_calls << ',' << r.switchless_calls << ','
           << r.wasted_cycles_estimate << '\n';
}

} // namespace slrt

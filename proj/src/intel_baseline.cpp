#include "slrt/intel_baseline.hpp"
#include "slrt/errors.hpp"

#include <cstring>

#include <pthread.h>
#include <time.h>

namespace slrt {

namespace {
constexpr uint32_t claim_pending = 0;
constexpr uint32_t claim_claimed = 1;
constexpr uint32_t claim_withdrawn = 2;
} // namespace

// Lives on the caller's stack; safe because withdrawal is a claim-token CAS,
// so a late worker can never touch a task its caller has abandoned.
struct intel_runtime::task {
    std::atomic<uint32_t> claim{claim_pending};
    std::atomic<bool> done{false};
    fn_id id = 0;
    const uint8_t* args = nullptr;
    size_t arg_len = 0;
    uint8_t* result = nullptr;
    size_t result_capacity = 0;
    size_t result_len = 0;
    bool failed = false;
    bool overflow = false;
};

intel_runtime::intel_runtime(host_fn_table table, const boundary_profile& profile,
                             intel_config cfg)
    : table_(std::move(table)), profile_(profile), cfg_(cfg) {
    if (cfg_.num_workers == 0) throw ConfigError("intel_workers must be >= 1");
    if (cfg_.task_pool_capacity == 0) cfg_.task_pool_capacity = 2 * cfg_.num_workers;
    eligible_.assign(table_.size(), false);
    for (fn_id id : cfg_.switchless_fn_ids) {
        if (id >= table_.size())
            throw UnknownFunction("switchless fn id " + std::to_string(id) + " not registered");
        eligible_[id] = true;
    }
    pool_.reserve(cfg_.task_pool_capacity);
    for (size_t i = 0; i < cfg_.task_pool_capacity; i++)
        pool_.push_back(std::make_unique<std::atomic<task*>>(nullptr));
    table_.seal();
}

intel_runtime::~intel_runtime() {
    if (started_) stop();
}

void intel_runtime::start() {
    if (started_) throw AlreadyStarted("intel workers already started");
    for (size_t i = 0; i < cfg_.num_workers; i++)
        workers_.emplace_back([this, i] { worker_loop(i); });
    started_ = true;
}

void intel_runtime::stop() {
    if (!started_) return;
    stop_flag_.store(true, std::memory_order_release);
    {
        std::lock_guard lk(sleep_mutex_);
    }
    sleep_cv_.notify_all();
    for (auto& w : workers_)
        if (w.joinable()) w.join();
    started_ = false;
}

bool intel_runtime::enqueue(task* t) {
    for (auto& slot : pool_) {
        task* expected = nullptr;
        if (slot->compare_exchange_strong(expected, t, std::memory_order_acq_rel)) {
            tasks_enqueued_.fetch_add(1, std::memory_order_relaxed);
            pending_.fetch_add(1, std::memory_order_release);
            if (sleepers_.load(std::memory_order_acquire) > 0) {
                std::lock_guard lk(sleep_mutex_);
                sleep_cv_.notify_all();
            }
            return true;
        }
    }
    return false;
}

intel_runtime::task* intel_runtime::try_claim_one() {
    for (auto& slot : pool_) {
        task* t = slot->load(std::memory_order_acquire);
        if (!t) continue;
        uint32_t expected = claim_pending;
        if (t->claim.compare_exchange_strong(expected, claim_claimed,
                                             std::memory_order_acq_rel)) {
            task* cur = t;
            slot->compare_exchange_strong(cur, nullptr, std::memory_order_acq_rel);
            pending_.fetch_sub(1, std::memory_order_relaxed);
            return t;
        }
    }
    return nullptr;
}

void intel_runtime::worker_loop(size_t) {
    uint64_t empty_polls = 0;
    uint64_t poll_cpu0 = thread_cpu_ns();
    bool polling = true;

    auto poll_leave = [&] {
        if (polling) {
            worker_poll_cpu_ns_.fetch_add(thread_cpu_ns() - poll_cpu0,
                                          std::memory_order_relaxed);
            polling = false;
        }
    };
    auto poll_enter = [&] {
        if (!polling) {
            poll_cpu0 = thread_cpu_ns();
            polling = true;
        }
    };

    while (!stop_flag_.load(std::memory_order_acquire)) {
        task* t = try_claim_one();
        if (t) {
            poll_leave();
            std::span<const uint8_t> args{t->args, t->arg_len};
            std::span<uint8_t> result{t->result, t->result_capacity};
            try {
                size_t len = table_.dispatch(t->id, args, result);
                if (len == hostfn_overflow)
                    t->overflow = true;
                else
                    t->result_len = len;
            } catch (...) {
                t->failed = true;
            }
            tasks_executed_.fetch_add(1, std::memory_order_relaxed);
            t->done.store(true, std::memory_order_release);
            empty_polls = 0;
            poll_enter();
            continue;
        }
        pause_spin(1);
        if (++empty_polls >= cfg_.rbs) {
            poll_leave();
            std::unique_lock lk(sleep_mutex_);
            sleepers_.fetch_add(1, std::memory_order_release);
            worker_sleeps_.fetch_add(1, std::memory_order_relaxed);
            sleep_cv_.wait(lk, [&] {
                return pending_.load(std::memory_order_acquire) > 0 ||
                       stop_flag_.load(std::memory_order_acquire);
            });
            sleepers_.fetch_sub(1, std::memory_order_release);
            lk.unlock();
            empty_polls = 0;
            poll_enter();
        }
    }
    poll_leave();
}

call_outcome intel_runtime::switchless_call(fn_id id, std::span<const uint8_t> args,
                                            intel_call_detail* detail) {
    size_t cap = table_.result_capacity(id); // throws UnknownFunction
    if (id >= eligible_.size() || !eligible_[id]) {
        call_outcome out = regular_call(table_, profile_, id, args);
        regular_calls_.fetch_add(1, std::memory_order_relaxed);
        return out;
    }

    uint64_t t_start = read_cycles();
    std::vector<uint8_t> result_buf(cap);
    task t;
    t.id = id;
    t.args = args.data();
    t.arg_len = args.size();
    t.result = result_buf.data();
    t.result_capacity = cap;

    if (!enqueue(&t)) {
        fallback_pool_full_.fetch_add(1, std::memory_order_relaxed);
        call_outcome out = regular_call(table_, profile_, id, args);
        out.route = call_route::fallback_regular;
        out.cycles_spent = read_cycles() - t_start;
        return out;
    }

    // SDK semantics: one pause per retry, no yielding, bounded by rbf.
    uint64_t spin_wall0 = read_cycles();
    uint64_t spin_cpu0 = thread_cpu_ns();
    bool claimed = false;
    for (uint64_t retries = 0; retries < cfg_.rbf; retries++) {
        if (t.claim.load(std::memory_order_acquire) != claim_pending) {
            claimed = true;
            break;
        }
        pause_spin(1);
    }

    if (!claimed) {
        uint32_t expected = claim_pending;
        if (t.claim.compare_exchange_strong(expected, claim_withdrawn,
                                            std::memory_order_acq_rel)) {
            uint64_t spin_wall = read_cycles() - spin_wall0;
            prefallback_spin_cycles_.fetch_add(spin_wall, std::memory_order_relaxed);
            if (detail) {
                detail->prefallback_spin_cycles = spin_wall;
                detail->prefallback_spin_cpu_ns = thread_cpu_ns() - spin_cpu0;
                detail->withdrawn = true;
            }
            task* cur = &t;
            for (auto& slot : pool_) {
                if (slot->load(std::memory_order_acquire) == &t) {
                    slot->compare_exchange_strong(cur, nullptr, std::memory_order_acq_rel);
                    break;
                }
            }
            pending_.fetch_sub(1, std::memory_order_relaxed);
            tasks_withdrawn_.fetch_add(1, std::memory_order_relaxed);
            fallback_withdrawn_.fetch_add(1, std::memory_order_relaxed);

            call_outcome out = regular_call(table_, profile_, id, args);
            out.route = call_route::fallback_regular;
            out.cycles_spent = read_cycles() - t_start;
            return out;
        }
        claimed = true; // a worker won the race; the call completes switchlessly
    }

    if (detail) {
        detail->prefallback_spin_cycles = read_cycles() - spin_wall0;
        detail->prefallback_spin_cpu_ns = thread_cpu_ns() - spin_cpu0;
        detail->withdrawn = false;
    }

    // Claimed: the worker is executing; wait for completion. Unbounded wait,
    // yield-assisted for single-core liveness.
    spin_waiter sw;
    while (!t.done.load(std::memory_order_acquire)) sw.step();

    if (t.overflow)
        throw ResultTooLarge("host function " + std::to_string(id) +
                             " result exceeds capacity " + std::to_string(cap));
    if (t.failed)
        throw Error("host function " + std::to_string(id) + " failed on switchless route");

    call_outcome out;
    result_buf.resize(t.result_len);
    out.result = std::move(result_buf);
    out.route = call_route::switchless;
    out.cycles_spent = read_cycles() - t_start;
    switchless_calls_.fetch_add(1, std::memory_order_relaxed);
    return out;
}

intel_stats intel_runtime::snapshot() const {
    intel_stats st;
    st.switchless_calls = switchless_calls_.load(std::memory_order_relaxed);
    st.fallback_withdrawn = fallback_withdrawn_.load(std::memory_order_relaxed);
    st.fallback_pool_full = fallback_pool_full_.load(std::memory_order_relaxed);
    st.regular_calls = regular_calls_.load(std::memory_order_relaxed);
    st.tasks_enqueued = tasks_enqueued_.load(std::memory_order_relaxed);
    st.tasks_executed = tasks_executed_.load(std::memory_order_relaxed);
    st.tasks_withdrawn = tasks_withdrawn_.load(std::memory_order_relaxed);
    st.worker_sleeps = worker_sleeps_.load(std::memory_order_relaxed);
    st.prefallback_spin_cycles_total = prefallback_spin_cycles_.load(std::memory_order_relaxed);
    st.worker_poll_cpu_ns = worker_poll_cpu_ns_.load(std::memory_order_relaxed);
    return st;
}

uint64_t intel_runtime::worker_cpu_ns(size_t index) const {
    clockid_t cid;
    if (pthread_getcpuclockid(const_cast<std::thread&>(workers_.at(index)).native_handle(),
                              &cid) != 0)
        return 0;
    timespec ts;
    if (clock_gettime(cid, &ts) != 0) return 0;
    return uint64_t(ts.tv_sec) * 1000000000ull + uint64_t(ts.tv_nsec);
}

} // namespace slrt

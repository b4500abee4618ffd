#include "slrt/zc_core.hpp"
#include "slrt/errors.hpp"

#include <cstring>

#include <pthread.h>
#include <time.h>

namespace slrt {

namespace {

constexpr size_t request_header_bytes = 16;

// Unique per OS thread, never zero. Reservation exclusivity is audited
// against this tag on release.
uint32_t caller_tag() {
    static std::atomic<uint32_t> next{1};
    thread_local uint32_t tag = next.fetch_add(1, std::memory_order_relaxed);
    return tag;
}

// Result-region error codes written by the worker on dispatch failure.
constexpr uint8_t dispatch_err_overflow = 1;
constexpr uint8_t dispatch_err_exception = 2;

} // namespace

void transition_log::record(worker_status from, worker_status to) {
    counts_[size_t(from) * n_worker_states + size_t(to)].fetch_add(1, std::memory_order_relaxed);
}

uint64_t transition_log::count(worker_status from, worker_status to) const {
    return counts_[size_t(from) * n_worker_states + size_t(to)].load(std::memory_order_relaxed);
}

bool transition_log::edge_allowed(worker_status from, worker_status to) {
    using ws = worker_status;
    switch (from) {
        case ws::unused: return to == ws::reserved || to == ws::paused || to == ws::exited;
        case ws::reserved: return to == ws::processing;
        case ws::processing: return to == ws::waiting;
        case ws::waiting: return to == ws::unused;
        case ws::paused: return to == ws::unused || to == ws::exited;
        case ws::exited: return false;
    }
    return false;
}

uint64_t transition_log::disallowed_total() const {
    uint64_t total = 0;
    for (size_t f = 0; f < n_worker_states; f++)
        for (size_t t = 0; t < n_worker_states; t++)
            if (!edge_allowed(worker_status(f), worker_status(t)))
                total += counts_[f * n_worker_states + t].load(std::memory_order_relaxed);
    return total;
}

// Bump allocation; returns nothing when the pool is full. Request metadata is
// charged as a header so pool arithmetic matches the shared-buffer layout.
std::optional<call_request> alloc_request(request_pool& pool, size_t arg_len,
                                          size_t result_capacity) {
    size_t needed = request_header_bytes + arg_len + result_capacity;
    if (needed > pool.capacity)
        throw RequestTooLarge("request of " + std::to_string(needed) +
                              " bytes exceeds pool capacity " + std::to_string(pool.capacity));
    if (pool.cursor + needed > pool.capacity) return std::nullopt;
    call_request req;
    req.arg_offset = uint32_t(pool.cursor + request_header_bytes);
    req.arg_len = uint32_t(arg_len);
    req.result_offset = uint32_t(req.arg_offset + arg_len);
    req.result_capacity = uint32_t(result_capacity);
    req.result_len = 0;
    pool.cursor += needed;
    return req;
}

zc_runtime::zc_runtime(host_fn_table table, const boundary_profile& profile, zc_config cfg)
    : table_(std::move(table)), profile_(profile), cfg_(cfg) {
    unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    max_workers_ = cfg_.max_workers.value_or(size_t(cores / 2));
    table_.seal();
}

zc_runtime::~zc_runtime() {
    if (started_ && !stopped_) stop();
}

void zc_runtime::start_workers(size_t count) {
    if (started_) throw AlreadyStarted("workers already started");
    if (count > max_workers_)
        throw ConfigError("start_workers(" + std::to_string(count) + ") exceeds max_workers " +
                          std::to_string(max_workers_));
    slots_.reserve(count);
    for (size_t i = 0; i < count; i++) {
        auto slot = std::make_unique<worker_slot>();
        slot->pool.base = std::make_unique<uint8_t[]>(cfg_.pool_capacity_bytes);
        slot->pool.capacity = cfg_.pool_capacity_bytes;
        slots_.push_back(std::move(slot));
    }
    for (auto& s : slots_) s->thread = std::thread([this, slot = s.get()] { worker_loop(*slot); });
    started_ = true;
}

worker_status zc_runtime::status_of(size_t index) const {
    return slot_word::unpack(slots_.at(index)->word.load(std::memory_order_acquire)).status;
}

slot_word zc_runtime::word_of(size_t index) const {
    return slot_word::unpack(slots_.at(index)->word.load(std::memory_order_acquire));
}

uint64_t zc_runtime::worker_cpu_ns(size_t index) const {
    auto& slot = *slots_.at(index);
    clockid_t cid;
    if (pthread_getcpuclockid(slot.thread.native_handle(), &cid) != 0) return 0;
    timespec ts;
    if (clock_gettime(cid, &ts) != 0) return 0;
    return uint64_t(ts.tv_sec) * 1000000000ull + uint64_t(ts.tv_nsec);
}

uint64_t zc_runtime::worker_calls_served(size_t index) const {
    return slots_.at(index)->calls_served.load(std::memory_order_relaxed);
}

void zc_runtime::set_worker_active(size_t index, bool active) {
    auto& slot = *slots_.at(index);
    if (active) {
        {
            std::lock_guard lk(slot.wake_mutex);
            slot.deactivate_flag.store(false, std::memory_order_release);
        }
        slot.wake_cv.notify_one();
    } else {
        slot.deactivate_flag.store(true, std::memory_order_release);
    }
}

void zc_runtime::stop() {
    if (!started_ || stopped_) return;
    for (auto& s : slots_) {
        std::lock_guard lk(s->wake_mutex);
        s->terminate_flag.store(true, std::memory_order_release);
    }
    for (auto& s : slots_) s->wake_cv.notify_all();
    for (auto& s : slots_) {
        if (s->thread.joinable()) s->thread.join();
    }
    stopped_ = true;
}

zc_stats zc_runtime::snapshot() const {
    zc_stats st;
    st.switchless_calls = switchless_calls_.load(std::memory_order_relaxed);
    st.fallback_calls = fallback_calls_.load(std::memory_order_relaxed);
    st.pool_resets = pool_resets_.load(std::memory_order_relaxed);
    st.caller_spin_ns = caller_spin_ns_.load(std::memory_order_relaxed);
    for (auto& s : slots_)
        st.worker_idle_spin_ns += s->idle_spin_ns.load(std::memory_order_relaxed);
    return st;
}

call_outcome zc_runtime::switchless_call(fn_id id, std::span<const uint8_t> args) {
    size_t cap = table_.result_capacity(id); // throws UnknownFunction
    if (request_header_bytes + args.size() + cap > cfg_.pool_capacity_bytes)
        throw RequestTooLarge("request of " +
                              std::to_string(request_header_bytes + args.size() + cap) +
                              " bytes exceeds pool capacity " +
                              std::to_string(cfg_.pool_capacity_bytes));

    uint64_t t_start = read_cycles();
    uint32_t tag = caller_tag();
    worker_slot* held = nullptr;

    if (!slots_.empty()) {
        size_t n = slots_.size();
        size_t start = scan_start_.fetch_add(1, std::memory_order_relaxed) % n;
        // One pass; no retries. Fallback is immediate when nothing is idle.
        for (size_t k = 0; k < n; k++) {
            worker_slot& s = *slots_[(start + k) % n];
            uint64_t raw = s.word.load(std::memory_order_acquire);
            slot_word w = slot_word::unpack(raw);
            if (w.status != worker_status::unused) continue;
            if (s.deactivate_flag.load(std::memory_order_acquire)) continue;
            slot_word res{worker_status::reserved, spinner::worker, tag};
            if (s.word.compare_exchange_strong(raw, res.pack(), std::memory_order_acq_rel)) {
                log_.record(worker_status::unused, worker_status::reserved);
                held = &s;
                break;
            }
        }
    }

    if (!held) {
        call_outcome out = regular_call(table_, profile_, id, args);
        out.route = call_route::fallback_regular;
        out.cycles_spent = read_cycles() - t_start;
        fallback_calls_.fetch_add(1, std::memory_order_relaxed);
        return out;
    }

    worker_slot& s = *held;
    auto req = alloc_request(s.pool, args.size(), cap);
    if (!req) {
        // Full pool: one charged boundary crossing models the free +
        // re-allocate ocall, then a single retry on the empty pool.
        spin_for_cycles(profile_.transition_cost_cycles);
        pool_resets_.fetch_add(1, std::memory_order_relaxed);
        s.pool.cursor = 0;
        req = alloc_request(s.pool, args.size(), cap);
    }
    s.request = *req;
    s.request.id = id;
    if (!args.empty()) std::memcpy(s.pool.base.get() + req->arg_offset, args.data(), args.size());

    slot_word publish{worker_status::processing, spinner::caller, tag};
    slot_word prev = slot_word::unpack(
        s.word.exchange(publish.pack(), std::memory_order_acq_rel));
    log_.record(prev.status, worker_status::processing);

    uint64_t cpu0 = thread_cpu_ns();
    spin_waiter sw;
    slot_word w;
    for (;;) {
        w = slot_word::unpack(s.word.load(std::memory_order_acquire));
        if (w.status == worker_status::waiting) break;
        sw.step();
    }
    caller_spin_ns_.fetch_add(thread_cpu_ns() - cpu0, std::memory_order_relaxed);

    call_outcome out;
    uint32_t rlen = s.request.result_len;
    uint8_t err = rlen == result_error_marker ? s.pool.base[s.request.result_offset] : 0;
    if (rlen != result_error_marker) {
        out.result.assign(s.pool.base.get() + s.request.result_offset,
                          s.pool.base.get() + s.request.result_offset + rlen);
    }

    slot_word release{worker_status::unused, spinner::none, 0};
    slot_word rel_prev = slot_word::unpack(
        s.word.exchange(release.pack(), std::memory_order_acq_rel));
    log_.record(rel_prev.status, worker_status::unused);

    if (rlen == result_error_marker) {
        if (err == dispatch_err_overflow)
            throw ResultTooLarge("host function " + std::to_string(id) +
                                 " result exceeds capacity " + std::to_string(cap));
        throw Error("host function " + std::to_string(id) + " failed on switchless route");
    }

    out.route = call_route::switchless;
    out.cycles_spent = read_cycles() - t_start;
    switchless_calls_.fetch_add(1, std::memory_order_relaxed);
    return out;
}

void zc_runtime::worker_loop(worker_slot& slot) {
    spin_waiter sw;
    bool in_idle = false;
    uint64_t idle_cpu0 = 0;

    auto idle_enter = [&] {
        if (!in_idle) {
            in_idle = true;
            idle_cpu0 = thread_cpu_ns();
        }
    };
    auto idle_leave = [&] {
        if (in_idle) {
            in_idle = false;
            slot.idle_spin_ns.fetch_add(thread_cpu_ns() - idle_cpu0, std::memory_order_relaxed);
        }
    };

    for (;;) {
        uint64_t raw = slot.word.load(std::memory_order_acquire);
        slot_word w = slot_word::unpack(raw);

        switch (w.status) {
            case worker_status::unused: {
                if (slot.terminate_flag.load(std::memory_order_acquire)) {
                    slot_word ex{worker_status::exited, spinner::none, 0};
                    if (slot.word.compare_exchange_strong(raw, ex.pack(),
                                                          std::memory_order_acq_rel)) {
                        log_.record(worker_status::unused, worker_status::exited);
                        idle_leave();
                        return;
                    }
                    continue; // a caller raced a reservation in; serve it first
                }
                if (slot.deactivate_flag.load(std::memory_order_acquire)) {
                    slot_word pa{worker_status::paused, spinner::none, 0};
                    if (!slot.word.compare_exchange_strong(raw, pa.pack(),
                                                           std::memory_order_acq_rel))
                        continue;
                    log_.record(worker_status::unused, worker_status::paused);
                    idle_leave();
                    {
                        std::unique_lock lk(slot.wake_mutex);
                        slot.wake_cv.wait(lk, [&] {
                            return !slot.deactivate_flag.load(std::memory_order_acquire) ||
                                   slot.terminate_flag.load(std::memory_order_acquire);
                        });
                    }
                    for (;;) {
                        uint64_t praw = slot.word.load(std::memory_order_acquire);
                        if (slot.terminate_flag.load(std::memory_order_acquire)) {
                            slot_word ex{worker_status::exited, spinner::none, 0};
                            if (slot.word.compare_exchange_strong(praw, ex.pack(),
                                                                  std::memory_order_acq_rel)) {
                                log_.record(worker_status::paused, worker_status::exited);
                                return;
                            }
                            continue;
                        }
                        slot_word un{worker_status::unused, spinner::none, 0};
                        if (slot.word.compare_exchange_strong(praw, un.pack(),
                                                              std::memory_order_acq_rel)) {
                            log_.record(worker_status::paused, worker_status::unused);
                            break;
                        }
                    }
                    continue;
                }
                idle_enter();
                if (w.spin == spinner::none) {
                    slot_word marked{worker_status::unused, spinner::worker, 0};
                    slot.word.compare_exchange_strong(raw, marked.pack(),
                                                      std::memory_order_acq_rel);
                    continue;
                }
                sw.step();
                break;
            }
            case worker_status::reserved:
                // Publish is imminent; the spinner field already names us.
                sw.step();
                break;
            case worker_status::processing: {
                idle_leave();
                call_request req = slot.request;
                std::span<const uint8_t> args{slot.pool.base.get() + req.arg_offset, req.arg_len};
                std::span<uint8_t> result{slot.pool.base.get() + req.result_offset,
                                          req.result_capacity};
                uint32_t rlen;
                try {
                    size_t len = table_.dispatch(req.id, args, result);
                    if (len == hostfn_overflow) {
                        slot.pool.base[req.result_offset] = dispatch_err_overflow;
                        rlen = result_error_marker;
                    } else {
                        rlen = uint32_t(len);
                    }
                } catch (...) {
                    slot.pool.base[req.result_offset] = dispatch_err_exception;
                    rlen = result_error_marker;
                }
                slot.request.result_len = rlen;
                slot_word done{worker_status::waiting, spinner::caller, w.owner};
                slot_word prev = slot_word::unpack(
                    slot.word.exchange(done.pack(), std::memory_order_acq_rel));
                log_.record(prev.status, worker_status::waiting);
                slot.calls_served.fetch_add(1, std::memory_order_relaxed);
                break;
            }
            case worker_status::waiting:
                // Caller is copying the result out; it owns the next edge.
                sw.step();
                break;
            case worker_status::paused:
            case worker_status::exited:
                // Not reachable from this loop's own edges.
                sw.step();
                break;
        }
    }
}

} // namespace slrt

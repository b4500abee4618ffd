#include "slrt/intel_baseline.hpp"
#include "slrt/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <random>
#include <thread>
#include <vector>

using namespace slrt;

namespace {

const boundary_profile& profile() {
    static boundary_profile p = calibrate();
    return p;
}

size_t echo_fn(std::span<const uint8_t> args, std::span<uint8_t> result) {
    if (args.size() > result.size()) return hostfn_overflow;
    std::memcpy(result.data(), args.data(), args.size());
    return args.size();
}

size_t sum_fn(std::span<const uint8_t> args, std::span<uint8_t> result) {
    uint64_t sum = 0;
    for (uint8_t b : args) sum += b;
    if (result.size() < 8) return hostfn_overflow;
    std::memcpy(result.data(), &sum, 8);
    return 8;
}

// Busy host function; arg byte 0 selects duration in ms.
size_t slow_fn(std::span<const uint8_t> args, std::span<uint8_t> result) {
    uint64_t ms = args.empty() ? 1 : args[0];
    uint64_t t0 = monotonic_ns();
    while (monotonic_ns() - t0 < ms * 1'000'000) pause_spin(64);
    if (!result.empty()) result[0] = 0x5a;
    return result.empty() ? 0 : 1;
}

host_fn_table full_table() {
    host_fn_table t;
    t.register_host_fn(0, echo_fn, 64);
    t.register_host_fn(1, sum_fn, 8);
    t.register_host_fn(2, slow_fn, 8);
    return t;
}

uint64_t median_u64(std::vector<uint64_t> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST_CASE("construction validates workers and fn ids") {
    intel_config no_workers{.num_workers = 0};
    CHECK_THROWS_AS(intel_runtime(full_table(), profile(), no_workers), ConfigError);
    intel_config bad_id{.num_workers = 1, .switchless_fn_ids = {7}};
    CHECK_THROWS_AS(intel_runtime(full_table(), profile(), bad_id), UnknownFunction);
}

TEST_CASE("ids outside the switchless set take the plain regular route") {
    intel_config cfg{.num_workers = 1, .switchless_fn_ids = {0}};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    std::vector<uint8_t> args{10, 20, 30};
    auto out = rt.switchless_call(1, args); // not eligible
    CHECK(out.route == call_route::regular);
    uint64_t expect_sum = 60;
    REQUIRE(out.result.size() == 8);
    uint64_t got;
    std::memcpy(&got, out.result.data(), 8);
    CHECK(got == expect_sum);
    CHECK(out.cycles_spent >= profile().transition_cost_cycles);

    auto st = rt.snapshot();
    CHECK(st.regular_calls == 1);
    CHECK(st.tasks_enqueued == 0);
    CHECK(st.switchless_calls == 0);

    CHECK_THROWS_AS((void)rt.switchless_call(9, {}), UnknownFunction);
    rt.stop();
}

TEST_CASE("an empty switchless set degenerates to all-regular") {
    intel_config cfg{.num_workers = 1};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();
    for (int i = 0; i < 10; i++) {
        uint8_t b = uint8_t(i);
        auto out = rt.switchless_call(0, {&b, 1});
        CHECK(out.route == call_route::regular);
        CHECK(out.result == std::vector<uint8_t>{uint8_t(i)});
    }
    auto st = rt.snapshot();
    CHECK(st.regular_calls == 10);
    CHECK(st.tasks_enqueued == 0);
    rt.stop();
}

TEST_CASE("switchless and regular routes agree on results") {
    intel_config cfg{.num_workers = 1, .rbf = 500, .switchless_fn_ids = {0, 1}};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; i++) {
        fn_id id = fn_id(rng() % 2);
        std::vector<uint8_t> args(rng() % 65);
        for (auto& b : args) b = uint8_t(rng());
        auto via_rt = rt.switchless_call(id, args);
        auto via_reg = regular_call(rt.table(), profile(), id, args);
        CHECK(via_rt.result == via_reg.result);
    }
    rt.stop();
}

TEST_CASE("every enqueued task is either executed or withdrawn") {
    intel_config cfg{.num_workers = 2, .rbf = 500, .switchless_fn_ids = {0}};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    constexpr int n_callers = 3;
    constexpr int per_thread = 2000;
    std::atomic<uint64_t> mismatches{0};
    std::vector<std::thread> callers;
    for (int c = 0; c < n_callers; c++) {
        callers.emplace_back([&, c] {
            for (int k = 0; k < per_thread; k++) {
                uint64_t tagged = (uint64_t(c) << 32) | uint64_t(k);
                uint8_t payload[8];
                std::memcpy(payload, &tagged, 8);
                auto out = rt.switchless_call(0, payload);
                if (out.result.size() != 8 ||
                    std::memcmp(out.result.data(), payload, 8) != 0)
                    mismatches.fetch_add(1, std::memory_order_relaxed);
            }
        });
    }
    for (auto& t : callers) t.join();

    CHECK(mismatches.load() == 0);
    auto st = rt.snapshot();
    CHECK(st.tasks_enqueued == st.tasks_executed + st.tasks_withdrawn);
    CHECK(st.tasks_executed == st.switchless_calls);
    CHECK(st.tasks_withdrawn == st.fallback_withdrawn);
    CHECK(st.switchless_calls + st.fallback_withdrawn + st.fallback_pool_full ==
          uint64_t(n_callers) * per_thread);
    rt.stop();
}

TEST_CASE("zero retries degenerates to the regular path") {
    // The huge poll budget keeps the worker awake, so enqueue never notifies
    // and a woken worker cannot preempt the caller between enqueue and its
    // withdrawal CAS (which it regularly does on a single-core host).
    intel_config cfg{.num_workers = 1, .rbf = 0, .rbs = 1'000'000'000,
                     .switchless_fn_ids = {0}};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    std::vector<uint64_t> via_rt_cycles, via_reg_cycles;
    uint64_t withdrawn = 0;
    for (int i = 0; i < 101; i++) {
        uint8_t b = uint8_t(i);
        intel_call_detail d;
        auto out = rt.switchless_call(0, {&b, 1}, &d);
        CHECK(out.result == std::vector<uint8_t>{uint8_t(i)});
        if (d.withdrawn) {
            withdrawn++;
            CHECK(out.route == call_route::fallback_regular);
            CHECK(d.prefallback_spin_cycles < profile().transition_cost_cycles);
        }
        via_rt_cycles.push_back(out.cycles_spent);
        via_reg_cycles.push_back(
            regular_call(rt.table(), profile(), 0, {&b, 1}).cycles_spent);
    }
    // With no retry budget the withdrawal CAS should win essentially always.
    CHECK(withdrawn >= 95);
    CHECK(median_u64(via_rt_cycles) <= 2 * median_u64(via_reg_cycles));
    CHECK(rt.snapshot().fallback_withdrawn == withdrawn);
    rt.stop();
}

TEST_CASE("workers sleep after their poll budget and wake on work") {
    intel_config cfg{.num_workers = 1, .rbf = 100'000'000, .rbs = 2000,
                     .switchless_fn_ids = {0}};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (rt.snapshot().worker_sleeps == 0 && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    REQUIRE(rt.snapshot().worker_sleeps >= 1);

    // Asleep: no measurable CPU.
    uint64_t cpu0 = rt.worker_cpu_ns(0);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    CHECK(rt.worker_cpu_ns(0) - cpu0 <= 2'000'000);

    // A call wakes it; the large retry budget guarantees the switchless route.
    uint8_t b = 77;
    auto out = rt.switchless_call(0, {&b, 1});
    CHECK(out.route == call_route::switchless);
    CHECK(out.result == std::vector<uint8_t>{77});
    CHECK(rt.snapshot().tasks_executed == 1);
    rt.stop();
}

TEST_CASE("a full task pool falls back immediately") {
    // One worker, pool of one slot: a pending unclaimed task blocks the pool.
    intel_config cfg{.num_workers = 1, .rbf = 100'000'000, .rbs = 100'000'000,
                     .switchless_fn_ids = {0, 2}, .task_pool_capacity = 1};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    std::thread busy([&] {
        uint8_t ms = 60;
        auto out = rt.switchless_call(2, {&ms, 1}); // claimed fast, runs 60 ms
        CHECK(out.result == std::vector<uint8_t>{0x5a});
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(10)); // worker is now busy

    std::thread pending([&] {
        uint8_t b = 1;
        auto out = rt.switchless_call(0, {&b, 1}); // parks in the single pool slot
        CHECK(out.result == std::vector<uint8_t>{1});
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(10));

    uint8_t b = 2;
    auto out = rt.switchless_call(0, {&b, 1});
    CHECK(out.route == call_route::fallback_regular);
    CHECK(out.result == std::vector<uint8_t>{2});
    CHECK(rt.snapshot().fallback_pool_full >= 1);

    busy.join();
    pending.join();
    rt.stop();
}

TEST_CASE("pre-fallback spinning costs about rbf pauses of cpu") {
    constexpr uint64_t rbf = 2000;
    intel_config cfg{.num_workers = 1, .rbf = rbf, .rbs = 100'000'000,
                     .switchless_fn_ids = {0, 2}};
    intel_runtime rt(full_table(), profile(), cfg);
    rt.start();

    std::thread busy([&] {
        uint8_t ms = 200;
        (void)rt.switchless_call(2, {&ms, 1});
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(10));

    std::vector<uint64_t> spin_cpu;
    for (int i = 0; i < 15; i++) {
        uint8_t b = uint8_t(i);
        intel_call_detail d;
        auto out = rt.switchless_call(0, {&b, 1}, &d);
        REQUIRE(d.withdrawn);
        CHECK(out.route == call_route::fallback_regular);
        spin_cpu.push_back(d.prefallback_spin_cpu_ns);
    }
    double pause_ns =
        double(profile().pause_cost_cycles) * 1e9 / profile().cycles_per_second;
    double expected = double(rbf) * pause_ns;
    double got = double(median_u64(spin_cpu));
    CHECK(got >= expected * 0.5);
    CHECK(got <= expected * 2.0);

    busy.join();
    rt.stop();
}

TEST_CASE("worker failures surface on the caller") {
    host_fn_table t;
    t.register_host_fn(0, echo_fn, 4);
    t.register_host_fn(1, [](std::span<const uint8_t>, std::span<uint8_t>) -> size_t {
        throw std::runtime_error("boom");
    }, 8);
    intel_config cfg{.num_workers = 1, .rbf = 100'000'000, .switchless_fn_ids = {0, 1}};
    intel_runtime rt(std::move(t), profile(), cfg);
    rt.start();

    uint8_t big[8] = {};
    CHECK_THROWS_AS((void)rt.switchless_call(0, big), ResultTooLarge);
    CHECK_THROWS_AS((void)rt.switchless_call(1, {}), Error);

    // The pool slot is reusable after both error paths.
    uint8_t small[2] = {3, 4};
    auto out = rt.switchless_call(0, small);
    CHECK(out.result == std::vector<uint8_t>{3, 4});
    rt.stop();
}

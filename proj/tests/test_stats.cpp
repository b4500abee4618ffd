#include "slrt/stats.hpp"
#include "slrt/timing.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

using namespace slrt;

namespace slrt {

// Test-only backdoor over the sampler's counter source.
class cpu_sampler_test_access {
  public:
    static void set_path(cpu_sampler& s, std::string path) { s.stat_path_ = std::move(path); }
};

} // namespace slrt

namespace {

std::string write_stat_file(const char* name, uint64_t u, uint64_t n, uint64_t s, uint64_t i) {
    std::string path = std::string("/tmp/") + name;
    std::ofstream os(path);
    os << "cpu  " << u << ' ' << n << ' ' << s << ' ' << i << " 0 0 0 0 0 0\n";
    os << "cpu0 " << u << ' ' << n << ' ' << s << ' ' << i << " 0 0 0 0 0 0\n";
    return path;
}

} // namespace

TEST_CASE("cpu percent formula matches its definition exactly") {
    CHECK(cpu_percent_used(0, 0, 0, 1) == 0.0);
    CHECK(cpu_percent_used(1, 1, 1, 0) == 100.0);
    CHECK(cpu_percent_used(0, 0, 0, 0) == 0.0);
    CHECK(cpu_percent_used(1, 0, 0, 1) == 50.0);

    std::mt19937_64 rng(11);
    for (int t = 0; t < 1000; t++) {
        uint64_t u = rng() % 100000, n = rng() % 100000, s = rng() % 100000,
                 i = rng() % 100000;
        if (u + n + s + i == 0) continue;
        long double expect =
            (long double)(u + n + s) / (long double)(u + n + s + i) * 100.0L;
        CHECK(cpu_percent_used(u, n, s, i) == doctest::Approx(double(expect)).epsilon(1e-9));
    }
}

TEST_CASE("sampler computes usage over the interval since the previous sample") {
    std::string path = write_stat_file("slrt_stat_a", 100, 0, 0, 100);
    cpu_sampler cs;
    cpu_sampler_test_access::set_path(cs, path);
    cs.sample(); // baseline

    write_stat_file("slrt_stat_a", 150, 10, 20, 120);
    cpu_sample s = cs.sample();
    CHECK_FALSE(s.carried);
    CHECK_FALSE(s.internal);
    // deltas: busy 50+10+20 = 80, idle 20 -> 80%
    CHECK(s.percent_used == doctest::Approx(80.0).epsilon(1e-9));

    // Zero elapsed ticks: previous value carried, flagged.
    cpu_sample again = cs.sample();
    CHECK(again.carried);
    CHECK(again.percent_used == doctest::Approx(80.0).epsilon(1e-9));
    std::remove(path.c_str());
}

TEST_CASE("a missing counter source falls back to internal accounting, flagged") {
    cpu_sampler cs;
    cpu_sampler_test_access::set_path(cs, "/nonexistent/slrt_stat");
    cpu_sample a = cs.sample();
    CHECK(a.internal);
    spin_for_cycles(2'000'000);
    cpu_sample b = cs.sample();
    CHECK(b.internal);
    CHECK(b.percent_used >= 0.0);
    CHECK(b.percent_used <= 100.0);
    // This thread was spinning the whole interval.
    CHECK(b.percent_used >
          50.0 / double(std::max(1u, std::thread::hardware_concurrency())));
}

TEST_CASE("an idle interval reads below the idle floor") {
    cpu_sampler cs;
    cs.sample();
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    cpu_sample s = cs.sample();
    if (s.internal) return; // no aggregate counters on this host
    CHECK(s.percent_used < 10.0);
}

TEST_CASE("k spinners on an N-core machine read near 100k/N") {
    unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    cpu_sampler cs;
    cs.sample();
    std::atomic<bool> stop{false};
    std::thread spinner([&] {
        while (!stop.load(std::memory_order_relaxed)) {
        }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    cpu_sample s = cs.sample();
    stop.store(true);
    spinner.join();
    if (s.internal) return;
    CHECK(std::abs(s.percent_used - 100.0 / double(cores)) <= 15.0);
}

TEST_CASE("median handles odd, even and empty inputs") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({}) == 0.0);
    CHECK(median({7.0}) == 7.0);
}

TEST_CASE("spearman matches hand-computed oracles") {
    CHECK(*spearman({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(*spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    // Classic textbook case: d^2 sums to 4 over n=5 -> rho = 0.8.
    CHECK(*spearman({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}) == doctest::Approx(0.8));
    // Tie-averaged ranks keep a perfect monotone relation at 1.
    CHECK(*spearman({1, 2, 2, 3}, {10, 20, 20, 30}) == doctest::Approx(1.0));
}

TEST_CASE("spearman is undefined for degenerate series") {
    CHECK_FALSE(spearman({}, {}).has_value());
    CHECK_FALSE(spearman({1}, {1}).has_value());
    CHECK_FALSE(spearman({1, 2}, {1}).has_value());
    CHECK_FALSE(spearman({5, 5, 5}, {1, 2, 3}).has_value()); // constant xs
    CHECK_FALSE(spearman({1, 2, 3}, {4, 4, 4}).has_value()); // constant ys
}

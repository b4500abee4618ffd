#include "slrt/errors.hpp"
#include "slrt/stats.hpp"
#include "slrt/timing.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

using namespace slrt;

namespace {

// Calibrating once keeps the suite fast; calibration repeatability gets its
// own runs below.
const boundary_profile& quiet_profile() {
    static boundary_profile p = calibrate();
    return p;
}

uint64_t timed_pause_spin(uint64_t n) {
    uint64_t t0 = read_cycles();
    pause_spin(n);
    return read_cycles() - t0;
}

double median_of(std::vector<uint64_t> v) {
    std::vector<double> d(v.begin(), v.end());
    return median(std::move(d));
}

} // namespace

TEST_CASE("read_cycles is monotone") {
    uint64_t last = read_cycles();
    for (int i = 0; i < 100000; i++) {
        uint64_t now = read_cycles();
        REQUIRE(now >= last);
        last = now;
    }
}

TEST_CASE("read_cycles tracks the monotonic clock within 5%") {
    const boundary_profile& p = quiet_profile();
    uint64_t w0 = monotonic_ns();
    uint64_t c0 = read_cycles();
    while (monotonic_ns() - w0 < 60'000'000ull) {
    }
    uint64_t c1 = read_cycles();
    uint64_t w1 = monotonic_ns();
    double wall_s = double(w1 - w0) / 1e9;
    double cyc_s = double(c1 - c0) / p.cycles_per_second;
    CHECK(cyc_s == doctest::Approx(wall_s).epsilon(0.05));
}

TEST_CASE("pause_spin(0) returns immediately") {
    uint64_t best = UINT64_MAX;
    for (int i = 0; i < 1000; i++) best = std::min(best, timed_pause_spin(0));
    CHECK(best < 100);
}

TEST_CASE("pause_spin is additive within 20%") {
    constexpr uint64_t n = 20000;
    std::vector<uint64_t> singles, doubles;
    for (int i = 0; i < 9; i++) singles.push_back(timed_pause_spin(n));
    for (int i = 0; i < 9; i++) doubles.push_back(timed_pause_spin(n) + timed_pause_spin(n));
    double one = median_of(singles);
    double two = median_of(doubles);
    CHECK(two == doctest::Approx(2.0 * one).epsilon(0.20));
}

TEST_CASE("pause_spin rate stays within 50% of the calibrated pause cost") {
    const boundary_profile& p = quiet_profile();
    constexpr uint64_t n = 100000;
    std::vector<uint64_t> runs;
    for (int i = 0; i < 9; i++) runs.push_back(timed_pause_spin(n));
    double per_pause = median_of(runs) / double(n);
    CHECK(per_pause >= 0.5 * double(p.pause_cost_cycles));
    CHECK(per_pause <= 1.5 * double(p.pause_cost_cycles));
}

TEST_CASE("calibrate returns a fully populated profile with the default T_es") {
    const boundary_profile& p = quiet_profile();
    CHECK(p.transition_cost_cycles == 13500);
    CHECK(p.pause_cost_cycles > 0);
    CHECK(p.cycles_per_second > 0.0);
    CHECK(p.transition_cost_cycles >= p.pause_cost_cycles);
}

TEST_CASE("calibrate records a configured transition cost") {
    boundary_profile p = calibrate(9000);
    CHECK(p.transition_cost_cycles == 9000);
}

TEST_CASE("calibrate repeats between back-to-back runs") {
    boundary_profile a = calibrate();
    boundary_profile b = calibrate();
    CHECK(a.cycles_per_second == doctest::Approx(b.cycles_per_second).epsilon(0.01));
    // The pause estimate is a median over samples of a ~dozen-cycle event;
    // interrupt noise moves it by a few cycles between runs.
    double hi = double(std::max(a.pause_cost_cycles, b.pause_cost_cycles));
    double lo = double(std::min(a.pause_cost_cycles, b.pause_cost_cycles));
    CHECK(hi <= lo * 2.0);
}

TEST_CASE("cycles_per_second matches the advertised clock when one is listed") {
    FILE* f = std::fopen("/proc/cpuinfo", "r");
    if (!f) return;
    double ghz = 0.0;
    char line[512];
    while (std::fgets(line, sizeof line, f)) {
        const char* at = std::strstr(line, "@ ");
        if (at && std::sscanf(at, "@ %lfGHz", &ghz) == 1) break;
    }
    std::fclose(f);
    if (ghz <= 0.0) return; // nothing advertised, nothing to compare
    double measured = quiet_profile().cycles_per_second / 1e9;
    CHECK(measured == doctest::Approx(ghz).epsilon(0.20));
}

TEST_CASE("pause cost estimation rejects unstable samples") {
    std::vector<uint64_t> stable(1001, 30);
    CHECK(pause_cost_from_samples(stable) == 30);

    // Median 30 but half the mass far away: MAD lands at 30 > 30/2.
    std::vector<uint64_t> unstable;
    for (int i = 0; i < 500; i++) unstable.push_back(30);
    for (int i = 0; i < 250; i++) unstable.push_back(1);
    for (int i = 0; i < 251; i++) unstable.push_back(600);
    CHECK_THROWS_AS((void)pause_cost_from_samples(unstable), CalibrationUnstable);
}

TEST_CASE("spin_for_cycles spins at least the requested window") {
    constexpr uint64_t target = 200000;
    std::vector<uint64_t> runs;
    for (int i = 0; i < 9; i++) {
        uint64_t t0 = read_cycles();
        spin_for_cycles(target);
        runs.push_back(read_cycles() - t0);
    }
    double med = median_of(runs);
    CHECK(med >= double(target));
    CHECK(med <= 2.0 * double(target));
}

TEST_CASE("thread_cpu_ns advances while spinning") {
    uint64_t c0 = thread_cpu_ns();
    spin_for_cycles(500000);
    uint64_t c1 = thread_cpu_ns();
    CHECK(c1 > c0);
}

#include "slrt/stats.hpp"
#include "slrt/errors.hpp"
#include "slrt/timing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include <time.h>

namespace slrt {

double cpu_percent_used(uint64_t user, uint64_t nice, uint64_t system, uint64_t idle) {
    uint64_t busy = user + nice + system;
    uint64_t total = busy + idle;
    if (total == 0) return 0.0;
    return double(busy) / double(total) * 100.0;
}

cpu_sampler::cpu_sampler() = default;

bool cpu_sampler::read_counters(cpu_sample& out) {
    FILE* f = std::fopen(stat_path_.c_str(), "r");
    if (!f) return false;
    unsigned long long u = 0, n = 0, s = 0, i = 0;
    int got = std::fscanf(f, "cpu %llu %llu %llu %llu", &u, &n, &s, &i);
    std::fclose(f);
    if (got != 4) return false;
    out.user = u;
    out.nice = n;
    out.system = s;
    out.idle = i;
    return true;
}

cpu_sample cpu_sampler::sample() {
    cpu_sample cur;
    if (source_ok_ && !read_counters(cur)) source_ok_ = false;

    if (!source_ok_) {
        // Internal accounting: process CPU over wall, scaled to the core count.
        timespec ts;
        clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
        uint64_t proc_ns = uint64_t(ts.tv_sec) * 1000000000ull + uint64_t(ts.tv_nsec);
        uint64_t wall_ns = monotonic_ns();
        cur.internal = true;
        unsigned cores = std::max(1u, std::thread::hardware_concurrency());
        if (have_prev_ && wall_ns > prev_wall_ns_) {
            double frac = double(proc_ns - prev_proc_ns_) / double(wall_ns - prev_wall_ns_);
            cur.percent_used = std::min(100.0, frac / double(cores) * 100.0);
        } else if (have_prev_) {
            cur.percent_used = prev_percent_;
            cur.carried = true;
        }
        prev_proc_ns_ = proc_ns;
        prev_wall_ns_ = wall_ns;
        have_prev_ = true;
        prev_percent_ = cur.percent_used;
        return cur;
    }

    if (!have_prev_) {
        cur.percent_used = cpu_percent_used(cur.user, cur.nice, cur.system, cur.idle);
    } else {
        uint64_t du = cur.user - prev_.user;
        uint64_t dn = cur.nice - prev_.nice;
        uint64_t ds = cur.system - prev_.system;
        uint64_t di = cur.idle - prev_.idle;
        if (du + dn + ds + di == 0) {
            cur.percent_used = prev_percent_;
            cur.carried = true;
        } else {
            cur.percent_used = cpu_percent_used(du, dn, ds, di);
        }
    }
    prev_ = cur;
    prev_percent_ = cur.percent_used;
    have_prev_ = true;
    return cur;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t mid = v.size() / 2;
    if (v.size() % 2) return v[mid];
    return (v[mid - 1] + v[mid]) / 2.0;
}

namespace {

// Average ranks over ties: values equal within epsilon share the mean of the
// positions they occupy.
std::vector<double> tie_ranks(const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) j++;
        double r = (double(i) + double(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; k++) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
    auto rx = tie_ranks(xs);
    auto ry = tie_ranks(ys);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / double(rx.size());
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / double(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < rx.size(); i++) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt; // constant series
    return sxy / std::sqrt(sxx * syy);
}

} // namespace slrt

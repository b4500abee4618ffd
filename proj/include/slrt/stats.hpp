#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slrt {

// Aggregate counters from /proc/stat's cpu line: the four fields the usage
// formula is defined over. Ticks are cumulative since boot.
struct cpu_sample {
    uint64_t user = 0;
    uint64_t nice = 0;
    uint64_t system = 0;
    uint64_t idle = 0;
    double percent_used = 0.0;
    bool carried = false;  // interval had zero elapsed ticks, previous value kept
    bool internal = false; // counters unavailable, internal accounting fallback
};

// percent = (user+nice+system) / (user+nice+system+idle) * 100 over a delta.
double cpu_percent_used(uint64_t user, uint64_t nice, uint64_t system, uint64_t idle);

// Interval sampler over the aggregate cpu counters. The first sample
// establishes the baseline; each later sample reports usage since the
// previous one. When the counter source is missing, falls back to
// process-CPU / wall accounting and flags the sample.
class cpu_sampler {
  public:
    cpu_sampler();
    cpu_sample sample();

  private:
    bool read_counters(cpu_sample& out);

    bool have_prev_ = false;
    cpu_sample prev_;
    double prev_percent_ = 0.0;
    uint64_t prev_proc_ns_ = 0;
    uint64_t prev_wall_ns_ = 0;
    bool source_ok_ = true;
    std::string stat_path_ = "/proc/stat";

    friend class cpu_sampler_test_access;
};

double median(std::vector<double> v);

// Spearman rank correlation with tie-averaged ranks. Empty, single-element,
// or zero-variance series have no defined correlation.
std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace slrt

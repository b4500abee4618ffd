#pragma once

#include "slrt/timing.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace slrt {

using fn_id = uint32_t;

// A host function fills `result` (capacity fixed at registration) and returns
// the byte count written, or hostfn_overflow when the capacity is too small.
inline constexpr size_t hostfn_overflow = SIZE_MAX;
using host_fn = std::function<size_t(std::span<const uint8_t> args, std::span<uint8_t> result)>;

enum class call_route { switchless, fallback_regular, regular };

struct call_outcome {
    std::vector<uint8_t> result;
    call_route route = call_route::regular;
    uint64_t cycles_spent = 0;
};

// Immutable-after-start registry of host functions. Ids must be dense
// (0..n-1): registration order fixes them.
class host_fn_table {
  public:
    // id must equal the current size(); keeps the id space dense.
    void register_host_fn(fn_id id, host_fn fn, size_t max_result_bytes = 256);

    // Called by the runtime that takes ownership of the table; later
    // registrations throw RegistrationAfterStart.
    void seal() { sealed_ = true; }
    bool sealed() const { return sealed_; }

    size_t size() const { return entries_.size(); }
    size_t result_capacity(fn_id id) const;

    // Runs the function directly, no boundary cost. Throws UnknownFunction.
    size_t dispatch(fn_id id, std::span<const uint8_t> args, std::span<uint8_t> result) const;

  private:
    struct entry {
        host_fn fn;
        size_t max_result_bytes;
    };
    std::vector<entry> entries_;
    bool sealed_ = false;
};

// The simulated enclave boundary: spins transition_cost/2, runs the host
// function, spins the other half, i.e. EEXIT + host processing + EENTER.
call_outcome regular_call(const host_fn_table& table, const boundary_profile& profile,
                          fn_id id, std::span<const uint8_t> args);

} // namespace slrt

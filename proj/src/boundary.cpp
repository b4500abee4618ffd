#include "slrt/boundary.hpp"
#include "slrt/errors.hpp"

namespace slrt {

void host_fn_table::register_host_fn(fn_id id, host_fn fn, size_t max_result_bytes) {
    if (sealed_)
        throw RegistrationAfterStart("register_host_fn(" + std::to_string(id) +
                                     ") after runtime start");
    if (id < entries_.size())
        throw DuplicateId("function id " + std::to_string(id) + " already registered");
    if (id != entries_.size())
        throw ConfigError("function ids must be dense; expected " +
                          std::to_string(entries_.size()) + ", got " + std::to_string(id));
    entries_.push_back({std::move(fn), max_result_bytes});
}

size_t host_fn_table::result_capacity(fn_id id) const {
    if (id >= entries_.size())
        throw UnknownFunction("function id " + std::to_string(id) + " not registered");
    return entries_[id].max_result_bytes;
}

size_t host_fn_table::dispatch(fn_id id, std::span<const uint8_t> args,
                               std::span<uint8_t> result) const {
    if (id >= entries_.size())
        throw UnknownFunction("function id " + std::to_string(id) + " not registered");
    return entries_[id].fn(args, result);
}

call_outcome regular_call(const host_fn_table& table, const boundary_profile& profile,
                          fn_id id, std::span<const uint8_t> args) {
    size_t cap = table.result_capacity(id); // throws UnknownFunction before any charge
    uint64_t start = read_cycles();
    uint64_t half = profile.transition_cost_cycles / 2;

    spin_for_cycles(half);
    call_outcome out;
    out.result.resize(cap);
    size_t len = table.dispatch(id, args, out.result);
    if (len == hostfn_overflow)
        throw ResultTooLarge("host function " + std::to_string(id) +
                             " result exceeds capacity " + std::to_string(cap));
    out.result.resize(len);
    spin_for_cycles(profile.transition_cost_cycles - half);

    out.route = call_route::regular;
    out.cycles_spent = read_cycles() - start;
    return out;
}

} // namespace slrt

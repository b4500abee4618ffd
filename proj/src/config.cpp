#include "slrt/config.hpp"
#include "slrt/errors.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace slrt {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(uint8_t(s[b]))) b++;
    while (e > b && std::isspace(uint8_t(s[e - 1]))) e--;
    return std::string(s.substr(b, e - b));
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw ConfigError("config key " + key + ": expected a non-negative integer, got '" +
                          value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw ConfigError("config key " + key + ": expected 0/1/true/false, got '" + value + "'");
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= value.size()) {
        size_t comma = value.find(',', pos);
        std::string tok =
            trim(value.substr(pos, comma == std::string::npos ? comma : comma - pos));
        if (!tok.empty()) out.push_back(std::move(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string join_counts(const std::vector<uint64_t>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); i++) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

std::vector<uint64_t> parse_count_list(const std::string& key, const std::string& value) {
    std::vector<uint64_t> out;
    if (value.find(',') != std::string::npos) {
        for (const std::string& tok : split_commas(value)) out.push_back(parse_u64(key, tok));
        if (out.empty())
            throw ConfigError("config key " + key + ": empty list");
        return out;
    }
    size_t c1 = value.find(':');
    if (c1 == std::string::npos) return {parse_u64(key, value)};

    size_t c2 = value.find(':', c1 + 1);
    uint64_t lo = parse_u64(key, value.substr(0, c1));
    uint64_t hi, step = 1;
    if (c2 == std::string::npos) {
        hi = parse_u64(key, value.substr(c1 + 1));
    } else {
        hi = parse_u64(key, value.substr(c1 + 1, c2 - c1 - 1));
        step = parse_u64(key, value.substr(c2 + 1));
    }
    if (step == 0) throw ConfigError("config key " + key + ": range step must be > 0");
    if (lo > hi)
        throw ConfigError("config key " + key + ": range start exceeds end in '" + value + "'");
    if ((hi - lo) / step + 1 > 10000)
        throw ConfigError("config key " + key + ": range expands to more than 10000 values");
    for (uint64_t v = lo;; v += step) {
        out.push_back(v);
        if (v > hi - step || v + step > hi) break; // overflow-safe inclusive walk
    }
    return out;
}

std::vector<fn_id> resolve_fn_names(const std::vector<std::string>& tokens,
                                    const std::vector<std::pair<std::string, fn_id>>& names) {
    std::vector<fn_id> out;
    for (const std::string& tok : tokens) {
        bool found = false;
        for (const auto& [name, id] : names) {
            if (tok == name) {
                out.push_back(id);
                found = true;
                break;
            }
        }
        if (found) continue;
        uint64_t id = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
        if (ec != std::errc{} || p != tok.data() + tok.size())
            throw ConfigError("config key switchless_fns: unknown function '" + tok + "'");
        out.push_back(fn_id(id));
    }
    return out;
}

void run_config::apply(const std::string& key, const std::string& value) {
    if (key == "mode") {
        auto m = parse_mode(value);
        if (!m) throw ConfigError("config key mode: expected no_sl/intel/zc, got '" + value + "'");
        mode = *m;
    } else if (key == "workload") {
        if (value != "synthetic" && value != "kv" && value != "dynamic" &&
            value != "copybench" && value != "sweep")
            throw ConfigError("config key workload: unknown workload '" + value + "'");
        workload = value;
    } else if (key == "seed") {
        seed = parse_u64(key, value);
    } else if (key == "out") {
        out = value;
    } else if (key == "out_dir") {
        out_dir = value;
    } else if (key == "config") {
        auto c = parse_synth_cfg(value);
        if (!c) throw ConfigError("config key config: expected C1..C5, got '" + value + "'");
        configuration = *c;
    } else if (key == "n_total") {
        n_total = parse_u64(key, value);
    } else if (key == "g_pauses") {
        g_pauses = parse_count_list(key, value);
    } else if (key == "caller_threads") {
        caller_threads = parse_u64(key, value);
    } else if (key == "num_keys") {
        num_keys = parse_u64(key, value);
    } else if (key == "host_fn_cycles") {
        host_fn_cycles = parse_u64(key, value);
    } else if (key == "tau_ms") {
        tau_ms = parse_u64(key, value);
    } else if (key == "phase_len_ms") {
        phase_len_ms = parse_u64(key, value);
    } else if (key == "base_ops") {
        base_ops = parse_u64(key, value);
    } else if (key == "paper_scale") {
        paper_scale = parse_bool(key, value);
    } else if (key == "copy_reps") {
        copy_reps = parse_u64(key, value);
    } else if (key == "copy_boundary_ops") {
        copy_boundary_ops = parse_u64(key, value);
    } else if (key == "quantum_ms") {
        quantum_ms = parse_u64(key, value);
    } else if (key == "mu_inverse") {
        mu_inverse = parse_u64(key, value);
    } else if (key == "max_workers") {
        max_workers = parse_u64(key, value);
    } else if (key == "pool_capacity_bytes") {
        pool_capacity_bytes = parse_u64(key, value);
    } else if (key == "intel_workers") {
        intel_workers = parse_count_list(key, value);
    } else if (key == "rbf") {
        rbf = parse_u64(key, value);
    } else if (key == "rbs") {
        rbs = parse_u64(key, value);
    } else if (key == "switchless_fns") {
        switchless_fns = split_commas(value);
    } else if (key == "transition_cost_cycles") {
        transition_cost_cycles = parse_u64(key, value);
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

void run_config::apply_paper_scale() {
    if (!paper_scale) return;
    phase_len_ms = 20000;
    copy_boundary_ops = 100000;
}

mode_options run_config::to_mode_options() const {
    mode_options opt;
    opt.mode = mode;
    opt.transition_cost_cycles = transition_cost_cycles;
    opt.host_fn_extra_cycles = host_fn_cycles;
    if (max_workers) opt.zc_max_workers = size_t(*max_workers);
    opt.quantum_ms = quantum_ms;
    opt.mu_inverse = mu_inverse;
    opt.pool_capacity_bytes = size_t(pool_capacity_bytes);
    opt.intel_workers = size_t(intel_workers.front());
    opt.rbf = rbf;
    opt.rbs = rbs;
    return opt;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    size_t lineno = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        lineno++;
        size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        std::string trimmed = trim(line);
        if (!trimmed.empty()) {
            size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + trimmed + "'");
            std::string key = trim(std::string_view(trimmed).substr(0, eq));
            std::string value = trim(std::string_view(trimmed).substr(eq + 1));
            if (key.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            out.emplace_back(std::move(key), std::move(value));
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

run_config load_config_file(const std::string& path, run_config base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not readable: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    for (const auto& [key, value] : parse_config_text(buf.str())) base.apply(key, value);
    return base;
}

std::string serialize_config(const run_config& cfg) {
    std::ostringstream os;
    os << "mode=" << mode_name(cfg.mode) << '\n';
    os << "workload=" << cfg.workload << '\n';
    os << "seed=" << cfg.seed << '\n';
    if (!cfg.out.empty()) os << "out=" << cfg.out << '\n';
    if (!cfg.out_dir.empty()) os << "out_dir=" << cfg.out_dir << '\n';
    os << "config=" << synth_cfg_name(cfg.configuration) << '\n';
    os << "n_total=" << cfg.n_total << '\n';
    os << "g_pauses=" << join_counts(cfg.g_pauses) << '\n';
    os << "caller_threads=" << cfg.caller_threads << '\n';
    os << "num_keys=" << cfg.num_keys << '\n';
    os << "host_fn_cycles=" << cfg.host_fn_cycles << '\n';
    os << "tau_ms=" << cfg.tau_ms << '\n';
    os << "phase_len_ms=" << cfg.phase_len_ms << '\n';
    os << "base_ops=" << cfg.base_ops << '\n';
    os << "paper_scale=" << (cfg.paper_scale ? 1 : 0) << '\n';
    os << "copy_reps=" << cfg.copy_reps << '\n';
    os << "copy_boundary_ops=" << cfg.copy_boundary_ops << '\n';
    os << "quantum_ms=" << cfg.quantum_ms << '\n';
    os << "mu_inverse=" << cfg.mu_inverse << '\n';
    if (cfg.max_workers) os << "max_workers=" << *cfg.max_workers << '\n';
    os << "pool_capacity_bytes=" << cfg.pool_capacity_bytes << '\n';
    os << "intel_workers=" << join_counts(cfg.intel_workers) << '\n';
    os << "rbf=" << cfg.rbf << '\n';
    os << "rbs=" << cfg.rbs << '\n';
    if (!cfg.switchless_fns.empty()) {
        os << "switchless_fns=";
        for (size_t i = 0; i < cfg.switchless_fns.size(); i++) {
            if (i) os << ',';
            os << cfg.switchless_fns[i];
        }
        os << '\n';
    }
    os << "transition_cost_cycles=" << cfg.transition_cost_cycles << '\n';
    return os.str();
}

} // namespace slrt

// SPDX-License-Identifier: Apache-2.0
//
// cfmimo user-centric cell-free massive MIMO downlink simulator
// Copyright (C) 2026 the cfmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "cfmimo/experiment.hpp"

#include "cfmimo/detequiv.hpp"
#include "cfmimo/gradients.hpp"
#include "cfmimo/montecarlo.hpp"
#include "cfmimo/stats.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef CFMIMO_VERSION_STRING
#define CFMIMO_VERSION_STRING "0.0.0"
#endif

namespace cfmimo {

namespace {

const std::vector<std::pair<ExperimentKind, const char*>> kKindNames = {
    {ExperimentKind::de_vs_mc_antennas, "de_vs_mc_antennas"},
    {ExperimentKind::de_vs_mc_users, "de_vs_mc_users"},
    {ExperimentKind::assoc_sweep, "assoc_sweep"},
    {ExperimentKind::reg_sweep, "reg_sweep"},
    {ExperimentKind::deploy_random, "deploy_random"},
    {ExperimentKind::deploy_kmeans, "deploy_kmeans"},
    {ExperimentKind::gradient_check, "gradient_check"},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line,
                             const std::string& what) {
    throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + what);
}

double to_double(const std::string& origin, std::size_t line, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        parse_fail(origin, line, "not a number: '" + v + "'");
    }
    if (used != v.size()) parse_fail(origin, line, "trailing junk in number: '" + v + "'");
    return out;
}

arma::uword to_uword(const std::string& origin, std::size_t line, const std::string& v) {
    const double d = to_double(origin, line, v);
    if (d < 0.0 || d != std::floor(d))
        parse_fail(origin, line, "expected a nonnegative integer, got '" + v + "'");
    return static_cast<arma::uword>(d);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

// one mutable binding per config key keeps load/dump/override in sync
struct KeyBinding {
    const char* section;
    const char* key;
    std::function<void(ExperimentSpec&, const std::string&, std::size_t,
                       const std::string&)> set;
    std::function<std::string(const ExperimentSpec&)> get;
};

std::string fmt_uword(arma::uword v) {
    return std::to_string(static_cast<unsigned long long>(v));
}

std::vector<KeyBinding> key_bindings() {
    auto dbl = [](double SystemConfig::* f) {
        return KeyBinding{nullptr, nullptr,
                          [f](ExperimentSpec& s, const std::string& o, std::size_t ln,
                              const std::string& v) { s.base.*f = to_double(o, ln, v); },
                          [f](const ExperimentSpec& s) { return format_number(s.base.*f); }};
    };
    auto uin = [](arma::uword SystemConfig::* f) {
        return KeyBinding{nullptr, nullptr,
                          [f](ExperimentSpec& s, const std::string& o, std::size_t ln,
                              const std::string& v) { s.base.*f = to_uword(o, ln, v); },
                          [f](const ExperimentSpec& s) { return fmt_uword(s.base.*f); }};
    };
    std::vector<std::pair<const char*, KeyBinding>> sys = {
        {"radius_m", dbl(&SystemConfig::radius_m)},
        {"num_aps", uin(&SystemConfig::num_aps)},
        {"num_users", uin(&SystemConfig::num_users)},
        {"antennas_per_ap", uin(&SystemConfig::antennas_per_ap)},
        {"ap_power_w", dbl(&SystemConfig::ap_power_w)},
        {"noise_dbm", dbl(&SystemConfig::noise_dbm)},
        {"pilot_power_w", dbl(&SystemConfig::pilot_power_w)},
        {"pilot_len", uin(&SystemConfig::pilot_len)},
        {"carrier_hz", dbl(&SystemConfig::carrier_hz)},
        {"ref_dist_m", dbl(&SystemConfig::ref_dist_m)},
        {"pathloss_exp", dbl(&SystemConfig::pathloss_exp)},
        {"reg_param_w", dbl(&SystemConfig::reg_param_w)},
        {"assoc_count", uin(&SystemConfig::assoc_count)},
        {"angular_spread_rad", dbl(&SystemConfig::angular_spread_rad)},
        {"antenna_spacing", dbl(&SystemConfig::antenna_spacing)},
        {"mc_trials", uin(&SystemConfig::mc_trials)},
        {"rng_seed",
         {nullptr, nullptr,
          [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
              s.base.rng_seed = static_cast<std::uint64_t>(to_uword(o, ln, v));
          },
          [](const ExperimentSpec& s) { return std::to_string(s.base.rng_seed); }}},
    };

    std::vector<KeyBinding> out;
    for (auto& [name, b] : sys) {
        KeyBinding kb = b;
        kb.section = "system";
        kb.key = name;
        out.push_back(kb);
    }

    auto push_exp = [&out](const char* key, auto set, auto get) {
        out.push_back(KeyBinding{"experiment", key, set, get});
    };
    push_exp(
        "kind",
        [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
            try {
                s.kind = kind_from_string(v);
            } catch (const std::exception& e) {
                parse_fail(o, ln, e.what());
            }
        },
        [](const ExperimentSpec& s) { return kind_to_string(s.kind); });
    push_exp(
        "values",
        [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
            s.values.clear();
            for (const std::string& p : split_list(v))
                s.values.push_back(to_double(o, ln, p));
        },
        [](const ExperimentSpec& s) {
            std::string v;
            for (std::size_t i = 0; i < s.values.size(); ++i)
                v += (i ? "," : "") + format_number(s.values[i]);
            return v;
        });
    push_exp(
        "seeds",
        [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
            s.seeds.clear();
            for (const std::string& p : split_list(v))
                s.seeds.push_back(static_cast<std::uint64_t>(to_uword(o, ln, p)));
        },
        [](const ExperimentSpec& s) {
            std::string v;
            for (std::size_t i = 0; i < s.seeds.size(); ++i)
                v += (i ? "," : "") + std::to_string(s.seeds[i]);
            return v;
        });
    push_exp(
        "out",
        [](ExperimentSpec& s, const std::string&, std::size_t, const std::string& v) {
            s.out = v;
        },
        [](const ExperimentSpec& s) { return s.out; });
    push_exp(
        "format",
        [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
            if (v != "csv" && v != "json") parse_fail(o, ln, "format must be csv or json");
            s.format = v;
        },
        [](const ExperimentSpec& s) { return s.format; });
    push_exp(
        "exclude_radius_m",
        [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
            s.exclude_radius_m = to_double(o, ln, v);
        },
        [](const ExperimentSpec& s) { return format_number(s.exclude_radius_m); });
    push_exp(
        "fd_step_m",
        [](ExperimentSpec& s, const std::string& o, std::size_t ln, const std::string& v) {
            s.fd_step_m = to_double(o, ln, v);
        },
        [](const ExperimentSpec& s) { return format_number(s.fd_step_m); });
    return out;
}

std::string sanitize_cell(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::all_masked: return "all_masked";
        case StopReason::stalled: return "stalled";
        case StopReason::max_iterations: return "max_iterations";
    }
    return "unknown";
}

void apply_sweep_value(SystemConfig& cfg, ExperimentKind kind, double v) {
    switch (kind) {
        case ExperimentKind::de_vs_mc_antennas:
            cfg.antennas_per_ap = static_cast<arma::uword>(v);
            break;
        case ExperimentKind::de_vs_mc_users:
            cfg.num_users = static_cast<arma::uword>(v);
            break;
        case ExperimentKind::assoc_sweep:
            cfg.assoc_count = static_cast<arma::uword>(v);
            break;
        case ExperimentKind::reg_sweep:
            cfg.reg_param_w = v * cfg.noise_power_w();
            break;
        default:
            break;
    }
}

struct RowClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

// Workers fill pre-indexed slots, so the emitted row order is a function of
// the spec alone, never of completion order. fn(i) must not throw.
void dispatch_rows(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(n, hw);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

void run_approximation_sweep(const ExperimentSpec& spec, ExperimentResult& out) {
    out.table.columns = {"kind",      "sweep_key", "sweep_value", "seed",    "mc_sum_rate",
                         "mc_stderr", "de_sum_rate", "rel_err_pct", "status"};
    const std::string kind_name = kind_to_string(spec.kind);
    const std::string skey = sweep_key_of(spec.kind);
    struct Job {
        double value;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double v : spec.values)
        for (std::uint64_t seed : spec.seeds) jobs.push_back({v, seed});
    out.table.rows.resize(jobs.size());
    out.wall_seconds.resize(jobs.size());
    dispatch_rows(jobs.size(), [&](std::size_t i) {
        RowClock clock;
        std::vector<std::string> row = {kind_name, skey, format_number(jobs[i].value),
                                        std::to_string(jobs[i].seed)};
        try {
            SystemConfig cfg = spec.base;
            apply_sweep_value(cfg, spec.kind, jobs[i].value);
            cfg.rng_seed = jobs[i].seed;
            cfg.validate();
            const Scenario sc = build_scenario(cfg, jobs[i].seed);
            const ChannelStatistics stats = build_statistics(sc);
            const McRateEstimate mc = ergodic_sum_rate(stats, sc.svc, cfg);
            const RateReport de = deterministic_sum_rate(sc, stats);
            const double rel = 100.0 * (de.sum_rate - mc.sum_rate) / mc.sum_rate;
            row.insert(row.end(),
                       {format_number(mc.sum_rate), format_number(mc.std_error),
                        format_number(de.sum_rate), format_number(rel), "ok"});
        } catch (const std::exception& e) {
            row.insert(row.end(), {"", "", "", "", sanitize_cell(e.what())});
        }
        out.table.rows[i] = std::move(row);
        out.wall_seconds[i] = clock.seconds();
    });
}

void run_deployment(const ExperimentSpec& spec, ExperimentResult& out) {
    out.table.columns = {"kind",        "seed",      "initial_sum_rate", "best_sum_rate",
                         "improvement_pct", "iterations", "stop_reason",  "status"};
    const std::string kind_name = kind_to_string(spec.kind);
    const std::size_t n = spec.seeds.size();
    out.table.rows.resize(n);
    out.wall_seconds.resize(n);
    std::vector<std::optional<std::pair<std::string, OptResult>>> trace_slots(n);
    dispatch_rows(n, [&](std::size_t i) {
        RowClock clock;
        const std::uint64_t seed = spec.seeds[i];
        std::vector<std::string> row = {kind_name, std::to_string(seed)};
        try {
            SystemConfig cfg = spec.base;
            cfg.rng_seed = seed;
            cfg.validate();
            const Scenario sc = build_scenario(cfg, seed);
            const Layout init = spec.kind == ExperimentKind::deploy_kmeans
                                    ? kmeans_init(sc.layout.ue_xy, cfg.num_aps, seed)
                                    : sc.layout;
            OptResult res = bbgd_optimize(cfg, init);
            const double imp = 100.0 * (res.best_objective - res.initial_objective) /
                               res.initial_objective;
            row.insert(row.end(),
                       {format_number(res.initial_objective),
                        format_number(res.best_objective), format_number(imp),
                        fmt_uword(res.iterations), stop_reason_name(res.reason), "ok"});
            trace_slots[i] = {"seed" + std::to_string(seed), std::move(res)};
        } catch (const std::exception& e) {
            row.insert(row.end(), {"", "", "", "", "", sanitize_cell(e.what())});
        }
        out.table.rows[i] = std::move(row);
        out.wall_seconds[i] = clock.seconds();
    });
    for (auto& slot : trace_slots)
        if (slot) out.traces.push_back(std::move(*slot));
}

void run_gradient_check(const ExperimentSpec& spec, ExperimentResult& out) {
    out.table.columns = {"kind", "seed",  "ap",       "nearest_ue_m", "excluded", "an_x",
                         "an_y", "fd_x",  "fd_y",     "rel_err",      "cosine",   "status"};
    const std::string kind_name = kind_to_string(spec.kind);
    const std::size_t n = spec.seeds.size();
    std::vector<std::vector<std::vector<std::string>>> rows_by_seed(n);
    std::vector<double> wall_by_seed(n, 0.0);
    dispatch_rows(n, [&](std::size_t si) {
        const std::uint64_t seed = spec.seeds[si];
        RowClock clock;
        std::vector<std::vector<std::string>>& seed_rows = rows_by_seed[si];
        try {
            SystemConfig cfg = spec.base;
            cfg.rng_seed = seed;
            cfg.validate();
            const Scenario sc = build_scenario(cfg, seed);
            const ChannelStatistics stats = build_statistics(sc);
            const DeState de = solve_de(stats, sc.svc, cfg.reg_param());
            const RateReport rep = deterministic_sinr(de, sc.svc, cfg.noise_power_w());
            const GradientReport an = sum_rate_gradient(sc, stats, de, rep);
            const GradientReport fd = fd_gradient(sc, spec.fd_step_m);
            for (arma::uword l = 0; l < cfg.num_aps; ++l) {
                double nearest = arma::datum::inf;
                for (arma::uword k = 0; k < cfg.num_users; ++k)
                    nearest = std::min(nearest,
                                       arma::norm(sc.layout.ap_xy.row(l) -
                                                      sc.layout.ue_xy.row(k), 2));
                const arma::rowvec a = an.grad_xy.row(l);
                const arma::rowvec f = fd.grad_xy.row(l);
                const double fn = arma::norm(f, 2);
                const double anorm = arma::norm(a, 2);
                const double rel = arma::norm(a - f, 2) / std::max(fn, 1e-300);
                const double cosine =
                    fn > 0.0 && anorm > 0.0 ? arma::dot(a, f) / (fn * anorm) : 0.0;
                seed_rows.push_back(
                    {kind_name, std::to_string(seed), fmt_uword(l), format_number(nearest),
                     nearest < spec.exclude_radius_m ? "1" : "0", format_number(a(0)),
                     format_number(a(1)), format_number(f(0)), format_number(f(1)),
                     format_number(rel), format_number(cosine), "ok"});
            }
        } catch (const std::exception& e) {
            seed_rows.push_back({kind_name, std::to_string(seed), "", "", "", "", "", "",
                                 "", "", "", sanitize_cell(e.what())});
        }
        wall_by_seed[si] = clock.seconds();
    });
    for (std::size_t si = 0; si < n; ++si) {
        // one solve covers every AP row; spread the cost so totals stay honest
        const double per_row =
            wall_by_seed[si] / static_cast<double>(rows_by_seed[si].size());
        for (auto& row : rows_by_seed[si]) {
            out.table.rows.push_back(std::move(row));
            out.wall_seconds.push_back(per_row);
        }
    }
}

// cells are stored pre-formatted; recover int/double typing for JSON output
nlohmann::ordered_json cell_to_json(const std::string& s) {
    if (!s.empty()) {
        std::size_t used = 0;
        try {
            const long long i = std::stoll(s, &used);
            if (used == s.size()) return i;
        } catch (const std::exception&) {
        }
        used = 0;
        try {
            const double d = std::stod(s, &used);
            if (used == s.size()) return d;
        } catch (const std::exception&) {
        }
    }
    return s;
}

} // namespace

ExperimentKind kind_from_string(const std::string& name) {
    for (auto& [k, n] : kKindNames)
        if (name == n) return k;
    std::string known;
    for (auto& [k, n] : kKindNames) known += std::string(known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown experiment kind '" + name + "' (known: " + known +
                                ")");
}

std::string kind_to_string(ExperimentKind kind) {
    for (auto& [k, n] : kKindNames)
        if (k == kind) return n;
    return "unknown";
}

std::string sweep_key_of(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::de_vs_mc_antennas: return "antennas_per_ap";
        case ExperimentKind::de_vs_mc_users: return "num_users";
        case ExperimentKind::assoc_sweep: return "assoc_count";
        case ExperimentKind::reg_sweep: return "reg_scale";
        default: return "";
    }
}

void ExperimentSpec::validate() const {
    base.validate();
    const bool sweep = !sweep_key_of(kind).empty();
    if (sweep && values.empty())
        throw std::invalid_argument("experiment: 'values' is required for kind " +
                                    kind_to_string(kind));
    if (!sweep && !values.empty())
        throw std::invalid_argument("experiment: 'values' is not applicable to kind " +
                                    kind_to_string(kind));
    if (seeds.empty()) throw std::invalid_argument("experiment: 'seeds' must be nonempty");
    if (format != "csv" && format != "json")
        throw std::invalid_argument("experiment: format must be csv or json");
    if (kind != ExperimentKind::reg_sweep)
        for (double v : values)
            if (v != std::floor(v) || v <= 0.0)
                throw std::invalid_argument(
                    "experiment: sweep values must be positive integers for kind " +
                    kind_to_string(kind));
    if (!(fd_step_m > 0.0))
        throw std::invalid_argument("experiment: fd_step_m must be positive");
    if (exclude_radius_m < 0.0)
        throw std::invalid_argument("experiment: exclude_radius_m must be nonnegative");
}

ExperimentSpec parse_config(const std::string& text, const std::string& origin) {
    ExperimentSpec spec;
    const std::vector<KeyBinding> bindings = key_bindings();
    std::map<std::string, bool> seen;
    bool have_kind = false;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') parse_fail(origin, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "experiment")
                parse_fail(origin, line_no, "unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(origin, line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) parse_fail(origin, line_no, "key outside any section");

        const KeyBinding* found = nullptr;
        for (const KeyBinding& b : bindings)
            if (section == b.section && key == b.key) found = &b;
        if (found == nullptr)
            parse_fail(origin, line_no, "unknown key '" + key + "' in [" + section + "]");
        const std::string full = section + "." + key;
        if (seen[full]) parse_fail(origin, line_no, "duplicate key '" + key + "'");
        seen[full] = true;
        found->set(spec, origin, line_no, value);
        if (full == "experiment.kind") have_kind = true;
    }
    if (!have_kind)
        throw std::invalid_argument(origin + ": missing required key 'kind' in [experiment]");
    spec.validate();
    return spec;
}

ExperimentSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string dump_config(const ExperimentSpec& spec) {
    std::string out;
    std::string section;
    for (const KeyBinding& b : key_bindings()) {
        const std::string value = b.get(spec);
        // keys with no content are omitted so the dump reloads cleanly
        if (value.empty()) continue;
        if (section != b.section) {
            section = b.section;
            if (!out.empty()) out += "\n";
            out += "[" + section + "]\n";
        }
        out += std::string(b.key) + " = " + value + "\n";
    }
    return out;
}

void apply_override(ExperimentSpec& spec, const std::string& key,
                    const std::string& value) {
    for (const KeyBinding& b : key_bindings()) {
        if (key == b.key) {
            b.set(spec, "<override>", 0, value);
            return;
        }
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

std::uint64_t config_hash(const ExperimentSpec& spec) {
    const std::string dump = dump_config(spec);
    std::uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string code_version() { return CFMIMO_VERSION_STRING; }

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult out;
    switch (spec.kind) {
        case ExperimentKind::de_vs_mc_antennas:
        case ExperimentKind::de_vs_mc_users:
        case ExperimentKind::assoc_sweep:
        case ExperimentKind::reg_sweep:
            run_approximation_sweep(spec, out);
            break;
        case ExperimentKind::deploy_random:
        case ExperimentKind::deploy_kmeans:
            run_deployment(spec, out);
            break;
        case ExperimentKind::gradient_check:
            run_gradient_check(spec, out);
            break;
    }
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(spec)));
    std::string seeds;
    for (std::size_t i = 0; i < spec.seeds.size(); ++i)
        seeds += (i ? ";" : "") + std::to_string(spec.seeds[i]);
    out.table.metadata = {{"config_hash", hash_hex},
                          {"seeds", seeds},
                          {"version", code_version()}};
    return out;
}

void emit_results(const ResultTable& table, std::ostream& os, const std::string& format) {
    if (format == "csv") {
        for (const auto& [k, v] : table.metadata) os << "# " << k << " = " << v << "\n";
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            os << (c ? "," : "") << table.columns[c];
        os << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
            os << "\n";
        }
    } else if (format == "json") {
        nlohmann::ordered_json doc;
        doc["metadata"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : table.metadata) doc["metadata"][k] = v;
        doc["columns"] = table.columns;
        doc["rows"] = nlohmann::ordered_json::array();
        for (const auto& row : table.rows) {
            nlohmann::ordered_json jrow = nlohmann::ordered_json::array();
            for (const std::string& cell : row) jrow.push_back(cell_to_json(cell));
            doc["rows"].push_back(std::move(jrow));
        }
        os << doc.dump(2) << "\n";
    } else {
        throw std::invalid_argument("emit_results: format must be csv or json");
    }
}

void emit_results(const ResultTable& table, const std::string& path,
                  const std::string& format) {
    std::ofstream os(path, std::ios::binary); // binary: stable newlines everywhere
    if (!os) throw std::runtime_error("emit_results: cannot open " + path);
    emit_results(table, os, format);
}

} // namespace cfmimo

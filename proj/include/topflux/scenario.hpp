// Copyright 2026 The topflux Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scenario runner behind the command-line tool: configuration parsing and
// validation, scenario execution, JSON/CSV result documents.
//
// Config files are JSON objects with flat numeric keys plus an optional
// one-level "scan" object. Energies are given in cyclic GHz and converted to
// rad/ns here.

#pragma once

#include <algorithm>
#include <chrono>
#include <exception>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "topflux/analysis.hpp"
#include "topflux/dynamics.hpp"
#include "topflux/fluxmodel.hpp"
#include "topflux/protocols.hpp"

namespace topflux::cli {

using Json = nlohmann::ordered_json;

/// Configuration problem; key() names the offending key.
class ConfigError : public Error {
   public:
    ConfigError(std::string key, const std::string &message)
        : Error(key.empty() ? message : "config key '" + key + "': " + message), key_(std::move(key)) {
    }
    const std::string &key() const {
        return key_;
    }

   private:
    std::string key_;
};

enum class OutputFormat { json, csv, both };

inline const char *to_string(OutputFormat f) {
    switch (f) {
        case OutputFormat::json:
            return "json";
        case OutputFormat::csv:
            return "csv";
        default:
            return "both";
    }
}

inline OutputFormat parse_format(const std::string &s) {
    if (s == "json") {
        return OutputFormat::json;
    }
    if (s == "csv") {
        return OutputFormat::csv;
    }
    if (s == "both") {
        return OutputFormat::both;
    }
    throw ConfigError("format", "expected json, csv or both, got '" + s + "'");
}

struct KeyInfo {
    std::string name;
    double default_value;
    std::string help;
};

struct ScanDefault {
    std::string key;
    double start;
    double stop;
    int count;
    bool log;
};

struct ScenarioInfo {
    std::string name;
    std::string summary;
    std::vector<KeyInfo> keys;
    std::vector<std::string> scan_keys;
    std::optional<ScanDefault> default_scan;
    double suggested_delta_max_ghz;
};

namespace detail {

inline const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

inline std::vector<KeyInfo> amplitude_keys(const std::string &what) {
    return {{"a_re", kInvSqrt2, "Re a, " + what},
            {"a_im", 0.0, "Im a"},
            {"b_re", kInvSqrt2, "Re b"},
            {"b_im", 0.0, "Im b"}};
}

inline std::vector<KeyInfo> join(std::vector<KeyInfo> a, const std::vector<KeyInfo> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace detail

/// Keys accepted by every scenario besides its own.
inline const std::vector<KeyInfo> &common_keys() {
    static const std::vector<KeyInfo> keys{
        {"tol", 1e-8, "solver tolerance on the final state (2-norm)"},
        {"threads", 0, "worker threads for runs and scans, 0 = hardware concurrency"},
    };
    return keys;
}

inline const std::vector<ScenarioInfo> &scenarios() {
    using detail::amplitude_keys;
    using detail::join;
    static const std::vector<ScenarioInfo> all{
        {"phase-gate",
         "sudden-switch phase gate on the topological qubit",
         join({{"epsilon_over_delta", 10, "flux bias |eps| / Delta_max"},
               {"theta_target", kPi / 4, "target relative phase, rad"}},
              amplitude_keys("topological state a|0> + b|1>")),
         {"epsilon_over_delta", "theta_target"},
         std::nullopt,
         1.0},
        {"write",
         "flux qubit -> topological qubit transfer through a Landau-Zener CNOT",
         join({{"epsilon_over_delta", 2, "sweep endpoints -/+ eps, in units of Delta_max"},
               {"sweep_ns", 10, "Landau-Zener sweep duration"},
               {"ramp_ns", 3, "smooth q_ext ramp duration, 0 = sudden"},
               {"runs", 10000, "sampled measurement runs"}},
              amplitude_keys("flux state a|g> + b|e>")),
         {},
         std::nullopt,
         1.0},
        {"read",
         "topological qubit -> flux qubit 2 through the top-flux-flux chain",
         join({{"epsilon_over_delta", 10, "point A at eps_A = -epsilon_over_delta * Delta_1, B mirrored"},
               {"sweep_ns", 20, "total sweep time, split evenly A -> crossing -> B"},
               {"ramp_ns", 3, "smooth q_ext ramp duration at A and B, 0 = sudden"},
               {"omega_ghz", 0.025, "coupler oscillation frequency Omega"},
               {"delta2_over_delta1", 0.7, "qubit-2 splitting over Delta_1"},
               {"runs", 1000, "sampled measurement runs"}},
              amplitude_keys("topological state a|0> + b|1>")),
         {},
         std::nullopt,
         2.0},
        {"lz-scan",
         "Landau-Zener probability, simulation against the closed form",
         {{"epsilon_over_delta", 10, "sweep endpoints -/+ eps, in units of Delta_max"},
          {"sweep_ns", 1, "sweep duration when no scan is given"}},
         {"sweep_ns", "epsilon_over_delta"},
         ScanDefault{"sweep_ns", 0.01, 10.0, 20, true},
         1.0},
        {"sweep-time",
         "minimum sweep time and diabatic error at a chosen sweep time",
         {{"epsilon_over_delta", 2, "sweep endpoints -/+ eps, in units of Delta_max"},
          {"exponent", 1, "target Landau-Zener exponent"},
          {"sweep_ns", 10, "sweep time at which the diabatic error is evaluated"},
          {"span_over_delta", 80, "simulated span -/+ span * Delta_max at the same rate, 0 = skip"}},
         {"sweep_ns", "epsilon_over_delta", "exponent"},
         std::nullopt,
         1.0},
        {"decoupling-compare",
         "charge decoupling (q_ext = 1/2) against bias decoupling (|eps| >> Delta_max)",
         {{"epsilon_over_delta", 10, "flux bias |eps| / Delta_max"}, {"idle_ns", 100, "idle time"}},
         {"epsilon_over_delta", "idle_ns"},
         ScanDefault{"epsilon_over_delta", 1.0, 100.0, 9, true},
         1.0},
    };
    return all;
}

inline const ScenarioInfo &scenario_info(const std::string &name) {
    for (const auto &s : scenarios()) {
        if (s.name == name) {
            return s;
        }
    }
    throw ConfigError("scenario", "unknown scenario '" + name + "'");
}

struct Scan {
    std::string key;
    std::vector<double> values;
};

struct ScenarioConfig {
    std::string scenario;
    std::map<std::string, double> params;  ///< every numeric key, defaults filled in
    std::uint64_t seed = 0;
    OutputFormat format = OutputFormat::json;
    std::optional<Scan> scan;
    std::vector<std::string> warnings;

    double get(const std::string &key) const {
        auto it = params.find(key);
        if (it == params.end()) {
            throw ConfigError(key, "not defined for scenario " + scenario);
        }
        return it->second;
    }

    double delta_max() const {
        return ghz(get("delta_max_ghz"));
    }

    cplx a() const {
        return {get("a_re"), get("a_im")};
    }
    cplx b() const {
        return {get("b_re"), get("b_im")};
    }

    /// Resolved configuration; parse_config(to_json()) reproduces this config.
    Json to_json() const {
        Json j;
        j["scenario"] = scenario;
        j["delta_max_ghz"] = get("delta_max_ghz");
        const auto &info = scenario_info(scenario);
        for (const auto &k : info.keys) {
            j[k.name] = get(k.name);
        }
        for (const auto &k : common_keys()) {
            j[k.name] = get(k.name);
        }
        j["seed"] = seed;
        j["format"] = to_string(format);
        if (scan) {
            j["scan"] = Json{{"key", scan->key}, {"values", scan->values}};
        }
        return j;
    }

    bool operator==(const ScenarioConfig &o) const {
        const bool scans_equal = scan.has_value() == o.scan.has_value() &&
                                 (!scan || (scan->key == o.scan->key && scan->values == o.scan->values));
        return scenario == o.scenario && params == o.params && seed == o.seed && format == o.format && scans_equal;
    }
};

namespace detail {

inline double number_at(const Json &j, const std::string &key) {
    if (!j.is_number()) {
        throw ConfigError(key, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(key, "must be finite");
    }
    return v;
}

inline Scan parse_scan(const Json &j, const ScenarioInfo &info) {
    if (!j.is_object()) {
        throw ConfigError("scan", "expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::vector<std::string> allowed{"key", "values", "start", "stop", "count", "spacing"};
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("scan." + it.key(), "unknown scan field");
        }
        if (it.value().is_object()) {
            throw ConfigError("scan." + it.key(), "only one level of nesting is allowed");
        }
    }
    if (!j.contains("key") || !j["key"].is_string()) {
        throw ConfigError("scan.key", "missing or not a string");
    }
    Scan s;
    s.key = j["key"].get<std::string>();
    if (std::find(info.scan_keys.begin(), info.scan_keys.end(), s.key) == info.scan_keys.end()) {
        throw ConfigError("scan.key", "'" + s.key + "' cannot be scanned in scenario " + info.name);
    }
    if (j.contains("values")) {
        if (!j["values"].is_array() || j["values"].empty()) {
            throw ConfigError("scan.values", "expected a non-empty array");
        }
        for (const auto &v : j["values"]) {
            s.values.push_back(number_at(v, "scan.values"));
        }
        return s;
    }
    for (const char *k : {"start", "stop", "count"}) {
        if (!j.contains(k)) {
            throw ConfigError(std::string("scan.") + k, "missing (or give scan.values)");
        }
    }
    const double start = number_at(j["start"], "scan.start");
    const double stop = number_at(j["stop"], "scan.stop");
    const double count_d = number_at(j["count"], "scan.count");
    if (count_d < 1 || count_d != std::floor(count_d) || count_d > 100000) {
        throw ConfigError("scan.count", "expected an integer in [1, 100000]");
    }
    const int count = static_cast<int>(count_d);
    const std::string spacing = j.value("spacing", std::string("linear"));
    if (spacing != "linear" && spacing != "log") {
        throw ConfigError("scan.spacing", "expected linear or log");
    }
    if (spacing == "log" && !(start > 0 && stop > 0)) {
        throw ConfigError("scan.start", "log spacing needs positive endpoints");
    }
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        s.values.push_back(spacing == "log" ? start * std::pow(stop / start, f) : start + (stop - start) * f);
    }
    return s;
}

inline void require_range(const ScenarioConfig &c, const std::string &key, bool ok, const std::string &what) {
    if (c.params.count(key) && !ok) {
        throw ConfigError(key, what);
    }
}

inline bool is_count(double v) {
    return v >= 0 && v == std::floor(v) && v <= 9007199254740992.0;
}

/// Range checks on one set of values (run again for every scan point).
inline void validate_values(const ScenarioConfig &c, const std::map<std::string, double> &p, const std::string &name) {
    auto has = [&](const char *k) { return p.count(k) > 0; };
    auto v = [&](const char *k) { return p.at(k); };
    auto fail = [&](const std::string &k, const std::string &msg) { throw ConfigError(k, msg); };
    if (!(v("delta_max_ghz") > 0)) {
        fail("delta_max_ghz", "must be positive");
    }
    if (!(v("tol") > 0 && v("tol") < 1)) {
        fail("tol", "must lie in (0, 1)");
    }
    if (!is_count(v("threads"))) {
        fail("threads", "must be a non-negative integer");
    }
    if (has("runs") && (!is_count(v("runs")) || v("runs") < 1)) {
        fail("runs", "must be a positive integer");
    }
    for (const char *k : {"sweep_ns", "omega_ghz", "delta2_over_delta1", "exponent"}) {
        if (has(k) && !(v(k) > 0)) {
            fail(k, "must be positive");
        }
    }
    for (const char *k : {"ramp_ns", "idle_ns", "span_over_delta", "theta_target"}) {
        if (has(k) && !(v(k) >= 0)) {
            fail(k, "must be non-negative");
        }
    }
    const double eps = v("epsilon_over_delta");
    if (name == "write" && !(eps > 1)) {
        fail("epsilon_over_delta", "the write sweep needs |eps| > Delta_max");
    }
    if (name == "read" && !(eps >= 10)) {
        fail("epsilon_over_delta", "point A needs |eps_A| >= 10 Delta_1");
    }
    if (!(eps > 0)) {
        fail("epsilon_over_delta", "must be positive");
    }
    if (name == "read" && v("delta2_over_delta1") == 1.0) {
        fail("delta2_over_delta1", "Delta_2 must differ from Delta_1");
    }
    if (name == "sweep-time" && v("span_over_delta") > 0 && v("span_over_delta") < v("epsilon_over_delta")) {
        fail("span_over_delta", "must be 0 or at least epsilon_over_delta");
    }
    (void)c;
}

}  // namespace detail

/// Applies `key=value` overrides. Values parse as JSON when possible and as
/// strings otherwise; `scan.field=value` edits the scan object.
inline Json apply_overrides(Json doc, const std::vector<std::string> &overrides) {
    for (const auto &o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError(o, "override must look like key=value");
        }
        const std::string key = o.substr(0, eq);
        const std::string text = o.substr(eq + 1);
        Json value = Json::parse(text, nullptr, false);
        if (value.is_discarded()) {
            value = text;
        }
        const auto dot = key.find('.');
        if (dot == std::string::npos) {
            doc[key] = value;
        } else {
            const std::string outer = key.substr(0, dot);
            if (outer != "scan" || key.find('.', dot + 1) != std::string::npos) {
                throw ConfigError(key, "only scan.<field> may be nested");
            }
            if (!doc.contains("scan") || !doc["scan"].is_object()) {
                doc["scan"] = Json::object();
            }
            doc["scan"][key.substr(dot + 1)] = value;
        }
    }
    return doc;
}

inline ScenarioConfig parse_config(const Json &doc) {
    if (!doc.is_object()) {
        throw ConfigError("", "config must be a JSON object");
    }
    if (!doc.contains("scenario")) {
        throw ConfigError("scenario", "missing required key");
    }
    if (!doc["scenario"].is_string()) {
        throw ConfigError("scenario", "expected a string");
    }
    ScenarioConfig c;
    c.scenario = doc["scenario"].get<std::string>();
    const ScenarioInfo &info = scenario_info(c.scenario);

    if (!doc.contains("delta_max_ghz")) {
        throw ConfigError("delta_max_ghz", "missing required key");
    }
    for (const auto &k : info.keys) {
        c.params[k.name] = k.default_value;
    }
    for (const auto &k : common_keys()) {
        c.params[k.name] = k.default_value;
    }
    c.params["delta_max_ghz"] = 0.0;

    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string &key = it.key();
        if (key == "scenario") {
            continue;
        }
        if (key == "seed") {
            const Json &s = it.value();
            if (s.is_number_unsigned()) {
                c.seed = s.get<std::uint64_t>();
            } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
                c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
            } else {
                throw ConfigError("seed", "expected a non-negative 64-bit integer");
            }
        } else if (key == "format") {
            if (!it.value().is_string()) {
                throw ConfigError("format", "expected a string");
            }
            c.format = parse_format(it.value().get<std::string>());
        } else if (key == "scan") {
            if (!it.value().is_null()) {
                c.scan = detail::parse_scan(it.value(), info);
            }
        } else if (c.params.count(key)) {
            if (it.value().is_object() || it.value().is_array()) {
                throw ConfigError(key, "expected a number");
            }
            c.params[key] = detail::number_at(it.value(), key);
        } else {
            throw ConfigError(key, "unknown key for scenario " + c.scenario);
        }
    }
    if (!doc.contains("scan") && info.default_scan) {
        const auto &d = *info.default_scan;
        Json j{{"key", d.key}, {"start", d.start}, {"stop", d.stop}, {"count", d.count},
               {"spacing", d.log ? "log" : "linear"}};
        c.scan = detail::parse_scan(j, info);
    }

    detail::validate_values(c, c.params, c.scenario);
    if (c.scan) {
        for (double v : c.scan->values) {
            auto p = c.params;
            p[c.scan->key] = v;
            try {
                detail::validate_values(c, p, c.scenario);
            } catch (const ConfigError &e) {
                throw ConfigError("scan.values", std::string("scan point rejected: ") + e.what());
            }
        }
    }

    if (c.params.count("a_re")) {
        const double n = std::norm(c.a()) + std::norm(c.b());
        if (std::abs(n - 1.0) >= 1e-6) {
            throw ConfigError("a_re", "amplitudes a, b must satisfy |a|^2 + |b|^2 = 1 (got " + std::to_string(n) + ")");
        }
        if (std::abs(n - 1.0) > 4 * std::numeric_limits<double>::epsilon()) {
            const double s = 1.0 / std::sqrt(n);
            for (const char *k : {"a_re", "a_im", "b_re", "b_im"}) {
                c.params[k] *= s;
            }
            char buf[128];
            std::snprintf(buf, sizeof buf, "amplitudes renormalized (|a|^2 + |b|^2 was %.17g)", n);
            c.warnings.emplace_back(buf);
        }
    }
    return c;
}

inline ScenarioConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides = {}) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot read config file " + path.string());
    }
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw ConfigError("", "config file " + path.string() + " is not valid JSON");
    }
    return parse_config(apply_overrides(std::move(doc), overrides));
}

// ---------------------------------------------------------------------------
// Results

/// One CSV row / JSON row object with a fixed column order.
using Row = std::vector<std::pair<std::string, double>>;

struct ResultRecord {
    ScenarioConfig config;
    Json summary = Json::object();
    std::vector<Row> rows;
    Json outcomes;  ///< per-run outcomes, null when the scenario has none
    std::vector<std::string> notes;
    double wall_clock_s = 0.0;

    Json to_json() const {
        Json j;
        j["scenario"] = config.scenario;
        j["config"] = config.to_json();
        j["summary"] = summary;
        Json rs = Json::array();
        for (const auto &r : rows) {
            Json o;
            for (const auto &[k, v] : r) {
                o[k] = v;
            }
            rs.push_back(std::move(o));
        }
        j["rows"] = std::move(rs);
        if (!outcomes.is_null()) {
            j["outcomes"] = outcomes;
        }
        j["warnings"] = config.warnings;
        j["notes"] = notes;
        j["wall_clock_s"] = wall_clock_s;
        return j;
    }
};

inline std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        out += ch;
        if (ch == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Header plus one line per row, CRLF-free, 17 significant digits.
inline std::string to_csv(const std::vector<Row> &rows) {
    std::ostringstream out;
    if (rows.empty()) {
        return {};
    }
    for (size_t i = 0; i < rows[0].size(); ++i) {
        out << (i ? "," : "") << csv_field(rows[0][i].first);
    }
    out << '\n';
    for (const auto &r : rows) {
        for (size_t i = 0; i < r.size(); ++i) {
            out << (i ? "," : "") << format_double(r[i].second);
        }
        out << '\n';
    }
    return out.str();
}

/// Runs fn(0..n-1) on a worker pool; results keep index order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)> &fn) {
    std::vector<std::optional<T>> slots(n);
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::exception_ptr failure;
    std::mutex m;
    auto work = [&](unsigned w) {
        for (std::size_t k = w; k < n; k += threads) {
            try {
                slots[k] = fn(k);
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!failure) {
                    failure = std::current_exception();
                }
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < threads; ++w) {
        pool.emplace_back(work, w);
    }
    work(0);
    for (auto &t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    std::vector<T> out;
    out.reserve(n);
    for (auto &s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

namespace detail {

inline EvolveOptions solver(const std::map<std::string, double> &p) {
    EvolveOptions o;
    o.tol = p.at("tol");
    return o;
}

inline unsigned threads(const ScenarioConfig &c) {
    return static_cast<unsigned>(c.get("threads"));
}

using Params = std::map<std::string, double>;

inline Row phase_gate_row(const Params &p) {
    const double d = ghz(p.at("delta_max_ghz"));
    const double eps = p.at("epsilon_over_delta") * d;
    const ProtocolRecord r = phase_gate_protocol(FluxParams::at_epsilon(d, eps, 0.5), p.at("theta_target"),
                                                 {cplx(p.at("a_re"), p.at("a_im")), cplx(p.at("b_re"), p.at("b_im"))});
    return {{"epsilon_over_delta", p.at("epsilon_over_delta")},
            {"theta_target", p.at("theta_target")},
            {"phase_rate", r.metrics.at("phase_rate")},
            {"hold_ns", r.metrics.at("hold_ns")},
            {"phase", r.metrics.at("phase")},
            {"phase_error", r.metrics.at("phase_error")},
            {"leakage", r.leakage},
            {"residual_excitation", r.metrics.at("residual_excitation")},
            {"fidelity_raw", r.fidelity_raw},
            {"fidelity_phase_corrected", r.fidelity_corrected}};
}

inline Row lz_row(const Params &p) {
    const double d = ghz(p.at("delta_max_ghz"));
    const double eps = p.at("epsilon_over_delta") * d;
    const SweepSchedule s{-eps, eps, p.at("sweep_ns"), SweepShape::linear};
    const SweepResult sim = simulate_sweep(d, s, solver(p));
    const double analytic = lz_probability(d, s.velocity());
    return {{"sweep_ns", s.duration},
            {"v", s.velocity()},
            {"p_analytic", analytic},
            {"p_simulated", sim.probability},
            {"abs_error", std::abs(sim.probability - analytic)}};
}

inline Row sweep_time_row(const Params &p) {
    const double d = ghz(p.at("delta_max_ghz"));
    const double eps = p.at("epsilon_over_delta") * d;
    const double t = p.at("sweep_ns");
    const double v = 2.0 * eps / t;
    const double analytic = lz_probability(d, v);
    double simulated = std::numeric_limits<double>::quiet_NaN();
    double span_ns = 0.0;
    const double span = p.at("span_over_delta");
    if (span > 0) {
        span_ns = 2.0 * span * d / v;
        simulated = simulate_sweep(d, {-span * d, span * d, span_ns, SweepShape::linear}, solver(p)).probability;
    }
    return {{"epsilon_over_delta", p.at("epsilon_over_delta")},
            {"exponent", p.at("exponent")},
            {"min_sweep_ns", min_sweep_time(d, eps, p.at("exponent"))},
            {"sweep_ns", t},
            {"v", v},
            {"lz_exponent", lz_exponent(d, v)},
            {"p_analytic", analytic},
            {"span_over_delta", span},
            {"simulated_sweep_ns", span_ns},
            {"p_simulated", simulated}};
}

inline Row decoupling_row(const Params &p) {
    const double d = ghz(p.at("delta_max_ghz"));
    const double eps = p.at("epsilon_over_delta") * d;
    const double t = p.at("idle_ns");
    const FluxParams fp = FluxParams::at_epsilon(d, eps, 0.5);
    const DecouplingComparison cmp = decoupling_comparison(fp, t);
    return {{"epsilon_over_delta", p.at("epsilon_over_delta")},
            {"idle_ns", t},
            {"charge_residual_gap", cmp.charge.residual_gap},
            {"charge_idle_phase", idle_relative_phase(fp, t)},
            {"bias_residual_gap", cmp.bias.residual_gap},
            {"bias_first_order_gap", cmp.bias.first_order_gap},
            {"bias_spurious_phase", cmp.bias.spurious_phase}};
}

inline Json branch_json(const std::vector<BranchRecord> &branches) {
    Json out = Json::array();
    for (const auto &b : branches) {
        out.push_back(Json{{"outcome", b.label},
                           {"probability", b.probability},
                           {"fidelity_raw", b.fidelity_raw},
                           {"fidelity_phase_corrected", b.fidelity_corrected},
                           {"correction_angles", b.correction_angles}});
    }
    return out;
}

inline Json events_json(const std::vector<ProtocolEvent> &events) {
    Json out = Json::array();
    for (const auto &e : events) {
        out.push_back(Json{{"t_ns", e.time}, {"duration_ns", e.duration}, {"kind", e.kind}, {"detail", e.detail}});
    }
    return out;
}

struct RunStats {
    std::string sequence;
    std::map<std::string, long> counts;
    double mean_raw = 0.0;
    double mean_corrected = 0.0;
};

/// Sampled runs 0..runs-1 of a protocol; run k draws from RunRng(seed, k).
inline RunStats sampled_runs(const std::function<ProtocolRecord(std::uint64_t)> &run, std::size_t runs,
                             unsigned threads) {
    struct One {
        std::string label;
        double raw, corrected;
    };
    auto all = parallel_map<One>(runs, threads, [&](std::size_t k) {
        ProtocolRecord r = run(k);
        const auto &b = r.branches.at(static_cast<size_t>(r.outcomes.at(0)));
        return One{b.label, r.fidelity_raw, r.fidelity_corrected};
    });
    RunStats s;
    for (const auto &o : all) {
        s.sequence += o.label;
        s.counts[o.label] += 1;
        s.mean_raw += o.raw;
        s.mean_corrected += o.corrected;
    }
    s.mean_raw /= static_cast<double>(runs);
    s.mean_corrected /= static_cast<double>(runs);
    return s;
}

inline void put_stats(ResultRecord &rec, const RunStats &s, std::size_t runs,
                      const std::vector<std::string> &labels) {
    Json freq = Json::object();
    Json counts = Json::object();
    for (const auto &l : labels) {
        const long n = s.counts.count(l) ? s.counts.at(l) : 0;
        counts[l] = n;
        freq[l] = static_cast<double>(n) / static_cast<double>(runs);
    }
    rec.outcomes = Json{{"runs", runs}, {"counts", counts}, {"sequence", s.sequence}};
    rec.summary["outcome_frequencies"] = freq;
    rec.summary["mean_fidelity_raw"] = s.mean_raw;
    rec.summary["mean_fidelity_phase_corrected"] = s.mean_corrected;
}

inline void run_write(const ScenarioConfig &c, ResultRecord &rec) {
    const double d = c.delta_max();
    const double eps = c.get("epsilon_over_delta") * d;
    const SweepSchedule s{-eps, eps, c.get("sweep_ns"), SweepShape::linear};
    WriteOptions opts;
    opts.ramp_ns = c.get("ramp_ns");
    opts.solver = solver(c.params);
    const WriteProtocol w(d, s, opts);
    const ProtocolRecord both = w.run(c.a(), c.b(), {c.seed, MeasurementModel::Mode::both_branches});
    rec.summary["fidelity_raw"] = both.fidelity_raw;
    rec.summary["fidelity_phase_corrected"] = both.fidelity_corrected;
    rec.summary["lz_analytic"] = both.metrics.at("lz_analytic");
    rec.summary["sweep_transition_even"] = both.metrics.at("sweep_transition_even");
    rec.summary["sweep_transition_odd"] = both.metrics.at("sweep_transition_odd");
    rec.summary["velocity"] = both.metrics.at("velocity");
    rec.summary["total_ns"] = both.metrics.at("total_ns");
    rec.summary["branches"] = branch_json(both.branches);
    rec.summary["events"] = events_json(both.events);

    const auto runs = static_cast<std::size_t>(c.get("runs"));
    const RunStats st = sampled_runs(
        [&](std::uint64_t k) { return w.run(c.a(), c.b(), {c.seed, MeasurementModel::Mode::sampled}, k); }, runs,
        threads(c));
    put_stats(rec, st, runs, {"g", "e"});
    rec.rows.push_back({{"epsilon_over_delta", c.get("epsilon_over_delta")},
                        {"sweep_ns", s.duration},
                        {"fidelity_raw", both.fidelity_raw},
                        {"fidelity_phase_corrected", both.fidelity_corrected},
                        {"p_g", both.branches[0].probability},
                        {"p_e", both.branches[1].probability},
                        {"lz_analytic", both.metrics.at("lz_analytic")},
                        {"sweep_transition_even", both.metrics.at("sweep_transition_even")}});
}

inline void run_read(const ScenarioConfig &c, ResultRecord &rec) {
    const double d1 = c.delta_max();
    const double eps_a = -c.get("epsilon_over_delta") * d1;
    const double half = c.get("sweep_ns") / 2.0;
    TopFluxFluxParams tp;
    tp.qubit1.delta_max = d1;
    tp.delta2 = c.get("delta2_over_delta1") * d1;
    tp.omega_cyclic = c.get("omega_ghz");
    ReadOptions opts;
    opts.ramp_ns = c.get("ramp_ns");
    opts.solver = solver(c.params);
    const ReadProtocol rp(tp, {eps_a, 0.0, half, SweepShape::smooth}, {0.0, -eps_a, half, SweepShape::smooth}, opts);
    const ProtocolRecord both = rp.run(c.a(), c.b(), {c.seed, MeasurementModel::Mode::both_branches});
    rec.summary["fidelity_raw"] = both.fidelity_raw;
    rec.summary["fidelity_phase_corrected"] = both.fidelity_corrected;
    for (const char *k : {"post_pulse_fidelity", "post_pulse_branch_phase", "post_pulse_concurrence",
                          "qubit1_purity", "concurrence", "entropy_topological", "entangling_ns",
                          "coherence_budget_ns", "entangling_fraction_of_coherence", "pulse_ns", "total_ns",
                          "offresonant_excitation_max", "offresonant_excitation_at_pulse",
                          "fidelity_with_bitflip_correction"}) {
        rec.summary[k] = both.metrics.at(k);
    }
    rec.summary["concurrence_expected"] = 2.0 * std::abs(c.a()) * std::abs(c.b());
    rec.summary["branches"] = branch_json(both.branches);
    rec.summary["events"] = events_json(both.events);
    rec.notes.insert(rec.notes.end(), both.notes.begin(), both.notes.end());

    const auto runs = static_cast<std::size_t>(c.get("runs"));
    const RunStats st = sampled_runs(
        [&](std::uint64_t k) { return rp.run(c.a(), c.b(), {c.seed, MeasurementModel::Mode::sampled}, k); }, runs,
        threads(c));
    put_stats(rec, st, runs, {"0", "1"});
    rec.rows.push_back({{"epsilon_over_delta", c.get("epsilon_over_delta")},
                        {"sweep_ns", c.get("sweep_ns")},
                        {"fidelity_raw", both.fidelity_raw},
                        {"fidelity_phase_corrected", both.fidelity_corrected},
                        {"post_pulse_fidelity", both.metrics.at("post_pulse_fidelity")},
                        {"qubit1_purity", both.metrics.at("qubit1_purity")},
                        {"concurrence", both.metrics.at("concurrence")},
                        {"entangling_ns", both.metrics.at("entangling_ns")}});
}

inline std::string summary_line(const std::string &scenario, const Row &row) {
    std::string line = scenario + ":";
    for (const auto &[k, v] : row) {
        line += " " + k + "=" + format_double(v);
    }
    return line;
}

}  // namespace detail

/// Executes a parsed scenario. Prints one summary line per run or scan point to `log`.
inline ResultRecord run_scenario(const ScenarioConfig &c, std::ostream &log) {
    const auto start = std::chrono::steady_clock::now();
    ResultRecord rec;
    rec.config = c;
    const auto &name = c.scenario;

    using RowFn = Row (*)(const detail::Params &);
    RowFn row_fn = nullptr;
    if (name == "phase-gate") {
        row_fn = detail::phase_gate_row;
    } else if (name == "lz-scan") {
        row_fn = detail::lz_row;
    } else if (name == "sweep-time") {
        row_fn = detail::sweep_time_row;
    } else if (name == "decoupling-compare") {
        row_fn = detail::decoupling_row;
    }

    if (row_fn) {
        std::vector<double> points = c.scan ? c.scan->values : std::vector<double>{};
        const std::size_t n = c.scan ? points.size() : 1;
        rec.rows = parallel_map<Row>(n, detail::threads(c), [&](std::size_t k) {
            auto p = c.params;
            if (c.scan) {
                p[c.scan->key] = points[k];
            }
            return row_fn(p);
        });
        for (const auto &r : rec.rows) {
            log << detail::summary_line(name, r) << '\n';
        }
        if (name == "lz-scan") {
            double worst = 0.0, vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
            for (const auto &r : rec.rows) {
                worst = std::max(worst, r[4].second);
                vmin = std::min(vmin, r[1].second);
                vmax = std::max(vmax, r[1].second);
            }
            rec.summary["max_abs_error"] = worst;
            rec.summary["v_decades"] = std::log10(vmax / vmin);
        } else if (name == "phase-gate" && rec.rows.size() == 1) {
            for (const auto &[k, v] : rec.rows[0]) {
                rec.summary[k] = v;
            }
            rec.notes.emplace_back(
                "phase is the phase of |0> relative to |1>: the gate applied is diag(e^{i phase}, 1)");
        } else if (rec.rows.size() == 1) {
            for (const auto &[k, v] : rec.rows[0]) {
                rec.summary[k] = v;
            }
        }
    } else if (name == "write") {
        detail::run_write(c, rec);
        log << detail::summary_line(name, rec.rows[0]) << '\n';
    } else if (name == "read") {
        detail::run_read(c, rec);
        log << detail::summary_line(name, rec.rows[0]) << '\n';
    }
    rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

struct RunRequest {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = ".";
    std::optional<std::string> format;
    std::vector<std::string> overrides;
};

/// Exit codes of run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSimulation = 3;

/// The `run` subcommand: load, override, execute, write artifacts.
inline int run_command(const RunRequest &req, std::ostream &out, std::ostream &err) {
    ScenarioConfig cfg;
    try {
        std::vector<std::string> overrides = req.overrides;
        if (req.seed) {
            overrides.push_back("seed=" + std::to_string(*req.seed));
        }
        if (req.format) {
            overrides.push_back("format=\"" + *req.format + "\"");
        }
        cfg = load_config(req.config, overrides);
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    for (const auto &w : cfg.warnings) {
        err << "warning: " << w << '\n';
    }

    ResultRecord rec;
    try {
        rec = run_scenario(cfg, out);
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        err << "simulation error: " << e.what() << '\n';
        return kExitSimulation;
    }

    std::error_code ec;
    std::filesystem::create_directories(req.out_dir, ec);
    const auto base = req.out_dir / cfg.scenario;
    auto write_file = [&](const std::filesystem::path &path, const std::string &text) {
        std::ofstream f(path, std::ios::binary);
        f << text;
        if (!f) {
            err << "cannot write " << path.string() << '\n';
            return false;
        }
        out << "wrote " << path.string() << '\n';
        return true;
    };
    bool ok = true;
    if (cfg.format != OutputFormat::csv) {
        ok = write_file(base.string() + ".json", rec.to_json().dump(2) + "\n") && ok;
    }
    if (cfg.format != OutputFormat::json || cfg.scan) {
        ok = write_file(base.string() + ".csv", to_csv(rec.rows)) && ok;
    }
    return ok ? kExitOk : kExitSimulation;
}

/// Text of the `list` subcommand.
inline std::string list_scenarios() {
    std::ostringstream out;
    out << "required keys for every scenario: scenario, delta_max_ghz\n";
    out << "optional for every scenario: seed (default 0), format (json|csv|both, default json), scan\n";
    for (const auto &k : common_keys()) {
        out << "  " << k.name << " = " << format_double(k.default_value) << "  " << k.help << '\n';
    }
    for (const auto &s : scenarios()) {
        out << '\n' << s.name << ": " << s.summary << '\n';
        out << "  delta_max_ghz (required, suggested " << format_double(s.suggested_delta_max_ghz) << ")\n";
        for (const auto &k : s.keys) {
            out << "  " << k.name << " = " << format_double(k.default_value) << "  " << k.help << '\n';
        }
        if (!s.scan_keys.empty()) {
            out << "  scan keys:";
            for (const auto &k : s.scan_keys) {
                out << ' ' << k;
            }
            out << '\n';
        }
        if (s.default_scan) {
            const auto &d = *s.default_scan;
            out << "  default scan: " << d.key << " from " << format_double(d.start) << " to "
                << format_double(d.stop) << ", " << d.count << " points, " << (d.log ? "log" : "linear")
                << " spacing\n";
        }
    }
    return out.str();
}

}  // namespace topflux::cli

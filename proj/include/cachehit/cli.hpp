/*
   Copyright 2026 The cachehit Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Scenario runner behind the command-line tool: JSON run configuration,
// command dispatch and CSV/JSON tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cachehit/coverage.hpp"
#include "cachehit/error.hpp"
#include "cachehit/hit.hpp"
#include "cachehit/mcsim.hpp"
#include "cachehit/optimizer.hpp"
#include "cachehit/popularity.hpp"

namespace cachehit::cli {

using json = nlohmann::ordered_json;

enum class ExitCode : int { Ok = 0, Validation = 1, VerificationFailed = 2, NotCertified = 3 };
enum class Format { Csv, Json };

// ---------------------------------------------------------------- config

struct LibrarySpec {
    std::size_t num_files = 2;
    double gamma = 1.2;
    std::vector<double> popularity;  // explicit vector; overrides (K, gamma) when set
    std::size_t capacity = 1;

    ZipfLibrary build(std::optional<std::size_t> num_files_override = std::nullopt) const
    {
        if (!popularity.empty()) {
            if (num_files_override && *num_files_override != popularity.size())
                throw ValidationError("library.popularity", "a K sweep needs a Zipf library, not explicit popularity");
            return ZipfLibrary::from_probs(popularity, capacity);
        }
        return ZipfLibrary::zipf(num_files_override.value_or(num_files), gamma, capacity);
    }
};

struct ScenarioKind {
    Policy policy = Policy::CacheAgnostic;
    Mobility mobility = Mobility::Mobile;
};

struct SweepSpec {
    enum class Axis { Attempts, FirstFileProbability, LibrarySize } axis = Axis::Attempts;
    double from = 1.0;
    double to = 1.0;
    double step = 1.0;

    std::vector<double> points() const
    {
        const double span = to - from;
        const auto count = static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1;
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = std::min(to, from + static_cast<double>(i) * step);
        return out;
    }
};

struct RunConfig {
    std::vector<ScenarioKind> scenarios;
    LibrarySpec library;
    ChannelParams channel;
    std::vector<unsigned> attempts;
    std::optional<std::vector<double>> placement;  // nullopt means "optimal"
    std::optional<SweepSpec> sweep;
    SimConfig sim;
    bool semantics_given = false;
    std::string output_path;
    Format format = Format::Csv;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ValidationError(where.empty() ? "config" : where, "must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ValidationError(where.empty() ? key : where + "." + key, "unknown field");
    }
}

inline double get_number(const json& obj, const std::string& where, const char* key, double fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ValidationError(where + key, "must be a number");
    return v.get<double>();
}

inline std::uint64_t get_count(const json& obj, const std::string& where, const char* key, std::uint64_t fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) throw ValidationError(where + key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline unsigned get_attempts(const json& v, const std::string& field)
{
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0 || v.get<std::uint64_t>() > 1'000'000)
        throw ValidationError(field, "attempt counts must be integers in [1, 1e6]");
    return static_cast<unsigned>(v.get<std::uint64_t>());
}

inline ScenarioKind parse_scenario(const json& obj, const std::string& where)
{
    reject_unknown(obj, where, {"policy", "mobility"});
    ScenarioKind s;
    if (!obj.contains("policy") || !obj.contains("mobility"))
        throw ValidationError(where, "needs both policy and mobility");
    const auto policy = obj.at("policy").is_string() ? obj.at("policy").get<std::string>() : "";
    if (policy == "P1" || policy == "cache-agnostic")
        s.policy = Policy::CacheAgnostic;
    else if (policy == "P2" || policy == "cache-aware")
        s.policy = Policy::CacheAware;
    else
        throw ValidationError(where + ".policy", "expected \"P1\" or \"P2\"");
    const auto mobility = obj.at("mobility").is_string() ? obj.at("mobility").get<std::string>() : "";
    if (mobility == "static")
        s.mobility = Mobility::Static;
    else if (mobility == "mobile")
        s.mobility = Mobility::Mobile;
    else
        throw ValidationError(where + ".mobility", "expected \"static\" or \"mobile\"");
    return s;
}

inline SweepSpec parse_sweep(const json& obj)
{
    reject_unknown(obj, "sweep", {"axis", "from", "to", "step"});
    SweepSpec s;
    const auto axis = obj.contains("axis") && obj.at("axis").is_string() ? obj.at("axis").get<std::string>() : "";
    if (axis == "n")
        s.axis = SweepSpec::Axis::Attempts;
    else if (axis == "b1")
        s.axis = SweepSpec::Axis::FirstFileProbability;
    else if (axis == "K")
        s.axis = SweepSpec::Axis::LibrarySize;
    else
        throw ValidationError("sweep.axis", "expected \"n\", \"b1\" or \"K\"");
    if (!obj.contains("from") || !obj.contains("to")) throw ValidationError("sweep", "needs from and to");
    s.from = get_number(obj, "sweep.", "from", 0.0);
    s.to = get_number(obj, "sweep.", "to", 0.0);
    s.step = get_number(obj, "sweep.", "step", s.axis == SweepSpec::Axis::FirstFileProbability ? 0.01 : 1.0);
    if (!(s.step > 0.0)) throw ValidationError("sweep.step", "must be positive");
    if (!(s.to >= s.from)) throw ValidationError("sweep", "empty range: to < from");
    if (s.axis == SweepSpec::Axis::FirstFileProbability) {
        if (s.from < 0.0 || s.to > 1.0) throw ValidationError("sweep", "b1 range must lie in [0, 1]");
    } else {
        for (double v : {s.from, s.to, s.step})
            if (v != std::floor(v) || v < 1.0) throw ValidationError("sweep", "n and K ranges must be positive integers");
        if (s.axis == SweepSpec::Axis::LibrarySize && s.from < 1.0) throw ValidationError("sweep.from", "K >= 1");
    }
    return s;
}

}  // namespace detail

/// Parse and validate a run configuration. Errors name the offending field.
inline RunConfig parse_run_config(const json& doc)
{
    using detail::get_count;
    using detail::get_number;
    detail::reject_unknown(doc, "", {"scenario", "scenarios", "library", "channel", "n", "n_range", "placement",
                                     "sweep", "sim", "output"});
    RunConfig cfg;

    if (doc.contains("scenario") == doc.contains("scenarios"))
        throw ValidationError("scenario", "give exactly one of scenario or scenarios");
    if (doc.contains("scenario")) {
        cfg.scenarios.push_back(detail::parse_scenario(doc.at("scenario"), "scenario"));
    } else {
        const auto& list = doc.at("scenarios");
        if (!list.is_array() || list.empty()) throw ValidationError("scenarios", "must be a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i)
            cfg.scenarios.push_back(detail::parse_scenario(list[i], "scenarios[" + std::to_string(i) + "]"));
    }

    if (doc.contains("library")) {
        const auto& lib = doc.at("library");
        detail::reject_unknown(lib, "library", {"K", "gamma", "L", "popularity"});
        cfg.library.capacity = get_count(lib, "library.", "L", 1);
        if (lib.contains("popularity")) {
            if (lib.contains("K") || lib.contains("gamma"))
                throw ValidationError("library", "give either (K, gamma) or popularity, not both");
            if (!lib.at("popularity").is_array()) throw ValidationError("library.popularity", "must be an array");
            for (const auto& v : lib.at("popularity")) {
                if (!v.is_number()) throw ValidationError("library.popularity", "entries must be numbers");
                cfg.library.popularity.push_back(v.get<double>());
            }
        } else {
            cfg.library.num_files = get_count(lib, "library.", "K", 2);
            cfg.library.gamma = get_number(lib, "library.", "gamma", 1.2);
        }
    }

    if (doc.contains("channel")) {
        const auto& ch = doc.at("channel");
        detail::reject_unknown(ch, "channel", {"T_dB", "T_linear", "alpha", "lambda"});
        if (ch.contains("T_dB") && ch.contains("T_linear"))
            throw ValidationError("channel", "give either T_dB or T_linear, not both");
        if (ch.contains("T_linear"))
            cfg.channel.threshold = get_number(ch, "channel.", "T_linear", 1.0);
        else
            cfg.channel.threshold = ChannelParams::db_to_linear(get_number(ch, "channel.", "T_dB", 0.0));
        cfg.channel.alpha = get_number(ch, "channel.", "alpha", 4.0);
        cfg.channel.density = get_number(ch, "channel.", "lambda", 1.0);
    }
    cfg.channel.validated();

    if (doc.contains("n") && doc.contains("n_range")) throw ValidationError("n", "give either n or n_range");
    if (doc.contains("n")) {
        const auto& n = doc.at("n");
        if (n.is_array()) {
            if (n.empty()) throw ValidationError("n", "empty list");
            for (const auto& v : n) cfg.attempts.push_back(detail::get_attempts(v, "n"));
        } else {
            cfg.attempts.push_back(detail::get_attempts(n, "n"));
        }
    } else if (doc.contains("n_range")) {
        const auto& r = doc.at("n_range");
        detail::reject_unknown(r, "n_range", {"from", "to", "step"});
        if (!r.contains("from") || !r.contains("to")) throw ValidationError("n_range", "needs from and to");
        const unsigned from = detail::get_attempts(r.at("from"), "n_range.from");
        const unsigned to = detail::get_attempts(r.at("to"), "n_range.to");
        const unsigned step = r.contains("step") ? detail::get_attempts(r.at("step"), "n_range.step") : 1u;
        if (to < from) throw ValidationError("n_range", "empty range: to < from");
        for (unsigned n = from; n <= to; n += step) cfg.attempts.push_back(n);
    }

    if (doc.contains("placement")) {
        const auto& p = doc.at("placement");
        if (p.is_string()) {
            if (p.get<std::string>() != "optimal")
                throw ValidationError("placement", "expected \"optimal\" or an explicit vector");
        } else if (p.is_array()) {
            std::vector<double> b;
            for (const auto& v : p) {
                if (!v.is_number()) throw ValidationError("placement", "entries must be numbers");
                b.push_back(v.get<double>());
            }
            cfg.placement = std::move(b);
        } else {
            throw ValidationError("placement", "expected \"optimal\" or an explicit vector");
        }
    }

    if (doc.contains("sweep")) cfg.sweep = detail::parse_sweep(doc.at("sweep"));
    if (cfg.sweep && cfg.sweep->axis == SweepSpec::Axis::Attempts) {
        if (!cfg.attempts.empty()) throw ValidationError("n", "an n sweep takes its values from sweep.from/to");
        for (double n = cfg.sweep->from; n <= cfg.sweep->to; n += cfg.sweep->step)
            cfg.attempts.push_back(static_cast<unsigned>(n));
    }
    if (cfg.attempts.empty()) throw ValidationError("n", "required (n, n_range or an n sweep)");

    if (doc.contains("sim")) {
        const auto& s = doc.at("sim");
        detail::reject_unknown(s, "sim", {"trials", "seed", "window_radius", "semantics", "threads"});
        cfg.sim.trials = get_count(s, "sim.", "trials", cfg.sim.trials);
        cfg.sim.seed = get_count(s, "sim.", "seed", cfg.sim.seed);
        cfg.sim.window_radius = get_number(s, "sim.", "window_radius", cfg.sim.window_radius);
        cfg.sim.threads = static_cast<unsigned>(get_count(s, "sim.", "threads", cfg.sim.threads));
        if (s.contains("semantics")) {
            const auto sem = s.at("semantics").is_string() ? s.at("semantics").get<std::string>() : "";
            if (sem == "categorical")
                cfg.sim.semantics = CacheSemantics::CategoricalSingleFile;
            else if (sem == "independent")
                cfg.sim.semantics = CacheSemantics::IndependentPerFile;
            else
                throw ValidationError("sim.semantics", "expected \"categorical\" or \"independent\"");
            cfg.semantics_given = true;
        }
    }
    if (!cfg.semantics_given)
        cfg.sim.semantics = cfg.library.capacity == 1 ? CacheSemantics::CategoricalSingleFile
                                                      : CacheSemantics::IndependentPerFile;

    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        detail::reject_unknown(o, "output", {"path", "format"});
        if (o.contains("path")) {
            if (!o.at("path").is_string()) throw ValidationError("output.path", "must be a string");
            cfg.output_path = o.at("path").get<std::string>();
        }
        if (o.contains("format")) {
            const auto f = o.at("format").is_string() ? o.at("format").get<std::string>() : "";
            if (f == "csv")
                cfg.format = Format::Csv;
            else if (f == "json")
                cfg.format = Format::Json;
            else
                throw ValidationError("output.format", "expected \"csv\" or \"json\"");
        }
    }

    // Surface library and placement errors at load time rather than mid-run.
    const auto lib = cfg.library.build();
    if (cfg.placement) validate_placement(*cfg.placement, lib.capacity());
    return cfg;
}

inline RunConfig parse_run_config(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", std::string("not valid JSON: ") + e.what());
    }
    return parse_run_config(doc);
}

inline RunConfig parse_run_config(const char* text) { return parse_run_config(std::string(text)); }

// ---------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, std::string, double, std::int64_t, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row)
    {
        if (row.size() != columns.size()) throw std::logic_error("row width does not match header");
        rows.push_back(std::move(row));
    }
};

/// 12 significant digits; the same text backs CSV cells and JSON numbers.
inline std::string format_number(double v)
{
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline Cell number_or_empty(double v) { return std::isfinite(v) ? Cell{v} : Cell{}; }

inline std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string cell_text(const Cell& c)
{
    struct {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(double v) const { return format_number(v); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
    } visit;
    return std::visit(visit, c);
}

inline json cell_json(const Cell& c)
{
    if (std::holds_alternative<std::monostate>(c)) return nullptr;
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* v = std::get_if<double>(&c)) return json::parse(format_number(*v));
    if (const auto* v = std::get_if<std::int64_t>(&c)) return *v;
    return std::get<bool>(c);
}

inline void write_csv(std::ostream& os, const Table& t)
{
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << csv_escape(t.columns[j]);
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_escape(cell_text(row[j]));
        os << '\n';
    }
}

inline void write_json(std::ostream& os, const std::string& command, const Table& t)
{
    json doc;
    doc["command"] = command;
    doc["columns"] = t.columns;
    json rows = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t j = 0; j < row.size(); ++j) obj[t.columns[j]] = cell_json(row[j]);
        rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << '\n';
}

inline std::string join(const std::vector<std::string>& items, const char* sep = ";")
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

inline void append_indexed_columns(std::vector<std::string>& cols, const std::string& prefix, std::size_t count)
{
    for (std::size_t i = 1; i <= count; ++i) cols.push_back(prefix + std::to_string(i));
}

// ---------------------------------------------------------------- commands

struct CommandResult {
    Table table;
    ExitCode status = ExitCode::Ok;
};

/// Evaluate `task(i)` for i in [0, count) on up to `threads` workers. Each
/// result lands in its own slot, so output order never depends on timing.
template <class T>
std::vector<T> parallel_map(std::size_t count, unsigned threads, const std::function<T(std::size_t)>& task)
{
    std::vector<std::optional<T>> slots(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count && !failed.load();) {
            try {
                slots[i] = task(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    const unsigned workers = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<T> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline Scenario make_scenario(const ScenarioKind& kind, unsigned n) { return Scenario{kind.policy, kind.mobility, n}; }

inline std::vector<Cell> scenario_cells(const ScenarioKind& kind, unsigned n, const ZipfLibrary& lib)
{
    return {std::string(to_string(kind.policy)), std::string(to_string(kind.mobility)), static_cast<std::int64_t>(n),
            static_cast<std::int64_t>(lib.num_files()), static_cast<std::int64_t>(lib.capacity())};
}

inline const std::vector<std::string> kScenarioColumns = {"policy", "mobility", "n", "K", "L"};

/// Explicit placement from the config, or the solver's optimum.
inline PlacementVector resolve_placement(const RunConfig& cfg, const Scenario& sc, const ZipfLibrary& lib)
{
    if (cfg.placement) return validate_placement(*cfg.placement, lib.capacity());
    return optimal_placement(sc, lib, cfg.channel).b_star;
}

inline CommandResult cmd_optimize(const RunConfig& cfg, unsigned threads = 1)
{
    if (cfg.placement) throw ValidationError("placement", "optimize needs placement = \"optimal\"");
    const auto lib = cfg.library.build();
    const std::size_t K = lib.num_files();
    CommandResult out;
    out.table.columns = kScenarioColumns;
    for (const char* c : {"method", "certified", "hit", "nu", "residual"}) out.table.columns.emplace_back(c);
    append_indexed_columns(out.table.columns, "b", K);
    append_indexed_columns(out.table.columns, "mu", K);
    append_indexed_columns(out.table.columns, "w", K);
    out.table.columns.emplace_back("notes");

    std::vector<std::pair<ScenarioKind, unsigned>> jobs;
    for (const auto& kind : cfg.scenarios)
        for (unsigned n : cfg.attempts) jobs.emplace_back(kind, n);
    const auto solutions = parallel_map<KktSolution>(jobs.size(), threads, [&](std::size_t i) {
        return optimal_placement(make_scenario(jobs[i].first, jobs[i].second), lib, cfg.channel);
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& sol = solutions[j];
        auto row = scenario_cells(jobs[j].first, jobs[j].second, lib);
        row.insert(row.end(), {sol.method, sol.certified, sol.objective, sol.nu_star, sol.stationarity_residual});
        for (double v : sol.b_star.values()) row.emplace_back(v);
        for (double v : sol.mu_star) row.emplace_back(v);
        for (double v : sol.w_star) row.emplace_back(v);
        row.emplace_back(join(sol.notes));
        out.table.add(std::move(row));
        if (!sol.certified) out.status = ExitCode::NotCertified;
    }
    return out;
}

inline CommandResult cmd_evaluate(const RunConfig& cfg, unsigned threads = 1)
{
    const auto lib = cfg.library.build();
    CommandResult out;
    out.table.columns = kScenarioColumns;
    for (const char* c : {"placement", "hit", "ci_halfwidth_99", "method"}) out.table.columns.emplace_back(c);
    append_indexed_columns(out.table.columns, "b", lib.num_files());
    out.table.columns.emplace_back("flags");

    std::vector<std::pair<ScenarioKind, unsigned>> jobs;
    for (const auto& kind : cfg.scenarios)
        for (unsigned n : cfg.attempts) jobs.emplace_back(kind, n);
    struct Eval {
        PlacementVector b;
        HitResult hit;
    };
    const auto evals = parallel_map<Eval>(jobs.size(), threads, [&](std::size_t i) {
        const auto sc = make_scenario(jobs[i].first, jobs[i].second);
        auto b = resolve_placement(cfg, sc, lib);
        auto hit = hit_prob(sc, b, lib, cfg.channel, cfg.sim);
        return Eval{std::move(b), std::move(hit)};
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& e = evals[j];
        auto row = scenario_cells(jobs[j].first, jobs[j].second, lib);
        row.insert(row.end(), {std::string(cfg.placement ? "explicit" : "optimal"), e.hit.value, e.hit.ci_halfwidth_99,
                               std::string(e.hit.monte_carlo ? "monte-carlo" : "analytic")});
        for (double v : e.b.values()) row.emplace_back(v);
        row.emplace_back(join(e.hit.flags));
        out.table.add(std::move(row));
    }
    return out;
}

/// Monte Carlo runs are sequential over (scenario, n); the simulator itself
/// spreads trials over `cfg.sim.threads` with a thread-count-free result.
inline CommandResult cmd_simulate(const RunConfig& cfg)
{
    const auto lib = cfg.library.build();
    CommandResult out;
    out.table.columns = kScenarioColumns;
    for (const char* c : {"semantics", "trials", "seed", "window_radius", "hit_estimate", "ci_halfwidth_99",
                          "analytic", "analytic_inside_ci"})
        out.table.columns.emplace_back(c);
    append_indexed_columns(out.table.columns, "b", lib.num_files());
    append_indexed_columns(out.table.columns, "file_success", lib.num_files());
    out.table.columns.emplace_back("flags");

    for (const auto& kind : cfg.scenarios) {
        for (unsigned n : cfg.attempts) {
            const auto sc = make_scenario(kind, n);
            const auto b = resolve_placement(cfg, sc, lib);
            const auto sim = simulate_hit(sc, b, lib, cfg.channel, cfg.sim);
            Cell analytic, inside;
            if (SuccessModel::analytic_available(sc)) {
                const double a = analytic_hit_prob(SuccessModel(sc, cfg.channel), b.values(), lib.request_probs());
                analytic = a;
                inside = std::abs(a - sim.hit_estimate) <= sim.ci_halfwidth_99;
            }
            auto row = scenario_cells(kind, n, lib);
            row.insert(row.end(),
                       {std::string(cfg.sim.semantics == CacheSemantics::CategoricalSingleFile ? "categorical"
                                                                                                : "independent"),
                        static_cast<std::int64_t>(sim.trials_used), std::to_string(cfg.sim.seed),
                        cfg.sim.window_radius, sim.hit_estimate, sim.ci_halfwidth_99, analytic, inside});
            for (double v : b.values()) row.emplace_back(v);
            for (double v : sim.per_file_success) row.push_back(number_or_empty(v));
            row.emplace_back(join(sim.flags));
            out.table.add(std::move(row));
        }
    }
    return out;
}

/// One row per grid point: n or K sweeps report the optimum (or the explicit
/// placement's hit), b1 sweeps evaluate [b1, 1 - b1] for a two-file library.
inline CommandResult cmd_sweep(const RunConfig& cfg, unsigned threads = 1)
{
    if (!cfg.sweep) throw ValidationError("sweep", "sweep needs a sweep section");
    const auto& sw = *cfg.sweep;
    const auto base = cfg.library.build();

    struct Point {
        std::string axis;
        double value;
        ScenarioKind kind;
        unsigned n;
        std::size_t num_files;
    };
    std::vector<Point> grid;
    std::size_t max_files = base.num_files();
    switch (sw.axis) {
    case SweepSpec::Axis::Attempts:
        for (const auto& kind : cfg.scenarios)
            for (unsigned n : cfg.attempts) grid.push_back({"n", static_cast<double>(n), kind, n, base.num_files()});
        break;
    case SweepSpec::Axis::FirstFileProbability:
        if (base.num_files() != 2 || base.capacity() != 1)
            throw ValidationError("sweep.axis", "a b1 sweep needs K = 2 and L = 1");
        if (cfg.placement) throw ValidationError("placement", "a b1 sweep sets the placement itself");
        for (const auto& kind : cfg.scenarios)
            for (unsigned n : cfg.attempts)
                for (double v : sw.points()) grid.push_back({"b1", v, kind, n, 2});
        break;
    case SweepSpec::Axis::LibrarySize:
        if (cfg.placement) throw ValidationError("placement", "a K sweep needs placement = \"optimal\"");
        for (const auto& kind : cfg.scenarios)
            for (unsigned n : cfg.attempts)
                for (double v : sw.points()) {
                    const auto K = static_cast<std::size_t>(v);
                    if (K < base.capacity()) throw ValidationError("sweep.from", "K must be at least L");
                    grid.push_back({"K", v, kind, n, K});
                    max_files = std::max(max_files, K);
                }
        break;
    }
    for (const auto& p : grid)
        if (p.kind.mobility == Mobility::Static && p.n > kStaticAttemptCap && !(cfg.placement))
            throw ValidationError("n", "static optimization is limited to n <= " + std::to_string(kStaticAttemptCap));

    struct Value {
        double hit;
        bool certified;
        std::vector<double> b;
    };
    const auto values = parallel_map<Value>(grid.size(), threads, [&](std::size_t i) -> Value {
        const auto& p = grid[i];
        const auto sc = make_scenario(p.kind, p.n);
        if (sw.axis == SweepSpec::Axis::FirstFileProbability) {
            const auto b = validate_placement(std::vector<double>{p.value, 1.0 - p.value}, 1);
            return {hit_prob(sc, b, base, cfg.channel, cfg.sim).value, true, {b.values().begin(), b.values().end()}};
        }
        const auto lib = sw.axis == SweepSpec::Axis::LibrarySize ? cfg.library.build(p.num_files) : base;
        if (cfg.placement) {
            const auto b = validate_placement(*cfg.placement, lib.capacity());
            return {hit_prob(sc, b, lib, cfg.channel, cfg.sim).value, true, {b.values().begin(), b.values().end()}};
        }
        const auto sol = optimal_placement(sc, lib, cfg.channel);
        return {sol.objective, sol.certified, {sol.b_star.values().begin(), sol.b_star.values().end()}};
    });

    CommandResult out;
    out.table.columns = {"axis", "axis_value", "policy", "mobility", "n", "K", "L", "hit", "certified"};
    append_indexed_columns(out.table.columns, "b", max_files);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& p = grid[i];
        const auto& v = values[i];
        std::vector<Cell> row = {p.axis,
                                 p.value,
                                 std::string(to_string(p.kind.policy)),
                                 std::string(to_string(p.kind.mobility)),
                                 static_cast<std::int64_t>(p.n),
                                 static_cast<std::int64_t>(p.num_files),
                                 static_cast<std::int64_t>(base.capacity()),
                                 v.hit,
                                 v.certified};
        for (std::size_t k = 0; k < max_files; ++k) row.push_back(k < v.b.size() ? Cell{v.b[k]} : Cell{});
        out.table.add(std::move(row));
        if (!v.certified) out.status = ExitCode::NotCertified;
    }
    return out;
}

/// Cross-checks of the analytic layer against closed forms, the Monte Carlo
/// simulator and exhaustive grid search. Exit status 2 if any row fails.
inline CommandResult cmd_verify(const RunConfig& cfg, unsigned threads = 1)
{
    const auto lib = cfg.library.build();
    if (lib.num_files() > 4) throw ValidationError("library.K", "verify compares against grid search; needs K <= 4");
    const auto& ch = cfg.channel;

    CommandResult out;
    out.table.columns = {"quantity", "analytic", "oracle", "abs_delta", "tolerance", "pass"};
    auto check = [&](const std::string& name, double analytic, double oracle, double tol) {
        const double delta = std::abs(analytic - oracle);
        const bool pass = delta <= tol;
        out.table.add({name, analytic, oracle, delta, tol, pass});
        if (!pass) out.status = ExitCode::VerificationFailed;
    };
    const double quarter_pi = std::numbers::pi / 4.0;
    check("rho1(T=1,alpha=4) vs pi/4", rho1(1.0, 4.0), quarter_pi, 1e-9);
    check("rho2(T=1,alpha=4) vs pi/4", rho2(1.0, 4.0), quarter_pi, 1e-9);
    check("rho1+rho2 vs half-line integral", rho1(ch.threshold, ch.alpha) + rho2(ch.threshold, ch.alpha),
          rho_total(ch.threshold, ch.alpha), 1e-10);
    const auto rho = RhoConstants::compute(ch);
    check("joint_coverage_p1(k=1) vs 1/(1+rho1)", joint_coverage_p1(1, ch), rho.nearest_coverage(), 1e-6);
    for (double b : {0.25, 0.5, 1.0})
        check("joint_coverage_p2(k=1,b=" + format_number(b) + ") vs single-attempt P2", joint_coverage_p2(1, b, ch),
              success_prob_p2(b, rho), 1e-6);

    struct Job {
        ScenarioKind kind;
        unsigned n;
    };
    std::vector<Job> jobs;
    for (const auto& kind : cfg.scenarios)
        for (unsigned n : cfg.attempts)
            if (SuccessModel::analytic_available(make_scenario(kind, n))) jobs.push_back({kind, n});

    for (const auto& job : jobs) {
        const auto sc = make_scenario(job.kind, job.n);
        const std::string tag = std::string("[") + to_string(job.kind.policy) + " " + to_string(job.kind.mobility) +
                                " n=" + std::to_string(job.n) + "]";
        const auto b = resolve_placement(cfg, sc, lib);
        const double hit = hit_prob(sc, b, lib, ch).value;
        for (double lambda : {0.1, 100.0}) {
            ChannelParams scaled = ch;
            scaled.density = lambda;
            check("hit lambda-invariance " + tag + " lambda=" + format_number(lambda), hit,
                  hit_prob(sc, b, lib, scaled).value, 1e-6);
        }
        auto sim_cfg = cfg.sim;
        sim_cfg.threads = std::max(sim_cfg.threads, threads);
        const auto sim = simulate_hit(sc, b, lib, ch, sim_cfg);
        check("hit vs Monte Carlo (99% CI) " + tag, hit, sim.hit_estimate, sim.ci_halfwidth_99);
    }

    // Solver vs grid: step 1e-3 for K <= 3; K = 4 only affords 1e-2, where the
    // grid can merely fail to beat the solver.
    const bool fine = lib.num_files() <= 3;
    const double step = fine ? 1e-3 : 1e-2;
    struct Pair {
        double solver;
        double grid;
    };
    const auto pairs = parallel_map<Pair>(jobs.size(), threads, [&](std::size_t i) {
        const auto sc = make_scenario(jobs[i].kind, jobs[i].n);
        return Pair{optimal_placement(sc, lib, ch).objective, grid_search_oracle(sc, lib, ch, step).objective};
    });
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const std::string tag = std::string("[") + to_string(jobs[i].kind.policy) + " " +
                                to_string(jobs[i].kind.mobility) + " n=" + std::to_string(jobs[i].n) + "]";
        if (fine) {
            check("optimum vs grid search " + tag, pairs[i].solver, pairs[i].grid, 1e-5);
        } else {
            const double shortfall = std::max(0.0, pairs[i].grid - pairs[i].solver);
            check("optimum not beaten by coarse grid " + tag, pairs[i].solver, pairs[i].solver + shortfall, 1e-9);
        }
    }
    return out;
}

}  // namespace cachehit::cli

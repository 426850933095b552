#pragma once

/// @file experiment.hpp
/// @brief JSON experiment configs, the runners behind the command-line tool,
/// and reproducible run directories (manifest + CSV/SVG/binary artifacts).

#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adlab/commutator.hpp"
#include "adlab/field_io.hpp"
#include "adlab/field_library.hpp"
#include "adlab/regime.hpp"
#include "adlab/solver.hpp"

namespace adlab::experiment {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kGateFailed = 1, kSchemaError = 2, kNumericalAbort = 3, kIoError = 4 };

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Round-trip formatting used by every CSV writer.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Infinity is not representable in JSON; it is written as the string "inf".
inline json num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

// ============================================================================
// Strict schema reading
// ============================================================================

/// Reads one JSON object; every key must be consumed before finish().
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    [[nodiscard]] const std::string& path() const { return path_; }

    /// True when the key is present and not null; marks it consumed either way.
    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k) && !j_.at(k).is_null();
    }

    const json& raw(const std::string& k) {
        if (!has(k)) throw ConfigError(where(k) + ": required key missing");
        return j_.at(k);
    }

    double number(const std::string& k) {
        const auto& v = raw(k);
        if (!v.is_number()) throw ConfigError(where(k) + ": expected a number");
        return v.get<double>();
    }
    double number(const std::string& k, double def) { return has(k) ? number(k) : def; }

    int integer(const std::string& k) {
        const auto& v = raw(k);
        if (!v.is_number_integer()) throw ConfigError(where(k) + ": expected an integer");
        return v.get<int>();
    }
    int integer(const std::string& k, int def) { return has(k) ? integer(k) : def; }

    std::int64_t integer64(const std::string& k, std::int64_t def) {
        if (!has(k)) return def;
        const auto& v = raw(k);
        if (!v.is_number_integer()) throw ConfigError(where(k) + ": expected an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const std::string& k, bool def) {
        if (!has(k)) return def;
        const auto& v = raw(k);
        if (!v.is_boolean()) throw ConfigError(where(k) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& k) {
        const auto& v = raw(k);
        if (!v.is_string()) throw ConfigError(where(k) + ": expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& k, const std::string& def) { return has(k) ? string(k) : def; }

    ObjectReader object(const std::string& k) { return ObjectReader(raw(k), where(k)); }

    std::vector<double> numbers(const std::string& k) {
        const auto& v = raw(k);
        if (!v.is_array()) throw ConfigError(where(k) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(where(k) + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& k) {
        const auto& v = raw(k);
        if (!v.is_array()) throw ConfigError(where(k) + ": expected an array of integers");
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError(where(k) + ": expected an array of integers");
            out.push_back(e.get<int>());
        }
        return out;
    }

    /// Reciprocal of an exponent given as a number >= 1 or the string "inf".
    double reciprocal(const std::string& k) {
        const auto& v = raw(k);
        try {
            if (v.is_string()) return exponent_reciprocal(v.get<std::string>());
            if (v.is_number()) {
                const double e = v.get<double>();
                if (!(e >= 1.0)) throw InvalidArgument("must be >= 1");
                return 1.0 / e;
            }
        } catch (const InvalidArgument& e) {
            throw ConfigError(where(k) + ": " + e.what());
        }
        throw ConfigError(where(k) + ": expected a number >= 1 or \"inf\"");
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
        }
    }

    [[nodiscard]] std::string where(const std::string& k) const { return path_ + "." + k; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Runs f, converting argument errors into schema errors located at `path`.
template <class F>
auto located(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const ResolutionError& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ============================================================================
// Config blocks
// ============================================================================

inline TorusGrid parse_grid(ObjectReader r) {
    const int d = r.integer("d", 2);
    const int n = r.integer("n");
    r.finish();
    return located(r.path(), [&] { return TorusGrid(d, n); });
}

inline FieldSpec parse_field(ObjectReader r) {
    const auto name = r.string("name");
    std::map<std::string, double> params;
    if (r.has("params")) {
        const auto& p = r.raw("params");
        if (!p.is_object()) throw ConfigError(r.where("params") + ": expected an object");
        for (const auto& [k, v] : p.items()) {
            if (!v.is_number()) throw ConfigError(r.where("params") + "." + k + ": expected a number");
            params[k] = v.get<double>();
        }
    }
    r.finish();
    return located(r.path(), [&] { return FieldSpec(parse_field_kind(name), params); });
}

inline std::optional<Mollifier> parse_mollifier(ObjectReader& parent, const std::string& key, const TorusGrid& g) {
    if (!parent.has(key)) return std::nullopt;
    ObjectReader r = parent.object(key);
    Mollifier m;
    m.profile = located(r.where("profile"), [&] { return parse_profile(r.string("profile", "gaussian_periodized")); });
    m.delta = r.number("delta");
    r.finish();
    located(r.path(), [&] {
        detail::check_resolvable(m, g);
        return 0;
    });
    return m;
}

inline std::vector<double> parse_schedule(ObjectReader& parent, const std::string& key) {
    const auto& v = parent.raw(key);
    if (v.is_array()) return parent.numbers(key);
    ObjectReader r = parent.object(key);
    const double d0 = r.number("delta0");
    const int levels = r.integer("levels");
    r.finish();
    return located(r.path(), [&] { return dyadic_schedule(d0, levels); });
}

/// Initial data and commutator test functions.
struct Datum {
    std::string kind = "sine";
    std::vector<int> mode;
    double amplitude = 1.0;
    int kmax = 4;
    double value = 0.0;
    std::vector<double> center;
    double radius = 0.25;
    std::string path;

    [[nodiscard]] bool single_mode() const { return kind == "sine" || kind == "cosine"; }
};

inline Datum parse_datum(ObjectReader r, int d) {
    Datum u;
    u.kind = r.string("kind");
    if (u.single_mode()) {
        u.mode = r.has("mode") ? r.integers("mode") : std::vector<int>{1};
        if (u.mode.size() > std::size_t(d)) throw ConfigError(r.where("mode") + ": more entries than dimensions");
        u.mode.resize(std::size_t(d), 0);
        u.amplitude = r.number("amplitude", 1.0);
    } else if (u.kind == "random_smooth") {
        u.kmax = r.integer("kmax", 4);
        u.amplitude = r.number("amplitude", 1.0);
        if (u.kmax < 1) throw ConfigError(r.where("kmax") + ": must be >= 1");
    } else if (u.kind == "constant") {
        u.value = r.number("value");
    } else if (u.kind == "bump") {
        u.center = r.has("center") ? r.numbers("center") : std::vector<double>(std::size_t(d), 0.5);
        if (u.center.size() != std::size_t(d)) throw ConfigError(r.where("center") + ": needs one entry per axis");
        u.radius = r.number("radius", 0.25);
        if (!(u.radius > 0.0 && u.radius <= 0.5)) throw ConfigError(r.where("radius") + ": must lie in (0, 0.5]");
    } else if (u.kind == "file") {
        u.path = r.string("path");
    } else {
        throw ConfigError(r.where("kind") + ": unknown datum '" + u.kind +
                          "' (sine, cosine, random_smooth, constant, bump, file)");
    }
    r.finish();
    return u;
}

/// Trigonometric polynomial with Gaussian coefficients damped by 1/(1+|k|^2),
/// zero mean, scaled to the requested L2 norm.
inline ScalarField random_smooth_field(const TorusGrid& g, std::uint64_t seed, int kmax, double amplitude) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    struct Mode {
        std::array<int, 3> k;
        double a, b;
    };
    std::vector<Mode> modes;
    const int d = g.dim();
    for (int k0 = 0; k0 <= kmax; ++k0) {
        for (int k1 = d >= 2 ? -kmax : 0; k1 <= (d >= 2 ? kmax : 0); ++k1) {
            for (int k2 = d >= 3 ? -kmax : 0; k2 <= (d >= 3 ? kmax : 0); ++k2) {
                // One representative per +-k pair.
                if (k0 == 0 && (k1 < 0 || (k1 == 0 && k2 <= 0))) continue;
                const double damp = 1.0 / (1.0 + k0 * k0 + k1 * k1 + k2 * k2);
                const double a = normal(rng) * damp, b = normal(rng) * damp;
                modes.push_back({{k0, k1, k2}, a, b});
            }
        }
    }
    auto f = ScalarField::sample(g, [&](const Point& x) {
        double s = 0.0;
        for (const auto& m : modes) {
            double phase = 0.0;
            for (int a = 0; a < d; ++a) phase += m.k[std::size_t(a)] * x[std::size_t(a)];
            s += m.a * std::cos(kTwoPi * phase) + m.b * std::sin(kTwoPi * phase);
        }
        return s;
    });
    const double n2 = lp_norm(f, 2.0);
    return n2 > 0.0 ? (amplitude / n2) * f : f;
}

inline ScalarField build_datum(const Datum& u, const TorusGrid& g, std::uint64_t seed) {
    const int d = g.dim();
    if (u.single_mode()) {
        const bool sine = u.kind == "sine";
        return ScalarField::sample(g, [&](const Point& x) {
            double phase = 0.0;
            for (int a = 0; a < d; ++a) phase += u.mode[std::size_t(a)] * x[std::size_t(a)];
            return u.amplitude * (sine ? std::sin(kTwoPi * phase) : std::cos(kTwoPi * phase));
        });
    }
    if (u.kind == "random_smooth") return random_smooth_field(g, seed, u.kmax, u.amplitude);
    if (u.kind == "constant") return ScalarField(g, u.value);
    if (u.kind == "bump") {
        Point c{};
        for (int a = 0; a < d; ++a) c[std::size_t(a)] = u.center[std::size_t(a)];
        return ScalarField::sample(g, [&](const Point& x) {
            const double s = geodesic_distance(std::span<const double>(x.data(), std::size_t(d)),
                                               std::span<const double>(c.data(), std::size_t(d))) /
                             u.radius;
            return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
        });
    }
    auto f = io::read_scalar(u.path);
    if (!(f.grid() == g)) throw ConfigError("datum file '" + u.path + "' lives on a different grid");
    return f;
}

/// |k|^2 of a single-mode datum, used by the heat-kernel gate.
inline double mode_norm_squared(const Datum& u) {
    double s = 0.0;
    for (int k : u.mode) s += double(k) * k;
    return s;
}

inline SolverConfig parse_solver(ObjectReader r, const TorusGrid& g) {
    SolverConfig c;
    c.T_final = r.number("T_final");
    if (!(c.T_final > 0.0)) throw ConfigError(r.where("T_final") + ": must be > 0");
    if (r.has("dt_policy")) {
        ObjectReader p = r.object("dt_policy");
        const auto kind = p.string("kind", "fixed");
        if (kind == "fixed") {
            c.dt_policy.kind = DtPolicy::Kind::fixed;
            c.dt_policy.dt = p.number("dt");
        } else if (kind == "cfl") {
            c.dt_policy.kind = DtPolicy::Kind::cfl;
            c.dt_policy.safety = p.number("safety", 0.8);
            c.dt_policy.dt = p.number("dt_max", c.T_final);
        } else {
            throw ConfigError(p.where("kind") + ": expected \"fixed\" or \"cfl\"");
        }
        if (!(c.dt_policy.dt > 0.0)) throw ConfigError(p.path() + ": step must be > 0");
        if (!(c.dt_policy.safety > 0.0 && c.dt_policy.safety <= 1.0)) {
            throw ConfigError(p.where("safety") + ": must lie in (0, 1]");
        }
        p.finish();
    }
    c.mollify_b = parse_mollifier(r, "mollify_b", g);
    c.mollify_u0 = parse_mollifier(r, "mollify_u0", g);
    c.dealias = r.boolean("dealias", true);
    c.record_every = r.integer("record_every", 1);
    if (c.record_every < 1) throw ConfigError(r.where("record_every") + ": must be >= 1");
    c.no_approximation = r.boolean("no_approximation", false);
    r.finish();
    return c;
}

/// Optional tolerance overrides; only the listed keys are accepted.
inline std::map<std::string, double> parse_tolerances(ObjectReader& parent, std::map<std::string, double> defaults,
                                                      const std::set<std::string>& optional_keys = {}) {
    if (!parent.has("tolerances")) return defaults;
    ObjectReader r = parent.object("tolerances");
    for (auto& [k, v] : defaults) v = r.number(k, v);
    for (const auto& k : optional_keys) {
        if (r.has(k)) defaults[k] = r.number(k);
    }
    r.finish();
    return defaults;
}

// ============================================================================
// Runs
// ============================================================================

struct Gate {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string relation = "<=";
};

inline Gate gate_le(std::string name, double value, double threshold) {
    return {std::move(name), value, threshold, value <= threshold, "<="};
}
inline Gate gate_ge(std::string name, double value, double threshold) {
    return {std::move(name), value, threshold, value >= threshold, ">="};
}

/// Options that come from the command line rather than the config.
struct RunOptions {
    std::optional<std::string> out;
    std::optional<std::int64_t> seed;
    int threads = 1;
    /// When set, the config's kind must equal this.
    std::optional<std::string> expected_kind;
};

/// Collects artifacts in a staging directory.
class RunDirectory {
public:
    explicit RunDirectory(fs::path staging) : staging_(std::move(staging)) { fs::create_directories(staging_); }

    void text(const std::string& name, const std::string& content) {
        const auto p = staging_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        os << content;
        if (!os) throw io::IoError("cannot write " + p.string());
        artifacts_.push_back(name);
    }

    void field(const std::string& name, const ScalarField& f) {
        const auto p = staging_ / name;
        fs::create_directories(p.parent_path());
        io::write_file(p.string(), f);
        artifacts_.push_back(name);
    }

    [[nodiscard]] const std::vector<std::string>& artifacts() const { return artifacts_; }
    [[nodiscard]] const fs::path& staging() const { return staging_; }

private:
    fs::path staging_;
    std::vector<std::string> artifacts_;
};

struct RunResult {
    json results = json::object();
    json grid = nullptr;
    json tolerances = json::object();
    std::vector<Gate> gates;
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
};

/// The effective config: seed override applied, output_dir removed.
struct ParsedHeader {
    std::string kind;
    std::int64_t seed = 0;
    std::optional<std::string> output_dir;
    json effective;
};

inline const std::set<std::string>& known_kinds() {
    static const std::set<std::string> k{"simulate", "commutator", "regime-map", "regime-classify", "field-audit"};
    return k;
}

// ---------------------------------------------------------------- simulate

inline RunResult run_simulate(ObjectReader& r, std::uint64_t seed, RunDirectory& dir) {
    const auto grid = parse_grid(r.object("grid"));
    const auto spec = parse_field(r.object("field"));
    const auto datum = parse_datum(r.object("u0"), grid.dim());
    const auto cfg = parse_solver(r.object("solver"), grid);
    const auto tol = parse_tolerances(r, {{"e1", 1e-8}, {"e2", 1e-8}, {"beta", 1e-8}, {"heat_kernel", 1e-10}},
                                      {"energy"});
    bool snapshots = false;
    if (r.has("outputs")) {
        ObjectReader o = r.object("outputs");
        snapshots = o.boolean("snapshots", false);
        o.finish();
    }
    r.finish();

    const auto u0 = build_datum(datum, grid, seed);
    const auto traj = solve(spec, u0, cfg);

    RunResult out;
    out.grid = {{"d", grid.dim()}, {"n", grid.n()}};
    for (const auto& [k, v] : tol) out.tolerances[k] = v;
    out.notes = traj.notes;

    // Gates refer to the datum the solver actually evolved (mollified when requested).
    const auto& first = traj.diagnostics.front();
    const auto& last = traj.diagnostics.back();
    for (double q : kRecordedExponents) {
        double sup = 0.0;
        for (const auto& rec : traj.diagnostics) sup = std::max(sup, rec.lq_norm(q));
        const std::string name = std::isinf(q) ? "E1_Linf" : "E1_L" + std::to_string(int(q));
        out.gates.push_back(gate_le(name, sup - first.lq_norm(q), tol.at("e1")));
    }
    const double half_e0 = 0.5 * first.lq_norm(2.0) * first.lq_norm(2.0);
    out.gates.push_back(gate_le("E2", last.grad_l2_sq_cum - half_e0, tol.at("e2")));
    for (const auto& beta : cfg.betas) {
        const double b0 = first.beta_integrals.at(beta.name);
        out.gates.push_back(gate_le("beta_" + beta.name, beta_dissipation(traj, beta), tol.at("beta") * std::abs(b0)));
    }
    const double energy_residual = last.energy_lhs - half_e0;
    if (tol.count("energy")) out.gates.push_back(gate_le("energy_balance", std::abs(energy_residual), tol.at("energy")));

    const bool zero_field = spec.kind == FieldKind::constant && spec.param("c1") == 0.0 && spec.param("c2") == 0.0 &&
                            spec.param("c3") == 0.0;
    if (zero_field && datum.single_mode() && !cfg.mollify_u0) {
        const double decay = std::exp(-4.0 * kPi * kPi * mode_norm_squared(datum) * cfg.T_final);
        const double err = lp_norm(traj.states.back() - decay * u0, INFINITY);
        out.gates.push_back(gate_le("heat_kernel", err, tol.at("heat_kernel")));
    }

    out.results = {{"steps", traj.steps},
                   {"T_final", traj.times.back()},
                   {"max_courant", traj.max_courant},
                   {"energy_residual", energy_residual},
                   {"dissipation_integral", last.grad_l2_sq_cum},
                   {"initial_energy", half_e0},
                   {"snapshots", traj.states.size()}};
    if (traj.velocity_mollifier) {
        out.results["velocity_mollifier"] = {{"profile", to_string(traj.velocity_mollifier->profile)},
                                             {"delta", traj.velocity_mollifier->delta}};
    }

    std::string csv = "t,L1,L2,L4,Linf,grad_l2_sq_cum,energy_lhs,mean";
    for (const auto& b : cfg.betas) csv += ",beta_" + b.name;
    csv += "\n";
    for (const auto& rec : traj.diagnostics) {
        csv += fmt(rec.t);
        for (double v : rec.lq) csv += "," + fmt(v);
        csv += "," + fmt(rec.grad_l2_sq_cum) + "," + fmt(rec.energy_lhs) + "," + fmt(rec.mean);
        for (const auto& b : cfg.betas) csv += "," + fmt(rec.beta_integrals.at(b.name));
        csv += "\n";
    }
    dir.text("diagnostics.csv", csv);
    dir.field("final.torf", traj.states.back());
    if (snapshots) {
        std::string times = "index,t\n";
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            char name[48];
            std::snprintf(name, sizeof name, "snapshots/state_%05zu.torf", i);
            dir.field(name, traj.states[i]);
            times += std::to_string(i) + "," + fmt(traj.times[i]) + "\n";
        }
        dir.text("snapshots/times.csv", times);
    }
    return out;
}

// ---------------------------------------------------------------- commutator

inline RunResult run_commutator(ObjectReader& r, std::uint64_t seed, RunDirectory& dir) {
    const auto grid = parse_grid(r.object("grid"));
    const auto spec = parse_field(r.object("field"));
    CommutatorStudyConfig cfg;
    cfg.b_spec = spec;
    cfg.delta_schedule = parse_schedule(r, "delta_schedule");
    cfg.profile = located(r.where("profile"), [&] { return parse_profile(r.string("profile", "gaussian_periodized")); });
    cfg.norm = located(r.where("norm"), [&] { return parse_commutator_norm(r.string("norm", "L1_spacetime")); });
    located(r.where("delta_schedule"), [&] {
        validate_schedule(cfg.delta_schedule, grid);
        for (double d : cfg.delta_schedule) detail::check_resolvable({cfg.profile, d}, grid);
        return 0;
    });

    ObjectReader wr = r.object("w");
    const bool from_solver = wr.string("kind") == "trajectory";
    std::optional<Datum> datum;
    std::optional<SolverConfig> scfg;
    double T = 1.0;
    int samples = 1;
    if (from_solver) {
        datum = parse_datum(wr.object("u0"), grid.dim());
        scfg = parse_solver(wr.object("solver"), grid);
        wr.finish();
    } else {
        datum = parse_datum(wr, grid.dim());
        T = r.number("T", 1.0);
        samples = r.integer("time_samples", 1);
        if (!(T > 0.0)) throw ConfigError(r.where("T") + ": must be > 0");
        if (samples < 1) throw ConfigError(r.where("time_samples") + ": must be >= 1");
    }
    const auto tol = parse_tolerances(r, {}, {"min_rate", "max_ratio"});
    r.finish();

    const auto w0 = build_datum(*datum, grid, seed);
    WSource src;
    bool steady = false;
    if (from_solver) {
        src = WSource::from_trajectory(solve(spec, w0, *scfg));
    } else {
        src = WSource::steady(w0, T, samples);
        steady = true;
    }
    const auto table = convergence_study(cfg, src, steady);

    RunResult out;
    out.grid = {{"d", grid.dim()}, {"n", grid.n()}};
    for (const auto& [k, v] : tol) out.tolerances[k] = v;
    const bool exact = table.verdict == "exact";
    out.gates.push_back({"decay_verdict", exact || table.verdict == "decay" ? 1.0 : 0.0, 1.0,
                         table.verdict != "no-decay", "=="});
    out.gates.push_back({"strictly_decreasing", exact || table.strictly_decreasing ? 1.0 : 0.0, 1.0,
                         exact || table.strictly_decreasing, "=="});
    if (tol.count("min_rate") && !exact) out.gates.push_back(gate_ge("fitted_rate", table.fitted_rate, tol.at("min_rate")));
    if (tol.count("max_ratio") && !exact) out.gates.push_back(gate_le("max_ratio", table.max_ratio(), tol.at("max_ratio")));

    out.results = {{"verdict", table.verdict},
                   {"norm", to_string(table.norm)},
                   {"profile", to_string(cfg.profile)},
                   {"fitted_rate", num(table.fitted_rate)},
                   {"strictly_decreasing", table.strictly_decreasing},
                   {"time_nodes", src.times.size()}};
    std::string csv = "delta,norm,ratio\n";
    for (const auto& row : table.rows) csv += fmt(row.delta) + "," + fmt(row.norm) + "," + fmt(row.ratio) + "\n";
    dir.text("decay.csv", csv);
    return out;
}

// ---------------------------------------------------------------- regime

inline json to_json(const RegimeReport& r) {
    auto cite = [](const std::vector<Citation>& cs) {
        json a = json::array();
        for (const auto& c : cs) a.push_back({{"id", c.id}, {"anchor", c.anchor}});
        return a;
    };
    return {{"query",
             {{"d", r.query.d}, {"inv_alpha", r.query.inv_alpha}, {"inv_p", r.query.inv_p}, {"inv_q", r.query.inv_q}}},
            {"product_defined", r.product_defined},
            {"distributional_exists", r.distributional_exists},
            {"parabolic_exists", r.parabolic_exists},
            {"parabolic_unique", r.parabolic_unique},
            {"all_distributional_parabolic", r.all_distributional_parabolic},
            {"known_nonuniqueness", cite(r.known_nonuniqueness)},
            {"open_questions", r.open_questions},
            {"citations", cite(r.citations)}};
}

inline RunResult run_regime_classify(ObjectReader& r, RunDirectory& dir) {
    RegimeQuery q;
    q.d = r.integer("d");
    q.inv_alpha = r.has("alpha") ? r.reciprocal("alpha") : 0.0;
    q.inv_p = r.reciprocal("p");
    q.inv_q = r.reciprocal("q");
    r.finish();
    const auto rep = located(r.path(), [&] { return classify(q); });
    RunResult out;
    out.results = to_json(rep);
    out.gates.push_back({"coherence", rep.coherent() ? 1.0 : 0.0, 1.0, rep.coherent(), "=="});
    dir.text("report.json", out.results.dump(2) + "\n");
    return out;
}

inline RunResult run_regime_map(ObjectReader& r, RunDirectory& dir, int threads) {
    const int d = r.integer("d");
    const double inv_alpha = r.has("alpha") ? r.reciprocal("alpha") : 0.0;
    const int res = r.integer("resolution", 64);
    r.finish();
    const auto map = located(r.path(), [&] { return emit_region_map(d, inv_alpha, res, threads); });
    std::size_t incoherent = 0;
    std::map<unsigned, std::size_t> counts;
    for (const auto& c : map.cells) {
        incoherent += !c.coherent();
        ++counts[c.flag_mask()];
    }
    RunResult out;
    out.gates.push_back(gate_le("incoherent_cells", double(incoherent), 0.0));
    json regions = json::object();
    for (const auto& [mask, n] : counts) regions[detail::region_label(mask)] = n;
    out.results = {{"d", d}, {"inv_alpha", inv_alpha}, {"resolution", res}, {"cells_per_region", regions}};
    dir.text("region_map.svg", region_map_svg(map));
    dir.text("region_map.csv", region_map_csv(map));
    return out;
}

// ---------------------------------------------------------------- fields

/// Short formatting for gate names.
inline std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string card_value(double v) { return std::isinf(v) ? "inf" : fmt(v); }

/// Human-readable catalog with default parameters and integrability cards.
inline std::string catalog_table() {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-18s  %-62s  %-20s  %s\n", "name", "default parameters", "p_finite_below",
                  "alpha_time");
    os << line;
    for (auto k : kAllFieldKinds) {
        const FieldSpec s(k);
        std::string params;
        for (const auto& [key, v] : default_params(k)) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%s%s=%g", params.empty() ? "" : " ", key.c_str(), v);
            params += buf;
        }
        const auto card = s.card();
        std::string p = card_value(card.p_finite_below), a = card_value(card.alpha_time);
        if (k == FieldKind::power_singularity) p = "2/(a-1) = " + p;
        if (k == FieldKind::alternating_shear) a = "1/beta = " + a;
        std::snprintf(line, sizeof line, "%-18s  %-62s  %-20s  %s\n", to_string(k).c_str(), params.c_str(), p.c_str(),
                      a.c_str());
        os << line;
    }
    return os.str();
}

inline RunResult run_field_audit(ObjectReader& r, RunDirectory& dir) {
    const auto grid = parse_grid(r.object("grid"));
    std::vector<FieldSpec> specs;
    if (r.has("fields")) {
        const auto& arr = r.raw("fields");
        if (!arr.is_array()) throw ConfigError(r.where("fields") + ": expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            specs.push_back(parse_field(ObjectReader(arr[i], r.where("fields") + "[" + std::to_string(i) + "]")));
        }
    } else {
        for (auto k : kAllFieldKinds) specs.emplace_back(k);
    }
    const auto times = r.has("times") ? r.numbers("times") : std::vector<double>{0.0};
    std::vector<double> ps;
    std::vector<int> resolutions;
    if (r.has("integrability")) {
        ObjectReader ir = r.object("integrability");
        ps = ir.numbers("p");
        resolutions = ir.integers("resolutions");
        ir.finish();
        if (resolutions.size() < 3) throw ConfigError(r.where("integrability.resolutions") + ": need at least 3");
        for (double p : ps) {
            if (!(p >= 1.0)) throw ConfigError(r.where("integrability.p") + ": exponents must be >= 1");
        }
    }
    const auto tol = parse_tolerances(r, {{"divergence", 1e-8}});
    r.finish();

    RunResult out;
    out.grid = {{"d", grid.dim()}, {"n", grid.n()}};
    for (const auto& [k, v] : tol) out.tolerances[k] = v;
    std::string csv = "name,t,divergence_max,projection_perturbation,p_finite_below,alpha_time,warnings\n";
    json entries = json::array();
    for (const auto& s : specs) {
        for (double t : times) {
            const auto inst = instantiate(s, grid, t);
            std::string warn;
            for (const auto& w : inst.meta.warnings) {
                warn += (warn.empty() ? "" : "; ") + w;
                out.warnings.push_back(to_string(s.kind) + ": " + w);
            }
            std::replace(warn.begin(), warn.end(), ',', ' ');
            csv += to_string(s.kind) + "," + fmt(t) + "," + fmt(inst.meta.divergence_max) + "," +
                   fmt(inst.meta.projection_perturbation) + "," + card_value(inst.meta.card.p_finite_below) + "," +
                   card_value(inst.meta.card.alpha_time) + "," + warn + "\n";
            out.gates.push_back(gate_le("divergence_" + to_string(s.kind) + "_t" + label(t), inst.meta.divergence_max,
                                        tol.at("divergence")));
        }
        entries.push_back({{"name", to_string(s.kind)},
                           {"p_finite_below", num(s.card().p_finite_below)},
                           {"alpha_time", num(s.card().alpha_time)}});
    }
    dir.text("audit.csv", csv);

    if (!ps.empty()) {
        std::string icsv = "name,p,slope,trend,expected\n";
        for (const auto& s : specs) {
            const double pstar = s.card().p_finite_below;
            for (double p : ps) {
                const auto rep = estimate_integrability(s, p, resolutions);
                // Only exponents at least one unit away from p* are gated.
                std::string expected = "ungated";
                if (p <= pstar - 1.0) expected = "converging";
                if (p >= pstar + 1.0) expected = "diverging";
                icsv += to_string(s.kind) + "," + fmt(p) + "," + fmt(rep.slope) + "," + to_string(rep.trend) + "," +
                        expected + "\n";
                if (expected != "ungated") {
                    const bool ok = to_string(rep.trend) == expected;
                    out.gates.push_back({"trend_" + to_string(s.kind) + "_p" + label(p), rep.slope, pstar, ok,
                                         "trend " + expected});
                }
            }
        }
        dir.text("integrability.csv", icsv);
    }
    out.results = {{"fields", entries}, {"times", times}};
    return out;
}

// ============================================================================
// Driver
// ============================================================================

inline ParsedHeader parse_header(const json& config, const RunOptions& opt) {
    if (!config.is_object()) throw ConfigError("config: expected a JSON object");
    ParsedHeader h;
    if (!config.contains("kind") || !config["kind"].is_string()) throw ConfigError("config.kind: required string");
    h.kind = config["kind"].get<std::string>();
    if (!known_kinds().count(h.kind)) {
        throw ConfigError("config.kind: unknown kind '" + h.kind +
                          "' (simulate, commutator, regime-map, regime-classify, field-audit)");
    }
    if (opt.expected_kind && *opt.expected_kind != h.kind) {
        throw ConfigError("config.kind: this subcommand expects kind '" + *opt.expected_kind + "', got '" + h.kind +
                          "'");
    }
    h.effective = config;
    if (config.contains("seed") && !config["seed"].is_number_integer()) throw ConfigError("config.seed: expected an integer");
    h.seed = config.value("seed", std::int64_t{0});
    if (opt.seed) h.seed = *opt.seed;
    h.effective["seed"] = h.seed;
    if (config.contains("output_dir")) {
        if (!config["output_dir"].is_string()) throw ConfigError("config.output_dir: expected a string");
        h.output_dir = config["output_dir"].get<std::string>();
        h.effective.erase("output_dir");
    }
    return h;
}

inline json gates_json(const std::vector<Gate>& gates) {
    json a = json::array();
    for (const auto& g : gates) {
        a.push_back({{"name", g.name}, {"value", num(g.value)}, {"threshold", num(g.threshold)},
                     {"relation", g.relation}, {"pass", g.pass}});
    }
    return a;
}

/// Replaces `target` by `staging`. An existing target is only replaced when it
/// is itself a run directory (contains manifest.json) or empty.
inline void publish(const fs::path& staging, const fs::path& target) {
    if (fs::exists(target)) {
        const bool is_run = fs::exists(target / "manifest.json");
        const bool empty = fs::is_directory(target) && fs::is_empty(target);
        if (!is_run && !empty) {
            throw io::IoError("output directory '" + target.string() + "' exists and is not a previous run");
        }
        fs::remove_all(target);
    }
    fs::rename(staging, target);
}

/// Executes one config and publishes the run directory. Returns the exit code;
/// messages go to `err`.
inline int run(const json& config, const RunOptions& opt, std::ostream& err = std::cerr) {
    ParsedHeader header;
    try {
        header = parse_header(config, opt);
    } catch (const ConfigError& e) {
        err << "schema error: " << e.what() << "\n";
        return kSchemaError;
    }
    const std::string hash = hex64(fnv1a64(header.effective.dump()));
    const fs::path target = opt.out ? fs::path(*opt.out)
                            : header.output_dir ? fs::path(*header.output_dir)
                                                : fs::path("runs") / (header.kind + "-" + hash.substr(0, 8));
    fs::path staging;
    try {
        const auto parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
        fs::create_directories(parent);
        staging = parent / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()));
        fs::remove_all(staging);
    } catch (const std::exception& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoError;
    }

    json manifest = {{"tool", "adlab"},
                     {"kind", header.kind},
                     {"config_hash", "fnv1a64:" + hash},
                     {"config", header.effective},
                     {"seed", header.seed},
                     {"threads", opt.threads}};
    const auto start = std::chrono::steady_clock::now();
    int code = kOk;
    RunResult result;
    auto cleanup = [&] {
        std::error_code ec;
        fs::remove_all(staging, ec);
    };
    try {
        RunDirectory dir(staging);
        ObjectReader r(config, "config");
        r.has("kind");
        r.has("seed");
        r.has("output_dir");
        const auto seed = static_cast<std::uint64_t>(header.seed);
        if (header.kind == "simulate") {
            result = run_simulate(r, seed, dir);
        } else if (header.kind == "commutator") {
            result = run_commutator(r, seed, dir);
        } else if (header.kind == "regime-classify") {
            result = run_regime_classify(r, dir);
        } else if (header.kind == "regime-map") {
            result = run_regime_map(r, dir, opt.threads);
        } else {
            result = run_field_audit(r, dir);
        }
        bool all = true;
        for (const auto& g : result.gates) all = all && g.pass;
        code = all ? kOk : kGateFailed;
        manifest["artifacts"] = dir.artifacts();
    } catch (const ConfigError& e) {
        err << "schema error: " << e.what() << "\n";
        cleanup();
        return kSchemaError;
    } catch (const ResolutionError& e) {
        err << "schema error: " << e.what() << "\n";
        cleanup();
        return kSchemaError;
    } catch (const InvalidArgument& e) {
        err << "schema error: " << e.what() << "\n";
        cleanup();
        return kSchemaError;
    } catch (const NumericalAbort& e) {
        err << "numerical abort at step " << e.step << ", t = " << e.t << ": " << e.what() << "\n";
        manifest["abort"] = {{"step", e.step}, {"t", e.t}, {"message", e.what()}};
        code = kNumericalAbort;
    } catch (const io::IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        cleanup();
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        cleanup();
        return kIoError;
    } catch (const json::exception& e) {
        err << "schema error: " << e.what() << "\n";
        cleanup();
        return kSchemaError;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["grid"] = result.grid;
    manifest["tolerances"] = result.tolerances;
    manifest["wall_time_s"] = wall;
    manifest["gates"] = gates_json(result.gates);
    manifest["all_pass"] = code == kOk;
    manifest["exit_code"] = code;
    manifest["results"] = result.results;
    manifest["notes"] = result.notes;
    manifest["warnings"] = result.warnings;
    if (!manifest.contains("artifacts")) manifest["artifacts"] = json::array();
    try {
        fs::create_directories(staging);
        std::ofstream os(staging / "manifest.json");
        os << manifest.dump(2) << "\n";
        if (!os) throw io::IoError("cannot write manifest");
        os.close();
        publish(staging, target);
    } catch (const std::exception& e) {
        err << "I/O error: " << e.what() << "\n";
        cleanup();
        return kIoError;
    }
    for (const auto& g : result.gates) {
        if (!g.pass) err << "gate failed: " << g.name << " = " << g.value << " (" << g.relation << " " << g.threshold << ")\n";
    }
    return code;
}

/// Reads and parses a config file; exits via the return code on failure.
inline int run_file(const std::string& path, const RunOptions& opt, std::ostream& err = std::cerr) {
    std::ifstream is(path);
    if (!is) {
        err << "I/O error: cannot read config '" << path << "'\n";
        return kIoError;
    }
    json config;
    try {
        config = json::parse(is);
    } catch (const json::parse_error& e) {
        err << "schema error: " << path << " is not valid JSON: " << e.what() << "\n";
        return kSchemaError;
    }
    return run(config, opt, err);
}

}  // namespace adlab::experiment

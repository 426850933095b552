#pragma once

/// @file commutator.hpp
/// @brief Mollification commutators r = b . grad(w * rho) - (b . grad w) * rho,
/// their divergence form, and dyadic convergence studies.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "adlab/field_library.hpp"
#include "adlab/mollifier.hpp"
#include "adlab/solver.hpp"
#include "adlab/spectral.hpp"

namespace adlab {

namespace detail {

inline void check_commutator_grids(const VectorField& b, const ScalarField& w) {
    if (!(b.grid() == w.grid())) throw GridMismatch("commutator: b and w live on different grids");
}

}  // namespace detail

/// Direct form b . grad(w * rho) - (b . grad w) * rho.
inline ScalarField commutator(const VectorField& b, const ScalarField& w, const Mollifier& m) {
    detail::check_commutator_grids(b, w);
    const auto first = b.dot(gradient(mollify(w, m)));
    const auto second = mollify(b.dot(gradient(w)), m);
    return first - second;
}

/// Divergence form div[b (w * rho) - (b w) * rho].
inline ScalarField commutator_divform(const VectorField& b, const ScalarField& w, const Mollifier& m) {
    detail::check_commutator_grids(b, w);
    const auto wm = mollify(w, m);
    VectorField flux(b.grid());
    for (int a = 0; a < b.dim(); ++a) flux[a] = b[a] * wm - mollify(b[a] * w, m);
    return divergence(flux);
}

/// (w * rho) div b - (w div b) * rho; the divergence form minus the direct form.
inline ScalarField commutator_divb_correction(const VectorField& b, const ScalarField& w, const Mollifier& m) {
    detail::check_commutator_grids(b, w);
    const auto divb = divergence(b);
    return mollify(w, m) * divb - mollify(w * divb, m);
}

// ============================================================================
// Convergence studies
// ============================================================================

enum class CommutatorNorm { l1_spacetime, l2_hminus1 };

inline std::string to_string(CommutatorNorm n) {
    return n == CommutatorNorm::l1_spacetime ? "L1_spacetime" : "L2_Hminus1";
}

inline CommutatorNorm parse_commutator_norm(const std::string& s) {
    if (s == "L1_spacetime") return CommutatorNorm::l1_spacetime;
    if (s == "L2_Hminus1") return CommutatorNorm::l2_hminus1;
    throw InvalidArgument("unknown commutator norm '" + s + "'");
}

/// Time nodes, rectangle weights and the w state at each node.
struct WSource {
    std::vector<double> times;
    std::vector<double> weights;
    std::vector<ScalarField> states;

    /// A time-independent w sampled at the midpoints of `samples` cells of [0, T].
    static WSource steady(const ScalarField& w, double T, int samples = 1) {
        if (samples < 1 || !(T > 0.0)) throw InvalidArgument("WSource: need samples >= 1 and T > 0");
        WSource s;
        for (int i = 0; i < samples; ++i) {
            s.times.push_back((i + 0.5) * T / samples);
            s.weights.push_back(T / samples);
            s.states.push_back(w);
        }
        return s;
    }

    /// Left-rectangle rule on the recorded snapshots (the last snapshot closes the interval).
    static WSource from_trajectory(const Trajectory& tr) {
        if (tr.states.size() < 2) throw InvalidArgument("WSource: trajectory needs at least two snapshots");
        WSource s;
        for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) {
            s.times.push_back(tr.times[i]);
            s.weights.push_back(tr.times[i + 1] - tr.times[i]);
            s.states.push_back(tr.states[i]);
        }
        return s;
    }
};

struct CommutatorStudyConfig {
    FieldSpec b_spec;
    std::vector<double> delta_schedule;
    MollifierProfile profile = MollifierProfile::gaussian_periodized;
    CommutatorNorm norm = CommutatorNorm::l1_spacetime;
};

struct DecayRow {
    double delta = 0.0;
    double norm = 0.0;
    /// norm_j / norm_{j-1}; NaN on the first row.
    double ratio = std::numeric_limits<double>::quiet_NaN();
};

struct DecayTable {
    std::vector<DecayRow> rows;
    CommutatorNorm norm = CommutatorNorm::l1_spacetime;
    /// Least-squares slope of log norm against log delta; NaN when exact.
    double fitted_rate = std::numeric_limits<double>::quiet_NaN();
    /// "decay", "no-decay" or "exact".
    std::string verdict;
    bool strictly_decreasing = false;

    [[nodiscard]] double max_ratio() const {
        double m = -INFINITY;
        for (std::size_t i = 1; i < rows.size(); ++i) m = std::max(m, rows[i].ratio);
        return m;
    }
};

inline void validate_schedule(std::span<const double> deltas, const TorusGrid& g) {
    if (deltas.size() < 2) throw ConfigError("delta_schedule: need at least two levels");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0)) throw ConfigError("delta_schedule: entries must be positive");
        if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ConfigError("delta_schedule: must be strictly decreasing");
    }
    if (deltas.back() < 2.0 * g.spacing()) {
        throw ResolutionError("delta_schedule: smallest delta " + std::to_string(deltas.back()) +
                              " is below 2 * spacing on N = " + std::to_string(g.n()));
    }
}

/// Builds the decay table: verdict, monotonicity and fitted rate.
inline DecayTable summarize_decay(std::vector<DecayRow> rows, CommutatorNorm norm) {
    DecayTable t;
    t.norm = norm;
    t.rows = std::move(rows);
    bool exact = true;
    for (auto& r : t.rows) exact = exact && r.norm <= 1e-12;
    for (std::size_t i = 1; i < t.rows.size(); ++i) t.rows[i].ratio = t.rows[i].norm / t.rows[i - 1].norm;
    if (exact) {
        t.verdict = "exact";
        return t;
    }
    t.strictly_decreasing = true;
    bool slack_exceeded = false;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        t.strictly_decreasing = t.strictly_decreasing && t.rows[i].ratio < 1.0;
        slack_exceeded = slack_exceeded || !(t.rows[i].ratio <= 1.2);
    }
    const std::size_t first = t.rows.size() >= 5 ? 1 : 0;
    std::vector<double> d, n;
    for (std::size_t i = first; i < t.rows.size(); ++i) {
        d.push_back(t.rows[i].delta);
        n.push_back(t.rows[i].norm);
    }
    t.fitted_rate = loglog_slope(d, n);
    t.verdict = slack_exceeded || !(t.fitted_rate > 0.0) ? "no-decay" : "decay";
    return t;
}

/// Space-time norm of r^delta over the source's time nodes.
inline double commutator_spacetime_norm(const Velocity& vel, const WSource& src, const Mollifier& m,
                                        CommutatorNorm norm, bool steady_source = false) {
    double total = 0.0;
    std::optional<double> cached;
    for (std::size_t i = 0; i < src.states.size(); ++i) {
        double v;
        if (cached && steady_source && vel.is_steady()) {
            v = *cached;
        } else {
            const auto r = commutator(vel.at(src.times[i]), src.states[i], m);
            v = norm == CommutatorNorm::l1_spacetime ? lp_norm(r, 1.0) : std::pow(h_norm(r, -1), 2);
            cached = v;
        }
        total += src.weights[i] * v;
    }
    return norm == CommutatorNorm::l1_spacetime ? total : std::sqrt(total);
}

/// Evaluates the chosen norm at every delta. The velocity is the unmollified
/// grid representative of b_spec (Leray-projected for singular entries).
inline DecayTable convergence_study(const CommutatorStudyConfig& cfg, const WSource& src, bool steady_source = false) {
    if (src.states.empty()) throw ConfigError("convergence_study: empty w source");
    const TorusGrid& g = src.states.front().grid();
    validate_schedule(cfg.delta_schedule, g);
    if (cfg.b_spec.time_dependent() && src.times.size() > 1) {
        double widest = 0.0;
        for (double w : src.weights) widest = std::max(widest, w);
        if (widest > 0.5 * cfg.b_spec.param("period")) {
            throw ConfigError("convergence_study: time grid coarser than half the field modulation period");
        }
    }
    const auto vel = Velocity::from_spec(cfg.b_spec, g);
    std::vector<DecayRow> rows;
    for (double delta : cfg.delta_schedule) {
        const Mollifier m{cfg.profile, delta};
        rows.push_back({delta, commutator_spacetime_norm(vel, src, m, cfg.norm, steady_source)});
    }
    return summarize_decay(std::move(rows), cfg.norm);
}

// ============================================================================
// Energy identity of a mollified trajectory
// ============================================================================

struct EnergyCoupling {
    double delta = 0.0;
    /// 1/2 ||u^d(T)||^2 + int ||grad u^d||^2 - 1/2 ||u^d(0)||^2.
    double energy_residual = 0.0;
    /// int int r^d u^d.
    double commutator_pairing = 0.0;
};

/// For divergence-free b the mollified solution obeys
/// 1/2 d/dt ||u^d||^2 + ||grad u^d||^2 = int r^d u^d; both sides are integrated
/// in time with the composite Simpson/trapezoid weights over the snapshots.
inline EnergyCoupling energy_commutator_coupling(const Trajectory& tr, const Velocity& vel, const Mollifier& m) {
    if (tr.states.size() < 3) throw InvalidArgument("energy_commutator_coupling: need at least three snapshots");
    const auto w = detail::time_weights(tr.times);
    EnergyCoupling out;
    out.delta = m.delta;
    double dissipation = 0.0, pairing = 0.0;
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto ud = mollify(tr.states[i], m);
        const auto r = commutator(vel.at(tr.times[i], i + 1 == tr.states.size()), tr.states[i], m);
        dissipation += w[i] * gradient_l2_squared(forward(ud));
        pairing += w[i] * (r * ud).integral();
    }
    const double e0 = 0.5 * std::pow(lp_norm(mollify(tr.states.front(), m), 2.0), 2);
    const double eT = 0.5 * std::pow(lp_norm(mollify(tr.states.back(), m), 2.0), 2);
    out.energy_residual = eT + dissipation - e0;
    out.commutator_pairing = pairing;
    return out;
}

}  // namespace adlab

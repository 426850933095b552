#pragma once

/// @file solver.hpp
/// @brief Integrating-factor pseudo-spectral solver for d_t u + div(b u) = lap u.
///
/// Diffusion is applied exactly through exp(-4 pi^2 |k|^2 dt); the advection
/// term -div(b u) is formed pseudo-spectrally and advanced with the Lawson
/// (integrating-factor) variant of classical RK4. The cumulative dissipation
/// integral is carried as an extra ODE variable through the same RK stages.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adlab/field_library.hpp"
#include "adlab/mollifier.hpp"
#include "adlab/spectral.hpp"

namespace adlab {

// ============================================================================
// Convex integrands
// ============================================================================

struct BetaFunction {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

inline BetaFunction beta_quadratic() {
    return {"quadratic", [](double s) { return 0.5 * s * s; }, [](double s) { return s; }};
}

/// Primitive of arctan vanishing at 0: s atan(s) - log(1 + s^2) / 2.
inline BetaFunction beta_arctan() {
    return {"arctan", [](double s) { return s * std::atan(s) - 0.5 * std::log1p(s * s); },
            [](double s) { return std::atan(s); }};
}

inline std::vector<BetaFunction> registered_betas() { return {beta_quadratic(), beta_arctan()}; }

/// Three-point convexity spot check on a fixed set of triples.
inline bool passes_convexity_check(const BetaFunction& b) {
    static constexpr double triples[][2] = {{-2.0, 1.0}, {-0.5, 0.5}, {0.0, 3.0}, {-3.0, -0.1}};
    for (const auto& t : triples) {
        const double mid = 0.5 * (t[0] + t[1]);
        const double chord = 0.5 * (b.value(t[0]) + b.value(t[1]));
        if (b.value(mid) > chord + 1e-12 * (1.0 + std::abs(chord))) return false;
    }
    return true;
}

// ============================================================================
// Configuration and records
// ============================================================================

struct DtPolicy {
    enum class Kind { fixed, cfl };
    Kind kind = Kind::fixed;
    /// Fixed step, or the upper bound on the step under the CFL policy.
    double dt = 1e-3;
    /// Courant limit sigma: dt * max|b| / spacing <= sigma.
    double safety = 0.8;
};

struct SolverConfig {
    double T_final = 0.1;
    DtPolicy dt_policy;
    std::optional<Mollifier> mollify_b;
    std::optional<Mollifier> mollify_u0;
    bool dealias = true;
    int record_every = 1;
    /// Run rough fields without the mollified pipeline.
    bool no_approximation = false;
    std::vector<BetaFunction> betas = registered_betas();
};

/// Norm exponents recorded per step, in order 1, 2, 4, infinity.
inline constexpr double kRecordedExponents[] = {1.0, 2.0, 4.0, INFINITY};

struct DiagnosticsRecord {
    double t = 0.0;
    std::array<double, 4> lq{};
    double grad_l2_sq_cum = 0.0;
    double energy_lhs = 0.0;
    double mean = 0.0;
    std::map<std::string, double> beta_integrals;

    [[nodiscard]] double lq_norm(double q) const {
        for (std::size_t i = 0; i < 4; ++i) {
            if (kRecordedExponents[i] == q) return lq[i];
        }
        throw InvalidArgument("DiagnosticsRecord: exponent not recorded");
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ScalarField> states;
    /// One record per step, starting at t = 0.
    std::vector<DiagnosticsRecord> diagnostics;
    std::size_t steps = 0;
    double max_courant = 0.0;
    std::optional<Mollifier> velocity_mollifier;
    std::vector<std::string> notes;
};

// ============================================================================
// Velocity timelines
// ============================================================================

/// Rough entries: unbounded in space or in time.
inline bool is_rough(const FieldSpec& s) {
    return (s.kind == FieldKind::power_singularity && s.param("a") > 1.0) ||
           (s.kind == FieldKind::alternating_shear && s.param("beta") > 0.0);
}

/// b(t) on a fixed grid, optionally mollified in space.
class Velocity {
public:
    static Velocity from_spec(const FieldSpec& s, const TorusGrid& g, std::optional<Mollifier> m = {}) {
        Velocity v(g);
        v.spec_ = s;
        v.mollifier_ = m;
        if (!s.time_dependent()) v.cache_ = v.build(0.0, false);
        return v;
    }

    static Velocity steady(VectorField b) {
        Velocity v(b.grid());
        v.cache_ = std::move(b);
        return v;
    }

    [[nodiscard]] const TorusGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] bool is_steady() const noexcept { return cache_.has_value(); }
    [[nodiscard]] const std::optional<Mollifier>& mollifier() const noexcept { return mollifier_; }

    [[nodiscard]] VectorField at(double t, bool left_limit = false) const {
        if (cache_) return *cache_;
        return build(t, left_limit);
    }

    /// Instant at or before t = 0 where |b| blows up, if any.
    [[nodiscard]] std::optional<double> singular_time() const {
        if (spec_ && spec_->kind == FieldKind::alternating_shear && spec_->param("beta") > 0.0) {
            return spec_->param("t_singular");
        }
        return std::nullopt;
    }

    /// Interior times in (0, T) where b jumps; steps are aligned to them.
    [[nodiscard]] std::vector<double> breakpoints(double T) const {
        return spec_ ? switch_times(*spec_, T) : std::vector<double>{};
    }

private:
    explicit Velocity(const TorusGrid& g) : grid_(g) {}

    [[nodiscard]] VectorField build(double t, bool left_limit) const {
        auto b = instantiate(*spec_, grid_, t, left_limit).b;
        if (mollifier_) b = mollify(b, *mollifier_);
        return b;
    }

    TorusGrid grid_;
    std::optional<FieldSpec> spec_;
    std::optional<Mollifier> mollifier_;
    std::optional<VectorField> cache_;
};

// ============================================================================
// Stepper
// ============================================================================

namespace detail {

/// Precomputed symbols for one grid.
struct SpectralOps {
    TorusGrid grid;
    std::vector<double> lap;                    // -4 pi^2 |k|^2, Nyquist dropped
    std::array<std::vector<double>, 3> dk;      // 2 pi k_a, Nyquist dropped
    std::vector<unsigned char> keep;            // two-thirds mask

    explicit SpectralOps(const TorusGrid& g) : grid(g), lap(g.size()), keep(g.size(), 1) {
        const int n = g.n(), d = g.dim();
        for (int a = 0; a < d; ++a) dk[a].resize(g.size());
        for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& k) {
            lap[idx] = laplacian_symbol(k, n, d);
            for (int a = 0; a < d; ++a) {
                dk[a][idx] = kTwoPi * (k[a] == n / 2 ? 0 : k[a]);
                if (3 * std::abs(k[a]) > n) keep[idx] = 0;
            }
        });
    }

    [[nodiscard]] double dissipation(const SpectralField& U) const {
        std::vector<double> terms(U.grid().size());
        for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = -lap[i] * std::norm(U[i]);
        return pairwise_sum(terms);
    }

    /// -div(b u) in spectral space.
    [[nodiscard]] SpectralField advection(const SpectralField& U, const VectorField& b, bool dealias_on) const {
        const ScalarField u = inverse(U);
        SpectralField out(grid);
        for (int a = 0; a < grid.dim(); ++a) {
            const SpectralField F = forward(b[a] * u);
            for (std::size_t i = 0; i < grid.size(); ++i) out[i] -= cplx(0.0, dk[a][i]) * F[i];
        }
        if (dealias_on) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (!keep[i]) out[i] = 0.0;
            }
        }
        return out;
    }
};

inline DiagnosticsRecord make_record(double t, const ScalarField& u, double cum,
                                     const std::vector<BetaFunction>& betas) {
    DiagnosticsRecord r;
    r.t = t;
    for (std::size_t i = 0; i < 4; ++i) r.lq[i] = lp_norm(u, kRecordedExponents[i]);
    r.grad_l2_sq_cum = cum;
    r.energy_lhs = 0.5 * r.lq[1] * r.lq[1] + cum;
    r.mean = u.integral();
    for (const auto& b : betas) r.beta_integrals[b.name] = u.map(b.value).integral();
    return r;
}

/// Step boundaries on [0, T] with every breakpoint hit exactly; uniform inside segments.
inline std::vector<double> fixed_time_grid(double T, double dt, const std::vector<double>& breaks) {
    std::vector<double> ends = breaks;
    ends.push_back(T);
    std::vector<double> grid{0.0};
    double start = 0.0;
    for (double e : ends) {
        const auto n = static_cast<long>(std::ceil((e - start) / dt - 1e-9));
        for (long i = 1; i <= std::max(n, 1L); ++i) grid.push_back(i == n ? e : start + (e - start) * i / n);
        start = e;
    }
    return grid;
}

}  // namespace detail

/// Integrates from u0 with a prepared velocity timeline. cfg.mollify_b is ignored
/// here: mollification belongs to the timeline.
inline Trajectory solve(const Velocity& vel, const ScalarField& u0_in, const SolverConfig& cfg) {
    const TorusGrid& g = u0_in.grid();
    if (!(vel.grid() == g)) throw GridMismatch("solve: velocity and datum live on different grids");
    if (!(cfg.T_final > 0.0)) throw InvalidArgument("solve: T_final must be > 0");
    if (!(cfg.dt_policy.dt > 0.0)) throw InvalidArgument("solve: dt must be > 0");
    if (!(cfg.dt_policy.safety > 0.0 && cfg.dt_policy.safety <= 1.0)) {
        throw InvalidArgument("solve: CFL safety factor must lie in (0, 1]");
    }
    if (cfg.record_every < 1) throw InvalidArgument("solve: record_every must be >= 1");
    for (const auto& b : cfg.betas) {
        if (!passes_convexity_check(b)) throw InvalidArgument("solve: beta '" + b.name + "' is not convex");
    }

    const ScalarField u0 = cfg.mollify_u0 ? mollify(u0_in, *cfg.mollify_u0) : u0_in;
    const detail::SpectralOps ops(g);
    const double h = g.spacing();
    const double T = cfg.T_final;
    const auto breaks = vel.breakpoints(T);
    const bool adaptive = cfg.dt_policy.kind == DtPolicy::Kind::cfl;
    const auto singular = vel.singular_time();

    Trajectory traj;
    traj.velocity_mollifier = vel.mollifier();
    traj.times.push_back(0.0);
    traj.states.push_back(u0);
    traj.diagnostics.push_back(detail::make_record(0.0, u0, 0.0, cfg.betas));

    std::vector<double> fixed_grid;
    if (!adaptive) fixed_grid = detail::fixed_time_grid(T, cfg.dt_policy.dt, breaks);

    SpectralField U = forward(u0);
    double cum = 0.0;
    double t = 0.0;
    std::size_t step = 0;
    std::size_t next_break = 0;

    std::vector<double> e_half(g.size()), e_full(g.size());
    auto courant = [&](const VectorField& b, double dt) { return dt * lp_norm(b, INFINITY) / h; };

    while (t < T - 1e-14 * T) {
        double dt;
        bool hits_break = false;
        double target = 0.0;
        VectorField b0 = vel.at(t);
        VectorField bh(g), b1(g);
        if (adaptive) {
            target = std::min(cfg.dt_policy.dt, T - t);
            // Geometric grading away from a singular instant keeps b smooth across each step.
            if (singular) target = std::min(target, 0.2 * (t - *singular) + 1e-9 * T);
            while (next_break < breaks.size() && breaks[next_break] <= t + 1e-14) ++next_break;
            if (next_break < breaks.size()) target = std::min(target, breaks[next_break] - t);
            dt = target;
            hits_break = next_break < breaks.size() && t + target >= breaks[next_break] - 1e-14;
            for (int tries = 0;; ++tries) {
                bh = vel.at(t + 0.5 * dt);
                b1 = vel.at(t + dt, true);
                const double c = std::max({courant(b0, dt), courant(bh, dt), courant(b1, dt)});
                if (c <= cfg.dt_policy.safety) break;
                if (tries > 200) throw NumericalAbort("CFL step selection failed to converge", step, t);
                dt *= 0.95 * cfg.dt_policy.safety / c;
            }
        } else {
            dt = fixed_grid[step + 1] - fixed_grid[step];
            bh = vel.at(t + 0.5 * dt);
            b1 = vel.at(t + dt, true);
        }
        const double c = std::max({courant(b0, dt), courant(bh, dt), courant(b1, dt)});
        traj.max_courant = std::max(traj.max_courant, c);
        if (c > cfg.dt_policy.safety) {
            std::ostringstream os;
            os << "CFL violation: dt * max|b| / h = " << c << " exceeds " << cfg.dt_policy.safety;
            throw NumericalAbort(os.str(), step, t);
        }

        for (std::size_t i = 0; i < g.size(); ++i) {
            e_half[i] = std::exp(ops.lap[i] * 0.5 * dt);
            e_full[i] = e_half[i] * e_half[i];
        }
        const std::size_t m = g.size();

        const SpectralField k1 = ops.advection(U, b0, cfg.dealias);
        const double g1 = ops.dissipation(U);

        SpectralField S(g);
        for (std::size_t i = 0; i < m; ++i) S[i] = e_half[i] * (U[i] + 0.5 * dt * k1[i]);
        const SpectralField k2 = ops.advection(S, bh, cfg.dealias);
        const double g2 = ops.dissipation(S);

        for (std::size_t i = 0; i < m; ++i) S[i] = e_half[i] * U[i] + 0.5 * dt * k2[i];
        const SpectralField k3 = ops.advection(S, bh, cfg.dealias);
        const double g3 = ops.dissipation(S);

        for (std::size_t i = 0; i < m; ++i) S[i] = e_full[i] * U[i] + dt * e_half[i] * k3[i];
        const SpectralField k4 = ops.advection(S, b1, cfg.dealias);
        const double g4 = ops.dissipation(S);

        for (std::size_t i = 0; i < m; ++i) {
            U[i] = e_full[i] * U[i] +
                   dt / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        cum += dt / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
        ++step;
        if (!adaptive) {
            t = fixed_grid[step];
        } else if (hits_break && dt == target) {
            t = breaks[next_break];
        } else {
            t += dt;
            if (T - t < 1e-12 * T) t = T;
        }

        const ScalarField u = inverse(U);
        if (!u.all_finite() || !std::isfinite(cum)) {
            throw NumericalAbort("non-finite value in the solution", step, t);
        }
        traj.diagnostics.push_back(detail::make_record(t, u, cum, cfg.betas));
        const bool last = t >= T - 1e-14 * T;
        if (step % static_cast<std::size_t>(cfg.record_every) == 0 || last) {
            traj.times.push_back(t);
            traj.states.push_back(u);
        }
    }
    traj.steps = step;
    return traj;
}

/// Resolves the approximation scheme for a catalog entry, then integrates.
/// Rough entries without mollify_b get a Gaussian of width 4 h unless
/// no_approximation is set.
inline Trajectory solve(const FieldSpec& spec, const ScalarField& u0, const SolverConfig& cfg) {
    std::optional<Mollifier> m = cfg.mollify_b;
    std::vector<std::string> notes;
    if (!m && is_rough(spec) && !cfg.no_approximation) {
        m = Mollifier{MollifierProfile::gaussian_periodized, 4.0 * u0.grid().spacing()};
        notes.push_back("rough field " + to_string(spec.kind) + " mollified with gaussian delta_b = 4h");
    }
    auto traj = solve(Velocity::from_spec(spec, u0.grid(), m), u0, cfg);
    traj.notes.insert(traj.notes.end(), notes.begin(), notes.end());
    return traj;
}

// ============================================================================
// Post-processing
// ============================================================================

/// Largest increase of ||u||_q between successive records.
inline double lq_dissipation_check(const Trajectory& traj, double q) {
    double worst = -INFINITY;
    for (std::size_t i = 1; i < traj.diagnostics.size(); ++i) {
        worst = std::max(worst, traj.diagnostics[i].lq_norm(q) - traj.diagnostics[i - 1].lq_norm(q));
    }
    return traj.diagnostics.size() < 2 ? 0.0 : worst;
}

/// Largest increase of the integral of beta(u) between successive records.
/// Registered integrands are read from the diagnostics; others from snapshots.
inline double beta_dissipation(const Trajectory& traj, const BetaFunction& beta) {
    if (!passes_convexity_check(beta)) throw InvalidArgument("beta_dissipation: '" + beta.name + "' is not convex");
    std::vector<double> series;
    const bool recorded = !traj.diagnostics.empty() && traj.diagnostics[0].beta_integrals.count(beta.name) &&
                          beta.name != "";
    if (recorded) {
        for (const auto& r : traj.diagnostics) series.push_back(r.beta_integrals.at(beta.name));
    } else {
        for (const auto& s : traj.states) series.push_back(s.map(beta.value).integral());
    }
    double worst = -INFINITY;
    for (std::size_t i = 1; i < series.size(); ++i) worst = std::max(worst, series[i] - series[i - 1]);
    return series.size() < 2 ? 0.0 : worst;
}

/// Space-time test function with its time derivative; spatial derivatives are
/// taken spectrally.
struct TestFunction {
    std::function<double(double, const Point&)> phi;
    std::function<double(double, const Point&)> dphi_dt;
};

namespace detail {

/// Composite Simpson weights on uniform nodes with an even interval count,
/// trapezoid weights otherwise.
inline std::vector<double> time_weights(const std::vector<double>& t) {
    const std::size_t n = t.size();
    std::vector<double> w(n, 0.0);
    if (n < 2) return w;
    const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 1; i < n; ++i) uniform = uniform && std::abs(t[i] - t[i - 1] - h) <= 1e-9 * h;
    if (uniform && (n - 1) % 2 == 0) {
        for (std::size_t i = 0; i < n; ++i) w[i] = h / 3.0 * (i == 0 || i == n - 1 ? 1.0 : (i % 2 ? 4.0 : 2.0));
    } else {
        for (std::size_t i = 1; i < n; ++i) {
            w[i - 1] += 0.5 * (t[i] - t[i - 1]);
            w[i] += 0.5 * (t[i] - t[i - 1]);
        }
    }
    return w;
}

}  // namespace detail

/// |int int u (phi_t + b . grad phi + lap phi) + int u0 phi(0)| by quadrature over snapshots.
inline double weak_residual(const Trajectory& traj, const Velocity& vel, const TestFunction& tf) {
    if (traj.states.empty()) throw InvalidArgument("weak_residual: empty trajectory");
    const TorusGrid& g = traj.states.front().grid();
    const double T = traj.times.back();
    const auto phiT = ScalarField::sample(g, [&](const Point& x) { return tf.phi(T, x); });
    if (lp_norm(phiT, INFINITY) > 1e-12) throw InvalidArgument("weak_residual: test function must vanish at t = T");

    const auto w = detail::time_weights(traj.times);
    double total = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double t = traj.times[i];
        const auto phi = ScalarField::sample(g, [&](const Point& x) { return tf.phi(t, x); });
        const auto phit = ScalarField::sample(g, [&](const Point& x) { return tf.dphi_dt(t, x); });
        const auto b = vel.at(t, i + 1 == traj.states.size());
        const auto integrand = phit + b.dot(gradient(phi)) + laplacian(phi);
        total += w[i] * (traj.states[i] * integrand).integral();
    }
    const auto phi0 = ScalarField::sample(g, [&](const Point& x) { return tf.phi(0.0, x); });
    total += (traj.states.front() * phi0).integral();
    return std::abs(total);
}

}  // namespace adlab

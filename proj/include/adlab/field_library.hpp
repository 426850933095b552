#pragma once

/// @file field_library.hpp
/// @brief Catalog of divergence-free velocity fields with integrability metadata.
///
/// Stream-function entries are built as the spectral perpendicular gradient of a
/// sampled stream function, so their discrete divergence vanishes to roundoff.
/// In three dimensions every entry is a column field: independent of x3 with a
/// zero third component.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "adlab/spectral.hpp"
#include "adlab/torus.hpp"

namespace adlab {

enum class FieldKind { constant, shear, taylor_green, rotation_bump, power_singularity, alternating_shear };

inline constexpr FieldKind kAllFieldKinds[] = {FieldKind::constant,     FieldKind::shear,
                                               FieldKind::taylor_green, FieldKind::rotation_bump,
                                               FieldKind::power_singularity, FieldKind::alternating_shear};

inline std::string to_string(FieldKind k) {
    switch (k) {
        case FieldKind::constant: return "constant";
        case FieldKind::shear: return "shear";
        case FieldKind::taylor_green: return "taylor_green";
        case FieldKind::rotation_bump: return "rotation_bump";
        case FieldKind::power_singularity: return "power_singularity";
        case FieldKind::alternating_shear: return "alternating_shear";
    }
    return "?";
}

inline FieldKind parse_field_kind(const std::string& s) {
    for (auto k : kAllFieldKinds) {
        if (to_string(k) == s) return k;
    }
    throw InvalidArgument("unknown field '" + s + "'");
}

/// Supremum exponents of spatial and temporal integrability; infinity when bounded.
struct IntegrabilityCard {
    double p_finite_below = std::numeric_limits<double>::infinity();
    double alpha_time = std::numeric_limits<double>::infinity();
};

/// Default parameters per entry. Keys not listed here are rejected.
inline const std::map<std::string, double>& default_params(FieldKind k) {
    static const std::map<FieldKind, std::map<std::string, double>> table{
        {FieldKind::constant, {{"c1", 1.0}, {"c2", 0.0}, {"c3", 0.0}}},
        {FieldKind::shear, {{"amplitude", 1.0}, {"m", 1.0}}},
        {FieldKind::taylor_green, {{"amplitude", 1.0}}},
        {FieldKind::rotation_bump, {{"amplitude", 1.0}, {"radius", 0.3}}},
        {FieldKind::power_singularity, {{"amplitude", 1.0}, {"a", 1.5}, {"r_in", 0.08}, {"r_out", 0.49}}},
        {FieldKind::alternating_shear,
         {{"amplitude", 1.0}, {"m", 1.0}, {"beta", 0.5}, {"period", 0.05}, {"t_singular", 0.0}}},
    };
    return table.at(k);
}

/// A catalog entry plus its parameters.
struct FieldSpec {
    FieldKind kind = FieldKind::constant;
    std::map<std::string, double> params;

    FieldSpec() = default;
    FieldSpec(FieldKind k, std::map<std::string, double> p = {}) : kind(k), params(std::move(p)) { validate(); }

    [[nodiscard]] bool time_dependent() const noexcept { return kind == FieldKind::alternating_shear; }

    [[nodiscard]] double param(const std::string& key) const {
        if (auto it = params.find(key); it != params.end()) return it->second;
        return default_params(kind).at(key);
    }

    void validate() const {
        const auto& defaults = default_params(kind);
        for (const auto& [key, v] : params) {
            if (!defaults.count(key)) throw InvalidArgument(to_string(kind) + ": unknown parameter '" + key + "'");
            if (!std::isfinite(v)) throw InvalidArgument(to_string(kind) + ": parameter '" + key + "' not finite");
        }
        if (kind == FieldKind::power_singularity) {
            const double a = param("a");
            if (!(a > 0.0 && a < 2.0)) throw InvalidArgument("power_singularity: exponent a must lie in (0,2)");
            if (!(param("r_in") > 0.0 && param("r_in") < param("r_out") && param("r_out") <= 0.5)) {
                throw InvalidArgument("power_singularity: need 0 < r_in < r_out <= 0.5");
            }
        }
        if (kind == FieldKind::rotation_bump && !(param("radius") > 0.0 && param("radius") <= 0.5)) {
            throw InvalidArgument("rotation_bump: radius must lie in (0, 0.5]");
        }
        if (kind == FieldKind::alternating_shear) {
            if (!(param("beta") >= 0.0)) throw InvalidArgument("alternating_shear: beta must be >= 0");
            if (!(param("period") > 0.0)) throw InvalidArgument("alternating_shear: period must be > 0");
            if (!(param("t_singular") <= 0.0)) throw InvalidArgument("alternating_shear: t_singular must be <= 0");
        }
    }

    [[nodiscard]] IntegrabilityCard card() const {
        IntegrabilityCard c;
        if (kind == FieldKind::power_singularity && param("a") > 1.0) c.p_finite_below = 2.0 / (param("a") - 1.0);
        if (kind == FieldKind::alternating_shear && param("beta") > 0.0) c.alpha_time = 1.0 / param("beta");
        return c;
    }
};

/// Side information returned with every instantiation.
struct FieldMetadata {
    double divergence_max = 0.0;
    /// Relative L2 change caused by the Leray projection (singular fields only).
    double projection_perturbation = 0.0;
    std::vector<std::string> warnings;
    IntegrabilityCard card;
};

struct FieldInstance {
    VectorField b;
    FieldMetadata meta;
};

namespace detail {

/// C-infinity step from 0 (t <= 0) to 1 (t >= 1); derivative peaks at 2.
inline double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double f = std::exp(-1.0 / t);
    const double h = std::exp(-1.0 / (1.0 - t));
    return f / (f + h);
}

inline double smoothstep_derivative(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double f = std::exp(-1.0 / t);
    const double h = std::exp(-1.0 / (1.0 - t));
    const double fp = f / (t * t);
    const double hp = h / ((1.0 - t) * (1.0 - t));
    return (fp * h + f * hp) / ((f + h) * (f + h));
}

/// Planar offset from the column axis through (1/2, 1/2) and its length.
inline std::array<double, 3> planar_offset(const Point& x) {
    const Point c{0.5, 0.5, 0.0};
    const Point d = torus_displacement(x, c, 2);
    return {d[0], d[1], std::hypot(d[0], d[1])};
}

/// Radial derivative psi'(r) of psi = A chi(r) r^(2-a), with chi smooth in log r.
inline double power_psi_prime(double r, double amp, double a, double r_in, double r_out) {
    const double L = std::log(r_out / r_in);
    const double s = (std::log(r) - std::log(r_in)) / L;
    const double chi = 1.0 - smoothstep(s);
    const double r_chi_prime = -smoothstep_derivative(s) / L;
    return amp * std::pow(r, 1.0 - a) * ((2.0 - a) * chi + r_chi_prime);
}

/// Closed-form power_singularity velocity at x (before projection); 0 on the axis.
inline std::array<double, 2> power_velocity(const FieldSpec& s, const Point& x) {
    const auto [dx1, dx2, r] = planar_offset(x);
    if (r == 0.0 || r >= s.param("r_out")) return {0.0, 0.0};
    const double f = power_psi_prime(r, s.param("amplitude"), s.param("a"), s.param("r_in"), s.param("r_out")) / r;
    return {f * dx2, -f * dx1};
}

inline double alternating_envelope(const FieldSpec& s, double t) {
    const double dt = std::abs(t - s.param("t_singular"));
    if (dt == 0.0) return 0.0;
    return s.param("amplitude") * std::pow(dt, -s.param("beta"));
}

/// Index of the shear phase containing t; left_limit selects the interval (kP, (k+1)P].
inline long alternating_phase(const FieldSpec& s, double t, bool left_limit) {
    const double q = t / s.param("period");
    if (left_limit) {
        const double c = std::ceil(q);
        return static_cast<long>(c) - 1;
    }
    return static_cast<long>(std::floor(q));
}

inline VectorField column_field(const TorusGrid& g, const ScalarField& u1, const ScalarField& u2) {
    VectorField out(g);
    out[0] = u1;
    out[1] = u2;
    return out;
}

}  // namespace detail

/// Samples the stream function of a stream-function entry.
inline ScalarField stream_function(const FieldSpec& s, const TorusGrid& g) {
    const double A = s.param("amplitude");
    switch (s.kind) {
        case FieldKind::taylor_green:
            return ScalarField::sample(g, [&](const Point& x) {
                return A * std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
            });
        case FieldKind::rotation_bump: {
            const double R = s.param("radius");
            return ScalarField::sample(g, [&](const Point& x) {
                const double q = detail::planar_offset(x)[2] / R;
                return q < 1.0 ? A * std::exp(-1.0 / (1.0 - q * q)) : 0.0;
            });
        }
        default:
            throw InvalidArgument(to_string(s.kind) + " has no stream-function form");
    }
}

/// Samples the closed-form field at time t. For alternating_shear, left_limit
/// evaluates the phase as a left limit at switch times.
inline FieldInstance instantiate(const FieldSpec& s, const TorusGrid& g, double t = 0.0, bool left_limit = false) {
    s.validate();
    const int d = g.dim();
    if (s.kind != FieldKind::constant && d < 2) {
        throw InvalidArgument(to_string(s.kind) + ": divergence-free fields in one dimension are constant");
    }
    FieldInstance out{VectorField(g), {}};
    out.meta.card = s.card();
    auto& b = out.b;

    switch (s.kind) {
        case FieldKind::constant: {
            const double c[] = {s.param("c1"), s.param("c2"), s.param("c3")};
            for (int a = 0; a < d; ++a) b[a] = ScalarField(g, c[a]);
            break;
        }
        case FieldKind::shear: {
            const double A = s.param("amplitude"), m = s.param("m");
            b[0] = ScalarField::sample(g, [&](const Point& x) { return A * std::sin(kTwoPi * m * x[1]); });
            break;
        }
        case FieldKind::taylor_green:
        case FieldKind::rotation_bump: {
            const auto v = perpendicular_gradient(stream_function(s, g));
            b = detail::column_field(g, v[0], v[1]);
            break;
        }
        case FieldKind::power_singularity: {
            ScalarField u1(g), u2(g);
            for_each_node(g, [&](std::size_t idx, const auto&, const Point& x) {
                const auto v = detail::power_velocity(s, x);
                u1[idx] = v[0];
                u2[idx] = v[1];
            });
            const auto raw = detail::column_field(g, u1, u2);
            b = leray_project(raw);
            const double norm = lp_norm(raw, 2.0);
            out.meta.projection_perturbation = norm > 0.0 ? lp_norm(b - raw, 2.0) / norm : 0.0;
            if (g.n() * s.param("r_in") < 16.0) {
                out.meta.warnings.push_back("power_singularity: singular core r_in spans fewer than 16 cells at N=" +
                                            std::to_string(g.n()));
            }
            break;
        }
        case FieldKind::alternating_shear: {
            const double env = detail::alternating_envelope(s, t);
            const double m = s.param("m");
            const bool odd = detail::alternating_phase(s, t, left_limit) % 2 != 0;
            if (odd) {
                b[1] = ScalarField::sample(g, [&](const Point& x) { return env * std::sin(kTwoPi * m * x[0]); });
            } else {
                b[0] = ScalarField::sample(g, [&](const Point& x) { return env * std::sin(kTwoPi * m * x[1]); });
            }
            break;
        }
    }
    const auto div = divergence(b);
    out.meta.divergence_max = lp_norm(div, INFINITY);
    return out;
}

/// Switch times of a time-dependent entry inside (0, T); empty otherwise.
inline std::vector<double> switch_times(const FieldSpec& s, double T) {
    std::vector<double> out;
    if (s.kind != FieldKind::alternating_shear) return out;
    const double P = s.param("period");
    for (long k = 1; k * P < T; ++k) out.push_back(k * P);
    return out;
}

// ============================================================================
// Integrability trends
// ============================================================================

enum class Trend { converging, diverging, inconclusive };

inline std::string to_string(Trend t) {
    switch (t) {
        case Trend::converging: return "converging";
        case Trend::diverging: return "diverging";
        case Trend::inconclusive: return "inconclusive";
    }
    return "?";
}

struct TrendReport {
    Trend trend = Trend::inconclusive;
    double slope = 0.0;
    std::vector<double> resolutions;
    std::vector<double> integrals;
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need matching samples");
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline Trend classify_slope(double slope) {
    if (slope < 0.05) return Trend::converging;
    if (slope > 0.2) return Trend::diverging;
    return Trend::inconclusive;
}

/// Rectangle-rule integral of |b|^p over the torus on a d=2 grid of size N,
/// using the closed-form samples (the projection is a bounded L^p operator for
/// 1 < p < infinity, so it does not move the integrability threshold).
inline double quadrature_lp_power(const FieldSpec& s, int n, double p, double t = 0.0) {
    const TorusGrid g(2, n);
    if (s.kind == FieldKind::power_singularity) {
        std::vector<double> row(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto v = detail::power_velocity(s, Point{g.coord(i), g.coord(j), 0.0});
                row[j] = std::pow(std::hypot(v[0], v[1]), p);
            }
            total += pairwise_sum(std::span<const double>(row));
        }
        return total * g.cell_volume();
    }
    const auto b = instantiate(s, g, t).b.magnitude();
    return std::pow(lp_norm(b, p), p);
}

/// Fits log(integral |b|^p) against log N over the given resolutions.
/// Time-dependent entries are probed half a period after the singular time,
/// where the envelope is nonzero.
inline TrendReport estimate_integrability(const FieldSpec& s, double p, std::span<const int> resolutions) {
    if (resolutions.size() < 3) throw InvalidArgument("estimate_integrability: need at least 3 resolutions");
    if (!(p >= 1.0) || std::isinf(p)) throw InvalidArgument("estimate_integrability: p must be finite and >= 1");
    const double t = s.time_dependent() ? std::max(0.0, s.param("t_singular")) + 0.5 * s.param("period") : 0.0;
    TrendReport r;
    for (int n : resolutions) {
        r.resolutions.push_back(n);
        r.integrals.push_back(quadrature_lp_power(s, n, p, t));
    }
    r.slope = loglog_slope(r.resolutions, r.integrals);
    r.trend = classify_slope(r.slope);
    return r;
}

/// Midpoint-rule integral over [0, T] of ||b(t)||_2^alpha with m nodes.
/// Uses the closed-form spatial L2 norm of the shear profile.
inline double time_quadrature(const FieldSpec& s, double alpha, int m, double T) {
    if (s.kind != FieldKind::alternating_shear) {
        throw InvalidArgument("time_quadrature: only time-dependent entries have a time profile");
    }
    const double h = T / m;
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double l2 = detail::alternating_envelope(s, (i + 0.5) * h) / std::sqrt(2.0);
        v[i] = std::pow(l2, alpha);
    }
    return pairwise_sum(std::span<const double>(v)) * h;
}

inline TrendReport estimate_time_integrability(const FieldSpec& s, double alpha, std::span<const int> nodes,
                                               double T = 1.0) {
    if (nodes.size() < 3) throw InvalidArgument("estimate_time_integrability: need at least 3 node counts");
    TrendReport r;
    for (int m : nodes) {
        r.resolutions.push_back(m);
        r.integrals.push_back(time_quadrature(s, alpha, m, T));
    }
    r.slope = loglog_slope(r.resolutions, r.integrals);
    r.trend = classify_slope(r.slope);
    return r;
}

}  // namespace adlab

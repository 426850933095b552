#pragma once

/// @file mollifier.hpp
/// @brief Unit-mass smoothing kernels rho^delta on the torus and spectral convolution.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "adlab/spectral.hpp"
#include "adlab/torus.hpp"

namespace adlab {

enum class MollifierProfile { gaussian_periodized, bump_compact };

inline std::string to_string(MollifierProfile p) {
    return p == MollifierProfile::gaussian_periodized ? "gaussian_periodized" : "bump_compact";
}

inline MollifierProfile parse_profile(const std::string& s) {
    if (s == "gaussian_periodized" || s == "gaussian") return MollifierProfile::gaussian_periodized;
    if (s == "bump_compact" || s == "bump") return MollifierProfile::bump_compact;
    throw InvalidArgument("unknown mollifier profile '" + s + "'");
}

/// Kernel family member: the Gaussian has standard deviation delta/3, the bump
/// is supported in the geodesic ball of radius delta.
struct Mollifier {
    MollifierProfile profile = MollifierProfile::bump_compact;
    double delta = 0.1;

    [[nodiscard]] double gaussian_sigma() const noexcept { return delta / 3.0; }
};

/// Dyadic schedule delta_j = delta0 * 2^{-j}, j = 0..levels-1.
inline std::vector<double> dyadic_schedule(double delta0, int levels) {
    if (!(delta0 > 0.0) || levels < 1) throw InvalidArgument("dyadic_schedule: need delta0 > 0 and levels >= 1");
    std::vector<double> out;
    for (int j = 0; j < levels; ++j) out.push_back(delta0 * std::ldexp(1.0, -j));
    return out;
}

namespace detail {

inline void check_resolvable(const Mollifier& m, const TorusGrid& g) {
    if (!(m.delta > 0.0) || !std::isfinite(m.delta)) throw InvalidArgument("Mollifier: delta must be positive");
    if (m.delta < 2.0 * g.spacing()) {
        throw ResolutionError("Mollifier: delta = " + std::to_string(m.delta) +
                              " is under-resolved on N = " + std::to_string(g.n()) +
                              " (needs delta >= 2 * spacing = " + std::to_string(2.0 * g.spacing()) + ")");
    }
    if (m.profile == MollifierProfile::bump_compact && m.delta > 0.5) {
        throw InvalidArgument("Mollifier: bump radius must not exceed 1/2 (half the torus period)");
    }
}

/// 1D wrapped Gaussian up to a constant factor; images for narrow kernels,
/// the Fourier series for wide ones.
inline double wrapped_gaussian_1d(double x, double sigma) {
    if (sigma <= 0.25) {
        const int m = static_cast<int>(std::ceil(9.0 * sigma)) + 1;
        double s = 0.0;
        for (int j = -m; j <= m; ++j) {
            const double y = x - j;
            s += std::exp(-y * y / (2.0 * sigma * sigma));
        }
        return s / (std::sqrt(2.0 * kPi) * sigma);
    }
    double s = 1.0;
    for (int k = 1;; ++k) {
        const double a = std::exp(-2.0 * kPi * kPi * sigma * sigma * k * k);
        if (a < 1e-20) break;
        s += 2.0 * a * std::cos(kTwoPi * k * x);
    }
    return s;
}

inline double bump_profile(double r, double delta) {
    const double s = r / delta;
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

}  // namespace detail

/// rho^delta sampled on the grid and renormalized to unit discrete mass.
inline ScalarField kernel_field(const Mollifier& m, const TorusGrid& g) {
    detail::check_resolvable(m, g);
    const int d = g.dim();
    ScalarField k(g);
    if (m.profile == MollifierProfile::gaussian_periodized) {
        const double sigma = m.gaussian_sigma();
        std::vector<double> axis(g.n());
        for (int i = 0; i < g.n(); ++i) axis[i] = detail::wrapped_gaussian_1d(g.coord(i), sigma);
        for_each_node(g, [&](std::size_t idx, const std::array<int, 3>& ii, const Point&) {
            double v = 1.0;
            for (int a = 0; a < d; ++a) v *= axis[ii[a]];
            k[idx] = v;
        });
    } else {
        const Point origin{0.0, 0.0, 0.0};
        for_each_node(g, [&](std::size_t idx, const auto&, const Point& x) {
            const Point dx = torus_displacement(x, origin, d);
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) r2 += dx[a] * dx[a];
            k[idx] = detail::bump_profile(std::sqrt(r2), m.delta);
        });
    }
    const double mass = k.integral();
    k *= 1.0 / mass;
    return k;
}

/// Real Fourier multiplier of the sampled kernel, flat-indexed like SpectralField.
/// Cached per (profile, delta, grid).
inline std::shared_ptr<const std::vector<double>> kernel_symbol(const Mollifier& m, const TorusGrid& g) {
    using Key = std::tuple<int, double, int, int>;
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const std::vector<double>>> cache;
    const Key key{static_cast<int>(m.profile), m.delta, g.dim(), g.n()};
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const SpectralField K = forward(kernel_field(m, g));
    auto sym = std::make_shared<std::vector<double>>(g.size());
    for (std::size_t i = 0; i < sym->size(); ++i) (*sym)[i] = K[i].real();
    std::lock_guard lock(mu);
    if (cache.size() > 256) cache.clear();
    cache.emplace(key, sym);
    return sym;
}

/// F(k) rho^(k) in place.
inline void mollify_in_place(SpectralField& f, const Mollifier& m) {
    const auto sym = kernel_symbol(m, f.grid());
    for (std::size_t i = 0; i < sym->size(); ++i) f[i] *= (*sym)[i];
}

inline ScalarField mollify(const ScalarField& f, const Mollifier& m) {
    SpectralField F = forward(f);
    mollify_in_place(F, m);
    return inverse(F);
}

inline VectorField mollify(const VectorField& v, const Mollifier& m) {
    std::vector<ScalarField> comps;
    for (int a = 0; a < v.dim(); ++a) comps.push_back(mollify(v[a], m));
    return VectorField(v.grid(), std::move(comps));
}

}  // namespace adlab

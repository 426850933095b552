#pragma once

/// @file spectral.hpp
/// @brief Fourier transforms, exact spectral differential operators, Leray projection,
/// two-thirds dealiasing and the H^{+-1} multiplier norms.
///
/// Conventions: coefficients are normalized so that f(x) = sum_k F(k) exp(2 pi i k.x);
/// the frequency lattice is k_j in {-N/2+1, ..., N/2}. Derivative symbols drop the
/// lone Nyquist frequency k_j = N/2 on the differentiated axis.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "adlab/fft.hpp"
#include "adlab/torus.hpp"

namespace adlab {

using cplx = std::complex<double>;

/// Integer frequency of index i on an axis with n points.
inline constexpr int frequency(int i, int n) noexcept { return i <= n / 2 ? i : i - n; }

/// Frequency used by derivative symbols: the Nyquist frequency is dropped.
inline constexpr int derivative_frequency(int i, int n) noexcept {
    const int k = frequency(i, n);
    return k == n / 2 ? 0 : k;
}

/// Visit every Fourier mode with its flat index and integer wavevector (padded to 3).
template <typename Fn>
void for_each_mode(const TorusGrid& g, Fn&& fn) {
    const auto e = g.extents();
    std::size_t idx = 0;
    for (int i = 0; i < e[0]; ++i) {
        const int k0 = frequency(i, e[0]);
        for (int j = 0; j < e[1]; ++j) {
            const int k1 = e[1] > 1 ? frequency(j, e[1]) : 0;
            for (int l = 0; l < e[2]; ++l, ++idx) {
                const int k2 = e[2] > 1 ? frequency(l, e[2]) : 0;
                fn(idx, std::array<int, 3>{k0, k1, k2});
            }
        }
    }
}

// ============================================================================
// SpectralField
// ============================================================================

class SpectralField {
public:
    explicit SpectralField(const TorusGrid& g) : grid_(g), coeffs_(g.size()) {}

    SpectralField(const TorusGrid& g, std::vector<cplx> coeffs) : grid_(g), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != grid_.size()) {
            throw GridMismatch("SpectralField: coefficient count does not match the frequency lattice");
        }
    }

    [[nodiscard]] const TorusGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const cplx> coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] std::span<cplx> coeffs() noexcept { return coeffs_; }
    [[nodiscard]] std::vector<cplx>& storage() noexcept { return coeffs_; }

    cplx& operator[](std::size_t i) noexcept { return coeffs_[i]; }
    cplx operator[](std::size_t i) const noexcept { return coeffs_[i]; }

    /// Coefficient at integer wavevector k (wrapped onto the lattice).
    [[nodiscard]] cplx at(int k0, int k1 = 0, int k2 = 0) const { return coeffs_[grid_.flat(k0, k1, k2)]; }

    SpectralField& operator+=(const SpectralField& o) {
        check_same(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        return *this;
    }
    SpectralField& operator*=(cplx a) noexcept {
        for (auto& c : coeffs_) c *= a;
        return *this;
    }

    void check_same(const SpectralField& o) const {
        if (!(grid_ == o.grid_)) throw GridMismatch("SpectralField: operands live on different grids");
    }

private:
    TorusGrid grid_;
    std::vector<cplx> coeffs_;
};

/// Largest |F(-k) - conj(F(k))|; zero for fields representing real data.
inline double hermitian_defect(const SpectralField& f) {
    const auto& g = f.grid();
    double worst = 0.0;
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& k) {
        const cplx mirror = f.at(-k[0], -k[1], -k[2]);
        worst = std::max(worst, std::abs(mirror - std::conj(f[idx])));
    });
    return worst;
}

// ============================================================================
// Transforms
// ============================================================================

inline SpectralField forward(const ScalarField& f) {
    const auto& g = f.grid();
    std::vector<cplx> data(g.size());
    const auto v = f.values();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = v[i];
    fft::execute(g, data, fft::Direction::forward);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (auto& c : data) c *= scale;
    return SpectralField(g, std::move(data));
}

/// Real part of the synthesized field.
inline ScalarField inverse(const SpectralField& f) {
    const auto& g = f.grid();
    std::vector<cplx> data(f.coeffs().begin(), f.coeffs().end());
    fft::execute(g, data, fft::Direction::backward);
    ScalarField out(g);
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
    return out;
}

// ============================================================================
// Multipliers and differential operators
// ============================================================================

/// Applies a real multiplier m(k) in place.
template <typename Symbol>
void apply_multiplier(SpectralField& f, Symbol&& m) {
    for_each_mode(f.grid(), [&](std::size_t idx, const std::array<int, 3>& k) { f[idx] *= m(k); });
}

/// i 2 pi k_axis F(k), Nyquist dropped.
inline SpectralField spectral_derivative(const SpectralField& f, int axis) {
    const auto& g = f.grid();
    if (axis < 0 || axis >= g.dim()) throw InvalidArgument("spectral_derivative: axis out of range");
    SpectralField out(g);
    const int n = g.n();
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& k) {
        const int kd = k[axis] == n / 2 ? 0 : k[axis];
        out[idx] = cplx(0.0, kTwoPi * kd) * f[idx];
    });
    return out;
}

/// Sum over axes of spectral derivatives of the components.
inline SpectralField spectral_divergence(std::span<const SpectralField> comps) {
    if (comps.empty()) throw InvalidArgument("spectral_divergence: no components");
    const auto& g = comps[0].grid();
    if (static_cast<int>(comps.size()) != g.dim()) throw GridMismatch("spectral_divergence: component count");
    SpectralField out(g);
    const int n = g.n();
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& k) {
        cplx s = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const int kd = k[a] == n / 2 ? 0 : k[a];
            s += cplx(0.0, kTwoPi * kd) * comps[a][idx];
        }
        out[idx] = s;
    });
    return out;
}

inline std::vector<SpectralField> forward(const VectorField& v) {
    std::vector<SpectralField> out;
    out.reserve(v.dim());
    for (int a = 0; a < v.dim(); ++a) out.push_back(forward(v[a]));
    return out;
}

inline VectorField inverse(std::span<const SpectralField> comps) {
    const auto& g = comps[0].grid();
    std::vector<ScalarField> out;
    out.reserve(comps.size());
    for (const auto& c : comps) out.push_back(inverse(c));
    return VectorField(g, std::move(out));
}

inline VectorField gradient(const ScalarField& f) {
    const SpectralField F = forward(f);
    std::vector<ScalarField> comps;
    for (int a = 0; a < f.grid().dim(); ++a) comps.push_back(inverse(spectral_derivative(F, a)));
    return VectorField(f.grid(), std::move(comps));
}

inline ScalarField divergence(const VectorField& v) {
    const auto comps = forward(v);
    return inverse(spectral_divergence(comps));
}

/// Symbol -4 pi^2 sum_j k_j^2 with Nyquist frequencies dropped, so that
/// divergence(gradient(f)) == laplacian(f) exactly.
inline double laplacian_symbol(const std::array<int, 3>& k, int n, int dim) noexcept {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const int kd = k[a] == n / 2 ? 0 : k[a];
        s += static_cast<double>(kd) * kd;
    }
    return -4.0 * kPi * kPi * s;
}

inline ScalarField laplacian(const ScalarField& f) {
    SpectralField F = forward(f);
    const int n = f.grid().n();
    const int d = f.grid().dim();
    apply_multiplier(F, [&](const std::array<int, 3>& k) { return laplacian_symbol(k, n, d); });
    return inverse(F);
}

/// Perpendicular gradient (d_2 psi, -d_1 psi, 0...) of a stream function; needs d >= 2.
inline VectorField perpendicular_gradient(const ScalarField& psi) {
    const auto& g = psi.grid();
    if (g.dim() < 2) throw InvalidArgument("perpendicular_gradient: needs dimension >= 2");
    const SpectralField P = forward(psi);
    VectorField out(g);
    out[0] = inverse(spectral_derivative(P, 1));
    out[1] = -1.0 * inverse(spectral_derivative(P, 0));
    return out;
}

// ============================================================================
// Leray projection and dealiasing
// ============================================================================

/// Orthogonal projection onto the kernel of the spectral divergence:
/// v(k) -> v(k) - k (k.v(k)) / |k|^2 with the derivative wavevector.
inline VectorField leray_project(const VectorField& v) {
    const auto& g = v.grid();
    if (g.dim() == 1) {
        const auto vals = v[0].values();
        const double mean = v[0].integral();
        double dev = 0.0;
        double scale = 0.0;
        for (double x : vals) {
            dev = std::max(dev, std::abs(x - mean));
            scale = std::max(scale, std::abs(x));
        }
        if (dev > 1e-13 * std::max(1.0, scale)) {
            throw InvalidArgument(
                "leray_project: projection is trivial in one dimension (only constants are divergence-free)");
        }
        return VectorField(g, {ScalarField(g, mean)});
    }
    auto comps = forward(v);
    const int n = g.n();
    const int d = g.dim();
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& k) {
        std::array<double, 3> kd{0.0, 0.0, 0.0};
        double k2 = 0.0;
        for (int a = 0; a < d; ++a) {
            kd[a] = k[a] == n / 2 ? 0.0 : static_cast<double>(k[a]);
            k2 += kd[a] * kd[a];
        }
        if (k2 == 0.0) return;
        cplx kv = 0.0;
        for (int a = 0; a < d; ++a) kv += kd[a] * comps[a][idx];
        for (int a = 0; a < d; ++a) comps[a][idx] -= kd[a] * kv / k2;
    });
    return inverse(comps);
}

/// Two-thirds rule: zero every coefficient with some |k_j| > N/3.
inline SpectralField dealias(SpectralField f) {
    const int n = f.grid().n();
    for_each_mode(f.grid(), [&](std::size_t idx, const std::array<int, 3>& k) {
        for (int a = 0; a < f.grid().dim(); ++a) {
            if (3 * std::abs(k[a]) > n) {
                f[idx] = 0.0;
                return;
            }
        }
    });
    return f;
}

// ============================================================================
// Sobolev multiplier norms
// ============================================================================

/// (sum_k (1 + 4 pi^2 |k|^2)^s |F(k)|^2)^{1/2} over the full lattice, s in {-1, +1}.
inline double h_norm(const SpectralField& f, int s) {
    if (s != -1 && s != 1) throw InvalidArgument("h_norm: order must be -1 or +1");
    const int d = f.grid().dim();
    std::vector<double> terms(f.grid().size());
    for_each_mode(f.grid(), [&](std::size_t idx, const std::array<int, 3>& k) {
        double k2 = 0.0;
        for (int a = 0; a < d; ++a) k2 += static_cast<double>(k[a]) * k[a];
        const double w = 1.0 + 4.0 * kPi * kPi * k2;
        terms[idx] = (s > 0 ? w : 1.0 / w) * std::norm(f[idx]);
    });
    return std::sqrt(pairwise_sum(terms));
}

inline double h_norm(const ScalarField& f, int s) {
    if (s != -1 && s != 1) throw InvalidArgument("h_norm: order must be -1 or +1");
    return h_norm(forward(f), s);
}

/// sum_k 4 pi^2 |k|^2 |F(k)|^2 = integral of |grad f|^2 for the trigonometric interpolant.
inline double gradient_l2_squared(const SpectralField& f) {
    const int d = f.grid().dim();
    std::vector<double> terms(f.grid().size());
    for_each_mode(f.grid(), [&](std::size_t idx, const std::array<int, 3>& k) {
        double k2 = 0.0;
        for (int a = 0; a < d; ++a) k2 += static_cast<double>(k[a]) * k[a];
        terms[idx] = 4.0 * kPi * kPi * k2 * std::norm(f[idx]);
    });
    return pairwise_sum(terms);
}

/// sum_k |F(k)|^2 = integral of f^2 (discrete Parseval).
inline double l2_squared(const SpectralField& f) {
    std::vector<double> terms(f.grid().size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::norm(f[i]);
    return pairwise_sum(terms);
}

}  // namespace adlab

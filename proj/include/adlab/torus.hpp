#pragma once

/// @file torus.hpp
/// @brief Uniform grids on the flat torus [0,1)^d, field containers and Lebesgue norms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adlab/errors.hpp"

namespace adlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// ============================================================================
// TorusGrid
// ============================================================================

/// Uniform grid with N points per axis on T^d, d in {1,2,3}. Storage is
/// row-major with x1 the slowest axis.
class TorusGrid {
public:
    TorusGrid(int dim, int n) : dim_(dim), n_(n) {
        if (dim < 1 || dim > 3) {
            throw InvalidArgument("TorusGrid: dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
        }
        if (n < 4 || (n & (n - 1)) != 0) {
            throw InvalidArgument("TorusGrid: points per axis must be a power of two >= 4 (got " +
                                  std::to_string(n) + ")");
        }
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] double spacing() const noexcept { return 1.0 / n_; }
    [[nodiscard]] double cell_volume() const noexcept { return std::pow(spacing(), dim_); }

    [[nodiscard]] std::size_t size() const noexcept {
        std::size_t s = 1;
        for (int i = 0; i < dim_; ++i) s *= static_cast<std::size_t>(n_);
        return s;
    }

    /// Extents padded to three axes; unused trailing axes have extent 1.
    [[nodiscard]] std::array<int, 3> extents() const noexcept {
        return {n_, dim_ >= 2 ? n_ : 1, dim_ >= 3 ? n_ : 1};
    }

    [[nodiscard]] std::size_t flat(int i0, int i1 = 0, int i2 = 0) const noexcept {
        const auto e = extents();
        auto wrap = [](int i, int m) { return ((i % m) + m) % m; };
        return (static_cast<std::size_t>(wrap(i0, e[0])) * e[1] + wrap(i1, e[1])) * e[2] + wrap(i2, e[2]);
    }

    /// Coordinate of grid index i along any axis.
    [[nodiscard]] double coord(int i) const noexcept { return static_cast<double>(i) / n_; }

    friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

private:
    int dim_;
    int n_;
};

using Point = std::array<double, 3>;

/// Visit every grid node with its multi-index (padded to 3) and coordinates.
template <typename Fn>
void for_each_node(const TorusGrid& g, Fn&& fn) {
    const auto e = g.extents();
    std::size_t idx = 0;
    for (int i = 0; i < e[0]; ++i) {
        for (int j = 0; j < e[1]; ++j) {
            for (int k = 0; k < e[2]; ++k, ++idx) {
                const Point x{g.coord(i), e[1] > 1 ? g.coord(j) : 0.0, e[2] > 1 ? g.coord(k) : 0.0};
                fn(idx, std::array<int, 3>{i, j, k}, x);
            }
        }
    }
}

// ============================================================================
// Summation
// ============================================================================

/// Pairwise summation; the result does not depend on how callers split work
/// beyond O(eps log n).
template <typename T, typename Fn>
T pairwise_sum(std::size_t begin, std::size_t end, const Fn& term) {
    const std::size_t len = end - begin;
    if (len <= 64) {
        T s{};
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = begin + len / 2;
    return pairwise_sum<T>(begin, mid, term) + pairwise_sum<T>(mid, end, term);
}

inline double pairwise_sum(std::span<const double> v) {
    return pairwise_sum<double>(0, v.size(), [&](std::size_t i) { return v[i]; });
}

// ============================================================================
// ScalarField / VectorField
// ============================================================================

class ScalarField {
public:
    explicit ScalarField(const TorusGrid& g, double value = 0.0) : grid_(g), values_(g.size(), value) {}

    ScalarField(const TorusGrid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
        if (values_.size() != grid_.size()) {
            throw GridMismatch("ScalarField: value count " + std::to_string(values_.size()) +
                               " does not match grid size " + std::to_string(grid_.size()));
        }
    }

    /// Samples f at every node.
    template <typename Fn>
    static ScalarField sample(const TorusGrid& g, Fn&& f) {
        ScalarField out(g);
        for_each_node(g, [&](std::size_t idx, const auto&, const Point& x) { out.values_[idx] = f(x); });
        return out;
    }

    [[nodiscard]] const TorusGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    /// Rectangle-rule integral over the unit torus.
    [[nodiscard]] double integral() const {
        return pairwise_sum(values()) * grid_.cell_volume();
    }

    ScalarField& operator+=(const ScalarField& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    ScalarField& operator*=(double a) noexcept {
        for (double& v : values_) v *= a;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    /// Pointwise product.
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        a.check_same(b);
        ScalarField out(a.grid_);
        for (std::size_t i = 0; i < a.values_.size(); ++i) out.values_[i] = a.values_[i] * b.values_[i];
        return out;
    }

    /// Pointwise map.
    template <typename Fn>
    [[nodiscard]] ScalarField map(Fn&& f) const {
        ScalarField out(grid_);
        for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = f(values_[i]);
        return out;
    }

    void check_same(const ScalarField& o) const {
        if (!(grid_ == o.grid_)) throw GridMismatch("ScalarField: operands live on different grids");
    }

private:
    TorusGrid grid_;
    std::vector<double> values_;
};

class VectorField {
public:
    /// Zero field with dim components.
    explicit VectorField(const TorusGrid& g) : grid_(g), components_(g.dim(), ScalarField(g)) {}

    VectorField(const TorusGrid& g, std::vector<ScalarField> components)
        : grid_(g), components_(std::move(components)) {
        if (static_cast<int>(components_.size()) != g.dim()) {
            throw GridMismatch("VectorField: expected " + std::to_string(g.dim()) + " components");
        }
        for (const auto& c : components_) {
            if (!(c.grid() == grid_)) throw GridMismatch("VectorField: components must share one grid");
        }
    }

    [[nodiscard]] const TorusGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] int dim() const noexcept { return grid_.dim(); }
    [[nodiscard]] const ScalarField& operator[](int i) const { return components_.at(i); }
    [[nodiscard]] ScalarField& operator[](int i) { return components_.at(i); }

    /// Pointwise Euclidean magnitude.
    [[nodiscard]] ScalarField magnitude() const {
        ScalarField out(grid_);
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            double s = 0.0;
            for (const auto& c : components_) s += c[i] * c[i];
            out[i] = std::sqrt(s);
        }
        return out;
    }

    /// Pointwise dot product b . v.
    [[nodiscard]] ScalarField dot(const VectorField& v) const {
        check_same(v);
        ScalarField out(grid_);
        for (int c = 0; c < dim(); ++c) {
            const auto a = components_[c].values();
            const auto b = v.components_[c].values();
            for (std::size_t i = 0; i < grid_.size(); ++i) out[i] += a[i] * b[i];
        }
        return out;
    }

    /// Each component multiplied pointwise by s.
    [[nodiscard]] VectorField scaled_by(const ScalarField& s) const {
        VectorField out(grid_);
        for (int c = 0; c < dim(); ++c) out.components_[c] = components_[c] * s;
        return out;
    }

    VectorField& operator+=(const VectorField& o) {
        check_same(o);
        for (int c = 0; c < dim(); ++c) components_[c] += o.components_[c];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        check_same(o);
        for (int c = 0; c < dim(); ++c) components_[c] -= o.components_[c];
        return *this;
    }
    VectorField& operator*=(double a) {
        for (auto& c : components_) c *= a;
        return *this;
    }
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(double s, VectorField a) { return a *= s; }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.all_finite(); });
    }

    void check_same(const VectorField& o) const {
        if (!(grid_ == o.grid_)) throw GridMismatch("VectorField: operands live on different grids");
    }

private:
    TorusGrid grid_;
    std::vector<ScalarField> components_;
};

// ============================================================================
// Geometry and norms
// ============================================================================

/// Geodesic distance on T^d: min |x - y - k| over integer shifts with |k| <= 2.
inline double geodesic_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty() || x.size() > 3) {
        throw InvalidArgument("geodesic_distance: points must share a dimension in {1,2,3}");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] < 1.0) || !(y[i] >= 0.0 && y[i] < 1.0)) {
            throw InvalidArgument("geodesic_distance: coordinates must lie in [0,1)");
        }
    }
    const int d = static_cast<int>(x.size());
    double best = std::numeric_limits<double>::infinity();
    std::array<int, 3> k{0, 0, 0};
    const int r0 = 2;
    const int r1 = d >= 2 ? 2 : 0;
    const int r2 = d >= 3 ? 2 : 0;
    for (k[0] = -r0; k[0] <= r0; ++k[0]) {
        for (k[1] = -r1; k[1] <= r1; ++k[1]) {
            for (k[2] = -r2; k[2] <= r2; ++k[2]) {
                if (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] > 4) continue;
                double s = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double diff = x[i] - y[i] - k[i];
                    s += diff * diff;
                }
                best = std::min(best, s);
            }
        }
    }
    return std::sqrt(best);
}

/// Minimal-image displacement x - c on the torus, componentwise in [-1/2, 1/2).
inline Point torus_displacement(const Point& x, const Point& c, int dim) {
    Point out{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) {
        double dx = x[i] - c[i];
        dx -= std::floor(dx + 0.5);
        out[i] = dx;
    }
    return out;
}

/// Rectangle-rule L^p norm; p = +inf gives the grid maximum of |f|.
inline double lp_norm(const ScalarField& f, double p) {
    if (std::isnan(p) || p < 1.0) throw InvalidArgument("lp_norm: exponent must satisfy p >= 1");
    const auto v = f.values();
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    const double w = f.grid().cell_volume();
    double s = 0.0;
    if (p == 1.0) {
        s = pairwise_sum<double>(0, v.size(), [&](std::size_t i) { return std::abs(v[i]); });
        return s * w;
    }
    if (p == 2.0) {
        s = pairwise_sum<double>(0, v.size(), [&](std::size_t i) { return v[i] * v[i]; });
        return std::sqrt(s * w);
    }
    if (p == 4.0) {
        s = pairwise_sum<double>(0, v.size(), [&](std::size_t i) {
            const double q = v[i] * v[i];
            return q * q;
        });
        return std::pow(s * w, 0.25);
    }
    s = pairwise_sum<double>(0, v.size(), [&](std::size_t i) { return std::pow(std::abs(v[i]), p); });
    return std::pow(s * w, 1.0 / p);
}

/// L^p norm of the pointwise Euclidean magnitude.
inline double lp_norm(const VectorField& v, double p) { return lp_norm(v.magnitude(), p); }

}  // namespace adlab

// Spectral engine: transforms, derivative symbols, Leray projection, dealiasing.

#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "adlab/spectral.hpp"
#include "test_util.hpp"

using namespace adlab;
using adlab::testing::max_abs_diff;
using adlab::testing::random_noise;
using adlab::testing::random_smooth;

namespace {

// Naive O(N^4) DFT in d = 2, independent of the FFT backend.
std::vector<std::complex<double>> naive_dft2(const ScalarField& f) {
    const int n = f.grid().n();
    std::vector<std::complex<double>> out(n * n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            std::complex<double> s = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    s += f[i * n + j] * std::polar(1.0, -kTwoPi * (double(a) * i + double(b) * j) / n);
                }
            }
            out[a * n + b] = s / double(n * n);
        }
    }
    return out;
}

ScalarField naive_idft2(const TorusGrid& g, const std::vector<std::complex<double>>& c) {
    const int n = g.n();
    ScalarField out(g);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            std::complex<double> s = 0.0;
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) {
                    s += c[a * n + b] * std::polar(1.0, kTwoPi * (double(a) * i + double(b) * j) / n);
                }
            }
            out[i * n + j] = s.real();
        }
    }
    return out;
}

VectorField taylor_green(const TorusGrid& g) {
    VectorField v(g);
    v[0] = ScalarField::sample(g, [](const Point& x) {
        return kTwoPi * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    });
    v[1] = ScalarField::sample(g, [](const Point& x) {
        return -kTwoPi * std::cos(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
    });
    return v;
}

}  // namespace

// ============================================================================
// Transforms
// ============================================================================

TEST(Transform, ConstantMapsToMeanMode) {
    TorusGrid g(2, 16);
    const auto F = forward(ScalarField(g, 5.0));
    EXPECT_NEAR(std::abs(F[0] - 5.0), 0.0, 1e-14);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(std::abs(F[i]), 1e-14);
}

TEST(Transform, CosineSingleMode) {
    TorusGrid g(1, 32);
    auto f = ScalarField::sample(g, [](const Point& x) { return std::cos(kTwoPi * x[0]); });
    const auto F = forward(f);
    EXPECT_NEAR(std::abs(F.at(1) - 0.5), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(F.at(-1) - 0.5), 0.0, 1e-12);
    double rest = 0.0;
    for (int k = 2; k < 31; ++k) rest = std::max(rest, std::abs(F.at(k)));
    EXPECT_LT(rest, 1e-12);
    EXPECT_LT(std::abs(F.at(0)), 1e-12);
}

TEST(Transform, MatchesNaiveDft) {
    std::mt19937 rng(1);
    TorusGrid g(2, 8);
    const auto f = random_noise(g, rng);
    const auto F = forward(f);
    const auto ref = naive_dft2(f);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::abs(F[i] - ref[i]), 1e-14);
}

TEST(Transform, RoundTripRandomField) {
    std::mt19937 rng(2);
    for (int d = 1; d <= 3; ++d) {
        TorusGrid g(d, d == 3 ? 32 : 128);
        const auto f = random_noise(g, rng);
        const auto back = inverse(forward(f));
        EXPECT_LE(lp_norm(back - f, 2.0), 1e-12 * lp_norm(f, 2.0));
    }
}

TEST(Transform, HermitianSymmetryAndParseval) {
    std::mt19937 rng(3);
    for (int d = 1; d <= 3; ++d) {
        TorusGrid g(d, d == 3 ? 16 : 64);
        const auto f = random_noise(g, rng);
        const auto F = forward(f);
        EXPECT_LE(hermitian_defect(F), 1e-12);
        const double l2 = lp_norm(f, 2.0);
        EXPECT_NEAR(l2_squared(F), l2 * l2, 1e-12 * l2 * l2);
        EXPECT_LE(hermitian_defect(spectral_derivative(F, 0)), 1e-12);
    }
}

TEST(Transform, GridMismatchRejected) {
    TorusGrid g(2, 8);
    EXPECT_THROW(SpectralField(g, std::vector<cplx>(10)), GridMismatch);
    EXPECT_THROW(ScalarField(g, std::vector<double>(10)), GridMismatch);
}

// ============================================================================
// Differential operators
// ============================================================================

TEST(Operators, GradientOfConstantVanishes) {
    TorusGrid g(3, 8);
    const auto grad = gradient(ScalarField(g, 4.0));
    for (int a = 0; a < 3; ++a) EXPECT_LT(lp_norm(grad[a], INFINITY), 1e-13);
}

TEST(Operators, DivergenceOfGradientIsLaplacian) {
    std::mt19937 rng(4);
    for (int d = 1; d <= 3; ++d) {
        TorusGrid g(d, d == 3 ? 16 : 64);
        const auto f = random_smooth(g, rng, 3);
        const auto lhs = divergence(gradient(f));
        const auto rhs = laplacian(f);
        EXPECT_LE(max_abs_diff(lhs, rhs), 1e-11 * std::max(1.0, lp_norm(rhs, INFINITY)));
        // Also on rough data, where the Nyquist convention matters.
        const auto noise = random_noise(g, rng);
        EXPECT_LE(max_abs_diff(divergence(gradient(noise)), laplacian(noise)),
                  1e-11 * lp_norm(laplacian(noise), INFINITY));
    }
}

TEST(Operators, LaplacianEigenfunction) {
    TorusGrid g(1, 64);
    auto f = ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[0]); });
    const auto lap = laplacian(f);
    EXPECT_LE(max_abs_diff(lap, -4.0 * kPi * kPi * f), 1e-10);
}

TEST(Operators, GradientMatchesAnalyticDerivative) {
    TorusGrid g(2, 32);
    auto f = ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[0]) * std::cos(4 * kPi * x[1]); });
    const auto grad = gradient(f);
    auto fx = ScalarField::sample(g, [](const Point& x) { return kTwoPi * std::cos(kTwoPi * x[0]) * std::cos(4 * kPi * x[1]); });
    auto fy = ScalarField::sample(g, [](const Point& x) { return -4 * kPi * std::sin(kTwoPi * x[0]) * std::sin(4 * kPi * x[1]); });
    EXPECT_LE(max_abs_diff(grad[0], fx), 1e-11);
    EXPECT_LE(max_abs_diff(grad[1], fy), 1e-11);
}

// ============================================================================
// Leray projection
// ============================================================================

TEST(Leray, AnnihilatesPureGradient) {
    TorusGrid g(2, 32);
    const auto v = gradient(ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[0]); }));
    const auto p = leray_project(v);
    EXPECT_LT(lp_norm(p, INFINITY), 1e-12);
}

TEST(Leray, FixesSolenoidalField) {
    TorusGrid g(2, 64);
    const auto tg = taylor_green(g);
    const auto p = leray_project(tg);
    EXPECT_LE(lp_norm(p - tg, INFINITY), 1e-12);
}

TEST(Leray, SplitsMixedModes) {
    TorusGrid g(2, 16);
    VectorField v(g);
    v[0] = ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[1]) + std::sin(kTwoPi * x[0]); });
    const auto p = leray_project(v);
    // Hand split: the x2 mode is solenoidal, the x1 mode a gradient.
    const auto expect = ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[1]); });
    EXPECT_LE(max_abs_diff(p[0], expect), 1e-13);
    EXPECT_LE(lp_norm(p[1], INFINITY), 1e-13);

    // Brute-force k-by-k projection through a naive DFT.
    auto c0 = naive_dft2(v[0]);
    auto c1 = naive_dft2(v[1]);
    const int n = g.n();
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const double k0 = derivative_frequency(a, n);
            const double k1 = derivative_frequency(b, n);
            const double k2 = k0 * k0 + k1 * k1;
            if (k2 == 0.0) continue;
            const auto kv = k0 * c0[a * n + b] + k1 * c1[a * n + b];
            c0[a * n + b] -= k0 * kv / k2;
            c1[a * n + b] -= k1 * kv / k2;
        }
    }
    EXPECT_LE(max_abs_diff(p[0], naive_idft2(g, c0)), 1e-12);
    EXPECT_LE(max_abs_diff(p[1], naive_idft2(g, c1)), 1e-12);
}

TEST(Leray, RandomFieldsProjectionProperties) {
    std::mt19937 rng(5);
    for (int d = 2; d <= 3; ++d) {
        TorusGrid g(d, d == 3 ? 16 : 64);
        for (int trial = 0; trial < 5; ++trial) {
            VectorField v(g);
            for (int a = 0; a < d; ++a) v[a] = random_noise(g, rng, 3.0);
            const auto p = leray_project(v);
            const double mag = lp_norm(v, INFINITY);
            EXPECT_LE(lp_norm(divergence(p), INFINITY), 1e-10 * mag);
            EXPECT_LE(lp_norm(p, 2.0), lp_norm(v, 2.0) + 1e-12);
            const auto pp = leray_project(p);
            EXPECT_LE(lp_norm(pp - p, INFINITY), 1e-12 * mag);
            // Mean untouched.
            for (int a = 0; a < d; ++a) EXPECT_NEAR(p[a].integral(), v[a].integral(), 1e-12 * mag);
        }
    }
}

TEST(Leray, OneDimensionIsTrivial) {
    TorusGrid g(1, 16);
    VectorField c(g);
    c[0] = ScalarField(g, 2.0);
    EXPECT_NEAR(leray_project(c)[0][3], 2.0, 1e-15);
    VectorField v(g);
    v[0] = ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[0]); });
    try {
        leray_project(v);
        FAIL() << "expected rejection";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("trivial in one dimension"), std::string::npos);
    }
}

// ============================================================================
// Dealiasing
// ============================================================================

TEST(Dealias, KeepsLowModesAndIsIdempotent) {
    std::mt19937 rng(6);
    TorusGrid g(2, 64);
    const auto f = random_smooth(g, rng, 21);  // 21 <= 64/3
    const auto F = forward(f);
    const auto D = dealias(F);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::abs(D[i] - F[i]), 1e-13);
    const auto noise = forward(random_noise(g, rng));
    const auto once = dealias(noise);
    const auto twice = dealias(once);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(once[i], twice[i]);
}

TEST(Dealias, RemovesNyquist) {
    TorusGrid g(1, 32);
    auto f = ScalarField::sample(g, [](const Point& x) { return std::cos(kTwoPi * 16 * x[0]); });
    const auto D = dealias(forward(f));
    EXPECT_LT(lp_norm(inverse(D), INFINITY), 1e-15);
}

TEST(Dealias, ProductMatchesTruncatedContinuumProduct) {
    std::mt19937 rng(7);
    const int n = 32;
    TorusGrid g(2, n), g2(2, 2 * n);
    // Both factors supported on |k_j| <= N/3 = 10.
    std::mt19937 rng_a(101), rng_b(202);
    const auto a = random_smooth(g, rng_a, 10, 0.05);
    const auto b = random_smooth(g, rng_b, 10, 0.05);
    std::mt19937 rng_a2(101), rng_b2(202);
    const auto a2 = random_smooth(g2, rng_a2, 10, 0.05);
    const auto b2 = random_smooth(g2, rng_b2, 10, 0.05);
    const auto coarse = dealias(forward(a * b));
    // Oracle: exact product at 2N (no aliasing for |k| <= 20 < N), truncated.
    const auto fine = forward(a2 * b2);
    double worst = 0.0;
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& k) {
        const bool kept = 3 * std::abs(k[0]) <= n && 3 * std::abs(k[1]) <= n;
        const cplx ref = kept ? fine.at(k[0], k[1]) : cplx(0.0);
        worst = std::max(worst, std::abs(coarse[idx] - ref));
    });
    EXPECT_LE(worst, 1e-12);
}

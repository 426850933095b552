// Mollifier kernels and spectral convolution.

#include <gtest/gtest.h>

#include <random>

#include "adlab/mollifier.hpp"
#include "test_util.hpp"

using namespace adlab;
using adlab::testing::max_abs_diff;
using adlab::testing::random_noise;
using adlab::testing::random_smooth;

namespace {

constexpr MollifierProfile kProfiles[] = {MollifierProfile::gaussian_periodized, MollifierProfile::bump_compact};

double second_moment(const ScalarField& k) {
    const int d = k.grid().dim();
    double s = 0.0;
    const Point origin{0, 0, 0};
    for_each_node(k.grid(), [&](std::size_t idx, const auto&, const Point& x) {
        const Point dx = torus_displacement(x, origin, d);
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) r2 += dx[a] * dx[a];
        s += r2 * k[idx];
    });
    return s * k.grid().cell_volume();
}

}  // namespace

TEST(Kernel, UnitMassAndNonnegative) {
    for (auto prof : kProfiles) {
        for (int d = 1; d <= 3; ++d) {
            TorusGrid g(d, d == 3 ? 32 : 128);
            const auto k = kernel_field({prof, 0.2}, g);
            EXPECT_NEAR(lp_norm(k, 1.0), 1.0, 1e-12);
            EXPECT_NEAR(k.integral(), 1.0, 1e-12);
            for (double v : k.values()) EXPECT_GE(v, 0.0);
        }
    }
}

TEST(Kernel, WideGaussianFlattens) {
    TorusGrid g(2, 32);
    const auto k = kernel_field({MollifierProfile::gaussian_periodized, 10.0}, g);
    EXPECT_LE(max_abs_diff(k, ScalarField(g, 1.0)), 1e-6);
}

TEST(Kernel, BumpSupportScan) {
    TorusGrid g(1, 256);
    const auto k = kernel_field({MollifierProfile::bump_compact, 0.1}, g);
    int inside = 0;
    for (int i = 0; i < g.n(); ++i) {
        const double x[] = {g.coord(i)};
        const double o[] = {0.0};
        const double r = geodesic_distance(x, o);
        if (r >= 0.1) {
            EXPECT_EQ(k[i], 0.0) << i;
        } else {
            EXPECT_GT(k[i], 0.0) << i;
            ++inside;
        }
    }
    EXPECT_EQ(inside, 2 * 25 + 1);
}

TEST(Kernel, SecondMomentScalesQuadratically) {
    for (auto prof : kProfiles) {
        TorusGrid g(1, 1024);
        std::vector<double> ratio;
        for (double delta : dyadic_schedule(0.2, 4)) {
            ratio.push_back(second_moment(kernel_field({prof, delta}, g)) / (delta * delta));
        }
        for (double r : ratio) EXPECT_NEAR(r / ratio.front(), 1.0, 0.05) << to_string(prof);
    }
    // Gaussian: the second moment is sigma^2 = (delta/3)^2 per axis.
    TorusGrid g2(2, 256);
    EXPECT_NEAR(second_moment(kernel_field({MollifierProfile::gaussian_periodized, 0.1}, g2)),
                2.0 * (0.1 / 3) * (0.1 / 3), 1e-10);
}

TEST(Kernel, UnderResolvedRejected) {
    TorusGrid g(2, 64);
    EXPECT_THROW(kernel_field({MollifierProfile::bump_compact, 1.9 / 64}, g), ResolutionError);
    EXPECT_NO_THROW(kernel_field({MollifierProfile::bump_compact, 2.0 / 64}, g));
    EXPECT_THROW(kernel_field({MollifierProfile::gaussian_periodized, 0.0}, g), InvalidArgument);
    EXPECT_THROW(mollify(ScalarField(g), {MollifierProfile::gaussian_periodized, 0.01}), ResolutionError);
}

TEST(Schedule, DyadicHalving) {
    const auto s = dyadic_schedule(0.1, 5);
    ASSERT_EQ(s.size(), 5u);
    EXPECT_DOUBLE_EQ(s[4], 0.00625);
    EXPECT_THROW(dyadic_schedule(-1.0, 3), InvalidArgument);
}

// ============================================================================
// mollify
// ============================================================================

TEST(Mollify, ConstantUnchangedAndMeanPreserved) {
    std::mt19937 rng(21);
    TorusGrid g(2, 64);
    for (auto prof : kProfiles) {
        const Mollifier m{prof, 0.15};
        EXPECT_LE(max_abs_diff(mollify(ScalarField(g, 2.5), m), ScalarField(g, 2.5)), 1e-13);
        for (int trial = 0; trial < 5; ++trial) {
            const auto f = random_noise(g, rng);
            EXPECT_NEAR(mollify(f, m).integral(), f.integral(), 1e-12);
        }
    }
}

TEST(Mollify, GaussianSingleModeMatchesCharacterSum) {
    TorusGrid g(1, 128);
    auto f = ScalarField::sample(g, [](const Point& x) { return std::sin(kTwoPi * x[0]); });
    const double delta = 0.1;
    const auto out = mollify(f, {MollifierProfile::gaussian_periodized, delta});
    // Fourier coefficient of the wrapped Gaussian at k = 1: exp(-2 pi^2 sigma^2).
    const double sigma = delta / 3.0;
    const double expected = std::exp(-2.0 * kPi * kPi * sigma * sigma);
    EXPECT_LE(max_abs_diff(out, expected * f), 1e-8);
}

TEST(Mollify, StrongConvergenceMonotone) {
    std::mt19937 rng(22);
    TorusGrid g(2, 256);
    const auto f = random_smooth(g, rng, 6);
    for (auto prof : kProfiles) {
        double prev = INFINITY;
        for (double delta : dyadic_schedule(0.25, 6)) {
            const double err = lp_norm(mollify(f, {prof, delta}) - f, 2.0);
            EXPECT_LE(err, prev + 1e-10) << to_string(prof) << " " << delta;
            prev = err;
        }
        EXPECT_LT(prev, 1e-2 * lp_norm(f, 2.0));
    }
}

TEST(Mollify, CommutesWithGradient) {
    std::mt19937 rng(23);
    TorusGrid g(3, 32);
    const auto f = random_noise(g, rng);
    for (auto prof : kProfiles) {
        const Mollifier m{prof, 0.1};
        const auto a = gradient(mollify(f, m));
        const auto b = mollify(gradient(f), m);
        for (int c = 0; c < 3; ++c) EXPECT_LE(max_abs_diff(a[c], b[c]), 1e-11);
    }
}

TEST(Mollify, ContractionInLp) {
    std::mt19937 rng(24);
    for (int d = 1; d <= 2; ++d) {
        TorusGrid g(d, d == 1 ? 256 : 64);
        for (auto prof : kProfiles) {
            for (int trial = 0; trial < 5; ++trial) {
                const auto f = random_noise(g, rng, 2.0);
                const auto out = mollify(f, {prof, 0.08});
                for (double p : {1.0, 2.0, 4.0, double(INFINITY)}) {
                    EXPECT_LE(lp_norm(out, p), lp_norm(f, p) + 1e-10) << p;
                }
            }
        }
    }
}

TEST(Mollify, VectorFieldComponentwise) {
    std::mt19937 rng(25);
    TorusGrid g(2, 32);
    VectorField v(g, {random_noise(g, rng), random_noise(g, rng)});
    const Mollifier m{MollifierProfile::bump_compact, 0.2};
    const auto out = mollify(v, m);
    EXPECT_LE(max_abs_diff(out[1], mollify(v[1], m)), 0.0);
}

// Regime oracle: worked points, an integer-lattice truth table, coherence,
// monotonicity, citations and region maps.

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "adlab/regime.hpp"

using namespace adlab;

namespace {

std::set<std::string> ids(const std::vector<Citation>& cs) {
    std::set<std::string> s;
    for (const auto& c : cs) s.insert(c.id);
    return s;
}

bool all_five(const RegimeReport& r) {
    return r.product_defined && r.distributional_exists && r.parabolic_exists && r.parabolic_unique &&
           r.all_distributional_parabolic;
}

}  // namespace

TEST(Classify, WedgeInThreeDimensions) {
    const auto r = classify({3, 0.0, 0.0, 0.5});
    EXPECT_TRUE(all_five(r));
    EXPECT_TRUE(r.known_nonuniqueness.empty());
    EXPECT_TRUE(r.open_questions.empty());
}

TEST(Classify, SquareIntegrableCorner) {
    const auto r = classify({3, 0.5, 0.5, 0.5});
    EXPECT_TRUE(r.parabolic_unique);
    EXPECT_FALSE(r.all_distributional_parabolic);
    EXPECT_TRUE(r.has_tag("P2Q2"));
    EXPECT_FALSE(r.has_question("Q5"));
    // The same point in two dimensions is the open question instead of a tag.
    const auto r2 = classify({2, 0.5, 0.5, 0.5});
    EXPECT_FALSE(r2.has_tag("P2Q2"));
    EXPECT_FALSE(r2.has_tag("DISTR"));
    EXPECT_TRUE(r2.has_question("Q5"));
}

TEST(Classify, IntegrableFieldBoundedDatum) {
    for (double ia : {0.0, 0.3, 0.5, 1.0}) {
        const auto r = classify({3, ia, 1.0, 0.0});
        EXPECT_TRUE(r.product_defined);
        EXPECT_TRUE(r.distributional_exists);
        EXPECT_FALSE(r.parabolic_exists);
        EXPECT_TRUE(r.has_tag("CIH1"));
        EXPECT_TRUE(r.has_tag("DISTR"));
    }
}

TEST(Classify, UndefinedProductCarriesOnlyDefinedness) {
    const auto r = classify({2, 0.0, 0.7, 0.7});
    EXPECT_FALSE(r.product_defined);
    EXPECT_EQ(r.flag_mask(), 0u);
    ASSERT_EQ(r.citations.size(), 1u);
    EXPECT_EQ(r.citations[0], citations::definedness);
    EXPECT_TRUE(r.known_nonuniqueness.empty());
    EXPECT_TRUE(r.open_questions.empty());
}

TEST(Classify, ClosedBoundaries) {
    EXPECT_TRUE(classify({2, 0.0, 1.0 / 3.0, 2.0 / 3.0}).product_defined);
    EXPECT_TRUE(classify({2, 0.5, 0.25, 0.25}).all_distributional_parabolic);
    EXPECT_FALSE(classify({2, 0.5 + 1e-9, 0.25, 0.25}).all_distributional_parabolic);
    EXPECT_TRUE(classify({2, 0.5 + 1e-9, 0.25, 0.25}).has_question("Q4"));
    // p = 2d/(d+2) is inside Q1's interval, not the counterexample range.
    const auto edge = classify({3, 0.0, 5.0 / 6.0, 0.0});
    EXPECT_TRUE(edge.has_question("Q1"));
    EXPECT_FALSE(edge.has_tag("CIH1"));
}

TEST(Classify, RejectsInvalidQueries) {
    EXPECT_THROW(classify({2, -0.1, 0.0, 0.0}), InvalidArgument);
    EXPECT_THROW(classify({2, 0.0, 1.5, 0.0}), InvalidArgument);
    EXPECT_THROW(classify({2, 0.0, 0.0, std::nan("")}), InvalidArgument);
    EXPECT_THROW(classify({0, 0.0, 0.0, 0.0}), InvalidArgument);
}

TEST(Classify, ExponentParsing) {
    EXPECT_EQ(exponent_reciprocal("inf"), 0.0);
    EXPECT_EQ(exponent_reciprocal("2"), 0.5);
    EXPECT_DOUBLE_EQ(exponent_reciprocal("1.5"), 2.0 / 3.0);
    EXPECT_EQ(exponent_reciprocal("1"), 1.0);
    EXPECT_THROW(exponent_reciprocal("0.5"), InvalidArgument);
    EXPECT_THROW(exponent_reciprocal("two"), InvalidArgument);
    EXPECT_THROW(exponent_reciprocal("2x"), InvalidArgument);
}

// Every reciprocal on the lattice k/12 and every threshold are exact in
// twelfths, so the oracle below uses integer comparisons only.
TEST(Classify, TwelfthsLatticeTruthTable) {
    for (int d : {2, 3, 4, 6}) {
        const int crit = 6 * (d + 2) / d;  // 12 (d+2)/(2d); exact for these d
        ASSERT_EQ(crit * d, 6 * (d + 2));
        const int inv_d = 12 / d;
        for (int a = 0; a <= 12; ++a) {
            for (int p = 0; p <= 12; ++p) {
                for (int q = 0; q <= 12; ++q) {
                    const auto r = classify({d, a / 12.0, p / 12.0, q / 12.0});
                    const bool defined = p + q <= 12;
                    SCOPED_TRACE(::testing::Message() << "d=" << d << " a=" << a << " p=" << p << " q=" << q);
                    ASSERT_EQ(r.product_defined, defined);
                    ASSERT_EQ(r.distributional_exists, defined);
                    ASSERT_EQ(r.parabolic_exists, p <= 6 && q <= 6);
                    ASSERT_EQ(r.parabolic_unique, a <= 6 && p <= 6 && q <= 6);
                    ASSERT_EQ(r.all_distributional_parabolic, a <= 6 && p + q <= 6);
                    std::set<std::string> tags, qs;
                    if (defined) {
                        if (p > crit) tags.insert("CIH1");
                        if (d > 2 && p + q == 12 && p > inv_d) tags.insert("DISTR");
                        if (d > 2 && p == 6 && q == 6) tags.insert("P2Q2");
                        if (p > 6 && p <= crit) qs.insert("Q1");
                        if (p > 6 && p <= crit && a >= 6) qs.insert("Q2");
                        if (a > 6 && p <= 6) qs.insert("Q3");
                        if (a > 6 && p + q <= 6) qs.insert("Q4");
                        if (d == 2 && p == 6 && q == 6) qs.insert("Q5");
                        if (p + q > 6 && p + q < 12) qs.insert("Q6");
                    }
                    ASSERT_EQ(ids(r.known_nonuniqueness), tags);
                    ASSERT_EQ(std::set<std::string>(r.open_questions.begin(), r.open_questions.end()), qs);
                }
            }
        }
    }
}

TEST(Properties, CoherenceAndMonotonicity) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 5), axis(0, 2);
    // Snap half the draws to twelfths so boundary points are sampled too.
    auto draw = [&]() {
        const double v = u(rng);
        return u(rng) < 0.5 ? std::round(v * 12.0) / 12.0 : v;
    };
    for (int trial = 0; trial < 10000; ++trial) {
        RegimeQuery a{dim(rng), draw(), draw(), draw()};
        RegimeQuery b = a;
        double* coord[] = {&b.inv_alpha, &b.inv_p, &b.inv_q};
        double& c = *coord[axis(rng)];
        c = c * u(rng);
        const auto ra = classify(a), rb = classify(b);
        ASSERT_TRUE(ra.coherent());
        ASSERT_TRUE(rb.coherent());
        // Every flag true at the worse point stays true at the improved one.
        ASSERT_EQ(ra.flag_mask() & rb.flag_mask(), ra.flag_mask());
    }
}

TEST(Properties, CitationCompleteness) {
    for (int d : {2, 3, 5}) {
        for (int a = 0; a <= 8; ++a) {
            for (int p = 0; p <= 8; ++p) {
                for (int q = 0; q <= 8; ++q) {
                    const auto r = classify({d, a / 8.0, p / 8.0, q / 8.0});
                    const auto cited = ids(r.citations);
                    EXPECT_TRUE(cited.count("def:distributional"));
                    EXPECT_EQ(r.distributional_exists, bool(cited.count("prop:existence")));
                    EXPECT_EQ(r.parabolic_exists, bool(cited.count("prop:parabolic-existence")));
                    EXPECT_EQ(r.parabolic_unique, bool(cited.count("thm:uniqueness")));
                    EXPECT_EQ(r.all_distributional_parabolic, bool(cited.count("thm:regularity")));
                    for (const auto& t : r.known_nonuniqueness) EXPECT_TRUE(cited.count(t.id));
                    for (const auto& oq : r.open_questions) EXPECT_TRUE(cited.count(oq));
                    for (const auto& c : r.citations) EXPECT_FALSE(c.anchor.empty());
                }
            }
        }
    }
}

TEST(Properties, AnchorSnapshot) {
    EXPECT_EQ(citations::definedness.anchor, "minimum requirement we need");
    EXPECT_EQ(citations::existence.anchor, "there exists a distributional solution");
    EXPECT_EQ(citations::parabolic_existence.anchor, "there exists at least one parabolic solution");
    EXPECT_EQ(citations::uniqueness.anchor, "there exists at most one parabolic solution");
    EXPECT_EQ(citations::regularity.anchor, "then $u\\in L_t^2 H_x^1$");
    EXPECT_EQ(citations::cih1.anchor, "infinitely many solutions to \\eqref{eq:ad} in the class $C([0,T];H^1");
    EXPECT_EQ(citations::distr.anchor,
              "non uniqueness of distributional solutions in the regime $\\sfrac{1}{p}+\\sfrac{1}{q}=1$ and $p<d$");
    EXPECT_EQ(citations::p2q2.anchor, "infinitely many distributional solutions, despite the parabolic one is unique");
    const char* questions[] = {"What happens in the case",
                               "merely $L^2$ in time",
                               "are parabolic solutions unique?",
                               "Is $u$ a parabolic solution?",
                               "not able to cover the case $d=2$",
                               "is completely open"};
    for (int k = 0; k < 6; ++k) {
        EXPECT_EQ(citations::open_questions[k].id, "Q" + std::to_string(k + 1));
        EXPECT_EQ(citations::open_questions[k].anchor, questions[k]);
    }
}

// ============================================================================
// Region maps
// ============================================================================

TEST(RegionMap, ExistenceSliceInTwoDimensions) {
    const auto m = emit_region_map(2, 0.0, 64);
    ASSERT_EQ(m.cells.size(), 64u * 64u);
    for (int j = 0; j < 64; ++j) {
        for (int i = 0; i < 64; ++i) {
            const auto& r = m.at(i, j);
            EXPECT_EQ(r.product_defined, i + j + 1 <= 64);  // (i + j + 1)/64 <= 1
            EXPECT_EQ(r.parabolic_exists, i < 32 && j < 32);
            EXPECT_TRUE(r.coherent());
        }
    }
}

TEST(RegionMap, WedgeStrictlyInsideCube) {
    const auto m = emit_region_map(3, 0.0, 64);
    int wedge = 0, cube = 0;
    for (const auto& r : m.cells) {
        if (r.all_distributional_parabolic) {
            ++wedge;
            EXPECT_TRUE(r.parabolic_unique);
        }
        cube += r.parabolic_unique;
    }
    EXPECT_GT(wedge, 0);
    EXPECT_LT(wedge, cube);
}

TEST(RegionMap, ThreadedRasterMatchesSerial) {
    const auto a = emit_region_map(3, 0.7, 40, 1);
    const auto b = emit_region_map(3, 0.7, 40, 4);
    EXPECT_EQ(region_map_csv(a), region_map_csv(b));
}

TEST(RegionMap, Outputs) {
    EXPECT_THROW(emit_region_map(2, 0.0, 8), InvalidArgument);
    const auto m = emit_region_map(2, 0.0, 16);
    const auto csv = region_map_csv(m);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16 * 16 + 1);
    const auto svg = region_map_svg(m);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("prop:parabolic-existence"), std::string::npos);
    EXPECT_NE(svg.find("product undefined"), std::string::npos);
}

#pragma once

/// @file regime.hpp
/// @brief Well-posedness map over exponent space (d, 1/alpha, 1/p, 1/q): which
/// existence, uniqueness and regularity statements apply at a point, which
/// nonuniqueness constructions are known, and which open question governs it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "adlab/errors.hpp"

namespace adlab {

struct RegimeQuery {
    int d = 2;
    double inv_alpha = 0.0;
    double inv_p = 0.0;
    double inv_q = 0.0;

    void validate() const {
        if (d < 1) throw InvalidArgument("regime: dimension must be >= 1");
        for (double v : {inv_alpha, inv_p, inv_q}) {
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("regime: reciprocal exponents must lie in [0, 1]");
        }
    }
};

/// A statement id with a short verbatim anchor from its source text.
struct Citation {
    std::string id;
    std::string anchor;

    bool operator==(const Citation&) const = default;
};

namespace citations {

inline const Citation definedness{"def:distributional", "minimum requirement we need"};
inline const Citation existence{"prop:existence", "there exists a distributional solution"};
inline const Citation parabolic_existence{"prop:parabolic-existence", "there exists at least one parabolic solution"};
inline const Citation uniqueness{"thm:uniqueness", "there exists at most one parabolic solution"};
inline const Citation regularity{"thm:regularity", R"(then $u\in L_t^2 H_x^1$)"};

inline const Citation cih1{"CIH1", R"(infinitely many solutions to \eqref{eq:ad} in the class $C([0,T];H^1)"};
inline const Citation distr{"DISTR",
                            R"(non uniqueness of distributional solutions in the regime $\sfrac{1}{p}+\sfrac{1}{q}=1$ and $p<d$)"};
inline const Citation p2q2{"P2Q2", "infinitely many distributional solutions, despite the parabolic one is unique"};

inline const std::array<Citation, 6> open_questions{{
    {"Q1", "What happens in the case"},
    {"Q2", "merely $L^2$ in time"},
    {"Q3", "are parabolic solutions unique?"},
    {"Q4", "Is $u$ a parabolic solution?"},
    {"Q5", "not able to cover the case $d=2$"},
    {"Q6", "is completely open"},
}};

}  // namespace citations

struct RegimeReport {
    RegimeQuery query;
    bool product_defined = false;
    bool distributional_exists = false;
    bool parabolic_exists = false;
    bool parabolic_unique = false;
    bool all_distributional_parabolic = false;
    std::vector<Citation> known_nonuniqueness;
    std::vector<std::string> open_questions;
    std::vector<Citation> citations;

    [[nodiscard]] bool coherent() const {
        return (!parabolic_unique || parabolic_exists) && (!parabolic_exists || distributional_exists) &&
               (!distributional_exists || product_defined) && (!all_distributional_parabolic || parabolic_unique);
    }

    /// Five-bit key, one bit per flag in declaration order.
    [[nodiscard]] unsigned flag_mask() const {
        return unsigned(product_defined) | unsigned(distributional_exists) << 1 | unsigned(parabolic_exists) << 2 |
               unsigned(parabolic_unique) << 3 | unsigned(all_distributional_parabolic) << 4;
    }

    [[nodiscard]] bool has_tag(const std::string& id) const {
        return std::any_of(known_nonuniqueness.begin(), known_nonuniqueness.end(),
                           [&](const Citation& c) { return c.id == id; });
    }

    [[nodiscard]] bool has_question(const std::string& q) const {
        return std::find(open_questions.begin(), open_questions.end(), q) != open_questions.end();
    }
};

namespace detail {

// Boundaries are closed; the slack absorbs round-off in sums like 1/3 + 2/3.
constexpr double kRegimeSlack = 1e-12;

inline bool leq(double a, double b) { return a <= b + kRegimeSlack; }
inline bool near(double a, double b) { return std::abs(a - b) <= kRegimeSlack; }

inline const Citation& open_question(int k) { return citations::open_questions[std::size_t(k - 1)]; }

}  // namespace detail

inline RegimeReport classify(const RegimeQuery& q) {
    using detail::leq;
    using detail::near;
    q.validate();
    RegimeReport r;
    r.query = q;
    const double sum = q.inv_p + q.inv_q;
    const double half = 0.5;

    r.product_defined = leq(sum, 1.0);
    r.citations.push_back(citations::definedness);
    if (!r.product_defined) return r;

    r.distributional_exists = true;
    r.citations.push_back(citations::existence);
    r.parabolic_exists = leq(q.inv_p, half) && leq(q.inv_q, half);
    if (r.parabolic_exists) r.citations.push_back(citations::parabolic_existence);
    r.parabolic_unique = r.parabolic_exists && leq(q.inv_alpha, half);
    if (r.parabolic_unique) r.citations.push_back(citations::uniqueness);
    r.all_distributional_parabolic = leq(q.inv_alpha, half) && leq(sum, half);
    if (r.all_distributional_parabolic) r.citations.push_back(citations::regularity);

    const double critical = double(q.d + 2) / (2.0 * q.d);  // 1 / (2d/(d+2))
    if (q.inv_p > critical + detail::kRegimeSlack) r.known_nonuniqueness.push_back(citations::cih1);
    if (q.d > 2 && near(sum, 1.0) && q.inv_p > 1.0 / q.d + detail::kRegimeSlack) {
        r.known_nonuniqueness.push_back(citations::distr);
    }
    if (q.d > 2 && near(q.inv_p, half) && near(q.inv_q, half)) r.known_nonuniqueness.push_back(citations::p2q2);

    std::vector<int> open;
    const bool q1_band = leq(q.inv_p, critical) && q.inv_p > half + detail::kRegimeSlack;
    if (q1_band) open.push_back(1);
    if (q1_band && q.inv_alpha >= half - detail::kRegimeSlack) open.push_back(2);
    if (q.inv_alpha > half + detail::kRegimeSlack && leq(q.inv_p, half)) open.push_back(3);
    if (q.inv_alpha > half + detail::kRegimeSlack && leq(sum, half)) open.push_back(4);
    if (q.d == 2 && near(q.inv_p, half) && near(q.inv_q, half)) open.push_back(5);
    if (sum > half + detail::kRegimeSlack && sum < 1.0 - detail::kRegimeSlack) open.push_back(6);
    for (int k : open) r.open_questions.push_back(detail::open_question(k).id);

    for (const auto& c : r.known_nonuniqueness) r.citations.push_back(c);
    for (int k : open) r.citations.push_back(detail::open_question(k));
    return r;
}

/// Converts "inf" / "infinity" or a number >= 1 to its reciprocal.
inline double exponent_reciprocal(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return 0.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InvalidArgument("exponent '" + s + "' is neither a number nor 'inf'");
    }
    if (used != s.size()) throw InvalidArgument("exponent '" + s + "' has trailing characters");
    if (std::isinf(v) && v > 0) return 0.0;
    if (!(v >= 1.0)) throw InvalidArgument("exponent '" + s + "' must be >= 1");
    return 1.0 / v;
}

// ============================================================================
// Region maps
// ============================================================================

/// Raster of the (1/p, 1/q) unit square at fixed d and 1/alpha. Cell (i, j)
/// samples its center: inv_p = (i + 1/2)/res, inv_q = (j + 1/2)/res.
struct RegionMap {
    int d = 2;
    double inv_alpha = 0.0;
    int resolution = 0;
    std::vector<RegimeReport> cells;  // index j * resolution + i

    [[nodiscard]] const RegimeReport& at(int i, int j) const { return cells[std::size_t(j) * resolution + i]; }
};

inline RegionMap emit_region_map(int d, double inv_alpha, int resolution, int threads = 1) {
    if (resolution < 16) throw InvalidArgument("emit_region_map: resolution must be >= 16");
    RegimeQuery{d, inv_alpha, 0.0, 0.0}.validate();
    RegionMap m{d, inv_alpha, resolution, std::vector<RegimeReport>(std::size_t(resolution) * resolution)};
    const int workers = std::max(1, std::min(threads, resolution));
    auto rows = [&](int first) {
        for (int j = first; j < resolution; j += workers) {
            for (int i = 0; i < resolution; ++i) {
                m.cells[std::size_t(j) * resolution + i] =
                    classify({d, inv_alpha, (i + 0.5) / resolution, (j + 0.5) / resolution});
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(rows, w);
    rows(0);
    for (auto& t : pool) t.join();
    return m;
}

namespace detail {

inline std::string region_label(unsigned mask) {
    static const char* names[] = {"product defined", "distributional exists", "parabolic exists", "parabolic unique",
                                  "all distributional parabolic"};
    for (int b = 4; b >= 0; --b) {
        if (mask & (1u << b)) return names[b];
    }
    return "product undefined";
}

inline const char* region_fill(unsigned mask) {
    switch (mask) {
        case 0b00000: return "#f2f2f2";
        case 0b00011: return "#bdbdbd";
        case 0b00111: return "#9ecae1";
        case 0b01111: return "#3182bd";
        case 0b11111: return "#de2d26";
        default: return "#756bb1";
    }
}

inline std::string join_ids(const std::vector<std::string>& ids, char sep) {
    std::string s;
    for (const auto& id : ids) {
        if (!s.empty()) s += sep;
        s += id;
    }
    return s;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// One row per cell: inv_p, inv_q, the five flags, tags and open questions.
inline std::string region_map_csv(const RegionMap& m) {
    std::string out =
        "inv_p,inv_q,inv_alpha,product_defined,distributional_exists,parabolic_exists,parabolic_unique,"
        "all_distributional_parabolic,known_nonuniqueness,open_questions\n";
    char buf[128];
    for (int j = 0; j < m.resolution; ++j) {
        for (int i = 0; i < m.resolution; ++i) {
            const auto& r = m.at(i, j);
            std::vector<std::string> tags;
            for (const auto& c : r.known_nonuniqueness) tags.push_back(c.id);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d,%d,%d,%d,", r.query.inv_p, r.query.inv_q,
                          r.query.inv_alpha, int(r.product_defined), int(r.distributional_exists),
                          int(r.parabolic_exists), int(r.parabolic_unique), int(r.all_distributional_parabolic));
            out += buf;
            out += detail::join_ids(tags, ';') + "," + detail::join_ids(r.open_questions, ';') + "\n";
        }
    }
    return out;
}

/// Square plot with 1/p to the right and 1/q upward, one fill per flag
/// combination, and a legend listing the citations of each region present.
inline std::string region_map_svg(const RegionMap& m) {
    const int px = 480, margin = 40, legend_w = 520;
    const double cell = double(px) / m.resolution;
    std::string s;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  px + 2 * margin + legend_w, px + 2 * margin);
    s += buf;
    std::map<unsigned, const RegimeReport*> present;
    for (int j = 0; j < m.resolution; ++j) {
        for (int i = 0; i < m.resolution; ++i) {
            const auto& r = m.at(i, j);
            present.emplace(r.flag_mask(), &r);
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"%s\" "
                          "stroke=\"none\"/>\n",
                          margin + i * cell, margin + (m.resolution - 1 - j) * cell, cell + 0.05, cell + 0.05,
                          detail::region_fill(r.flag_mask()));
            s += buf;
        }
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n"
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">1/p</text>\n"
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" transform=\"rotate(-90 %d %d)\">1/q</text>\n"
                  "<text x=\"%d\" y=\"%d\">d = %d, 1/alpha = %.4g</text>\n",
                  margin, margin, px, px, margin + px / 2, margin + px + 28, margin - 24, margin + px / 2, margin - 24,
                  margin + px / 2, margin, margin - 12, m.d, m.inv_alpha);
    s += buf;
    int y = margin + 10;
    const int x0 = margin + px + 30;
    for (const auto& [mask, rep] : present) {
        std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"14\" height=\"14\" fill=\"%s\" stroke=\"black\"/>\n",
                      x0, y, detail::region_fill(mask));
        s += buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\">%s</text>\n", x0 + 20, y + 12,
                      detail::region_label(mask).c_str());
        s += buf;
        y += 18;
        for (const auto& c : rep->citations) {
            if (c.id.rfind("Q", 0) == 0 || c.id == "CIH1" || c.id == "DISTR" || c.id == "P2Q2") continue;
            std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" font-size=\"10\">%s: %s</text>\n", x0 + 20,
                          y + 10, c.id.c_str(), detail::xml_escape(c.anchor).c_str());
            s += buf;
            y += 14;
        }
        y += 6;
    }
    s += "</svg>\n";
    return s;
}

}  // namespace adlab

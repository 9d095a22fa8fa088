#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "mtlkit/errors.hpp"
#include "mtlkit/metrics.hpp"

using namespace mtlkit;

namespace {

// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie), all pairs.
double pairwise_auc(const ScoredSet& s) {
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (const Scored& p : s) {
        if (p.label != 1) continue;
        for (const Scored& n : s) {
            if (n.label != 0) continue;
            pairs += 1;
            if (p.score > n.score)
                wins += 1.0;
            else if (p.score == n.score)
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// ROC recomputed by explicit threshold enumeration over distinct scores.
RocCurve brute_roc(const ScoredSet& s) {
    int pos = 0, neg = 0;
    for (const Scored& e : s) (e.label == 1 ? pos : neg) += 1;
    std::set<double, std::greater<double>> thresholds;
    for (const Scored& e : s) thresholds.insert(e.score);
    RocCurve curve = {{0.0, 0.0}};
    for (double th : thresholds) {
        int tp = 0, fp = 0;
        for (const Scored& e : s)
            if (e.score >= th) (e.label == 1 ? tp : fp) += 1;
        curve.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    }
    return curve;
}

ScoredSet random_scored(int n, std::uint64_t seed, bool with_ties) {
    Rng rng(seed);
    ScoredSet s;
    for (int i = 0; i < n; ++i) {
        double score = uniform_double(rng);
        if (with_ties) score = std::floor(score * 8.0) / 8.0;
        s.push_back({score, uniform_double(rng) < 0.4 ? 1 : 0});
    }
    // Guarantee both classes.
    s[0].label = 1;
    s[1].label = 0;
    return s;
}

} // namespace

TEST_CASE("auc equals the pairwise Mann-Whitney statistic, ties included") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const ScoredSet plain = random_scored(200, seed, false);
        CHECK(auc(plain) == doctest::Approx(pairwise_auc(plain)).epsilon(1e-12));
        const ScoredSet tied = random_scored(200, seed + 10, true);
        CHECK(auc(tied) == doctest::Approx(pairwise_auc(tied)).epsilon(1e-12));
    }
}

TEST_CASE("roc matches explicit threshold enumeration") {
    for (std::uint64_t seed : {4ULL, 5ULL}) {
        const ScoredSet s = random_scored(60, seed, true);
        const RocCurve got = roc(s);
        const RocCurve want = brute_roc(s);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].fpr == doctest::Approx(want[i].fpr).epsilon(1e-12));
            CHECK(got[i].tpr == doctest::Approx(want[i].tpr).epsilon(1e-12));
        }
    }
}

TEST_CASE("roc endpoints and monotonicity") {
    const ScoredSet s = random_scored(100, 6, true);
    const RocCurve c = roc(s);
    CHECK(c.front().fpr == 0.0);
    CHECK(c.front().tpr == 0.0);
    CHECK(c.back().fpr == doctest::Approx(1.0));
    CHECK(c.back().tpr == doctest::Approx(1.0));
    for (std::size_t i = 1; i < c.size(); ++i) {
        CHECK(c[i].fpr >= c[i - 1].fpr);
        CHECK(c[i].tpr >= c[i - 1].tpr);
    }
}

TEST_CASE("degenerate score sets are rejected") {
    CHECK_THROWS_AS(roc({{0.5, 1}, {0.2, 1}}), NumericError);
    CHECK_THROWS_AS(auc({{0.5, 0}}), NumericError);
    CHECK_THROWS_AS(roc({}), NumericError);
}

TEST_CASE("perfect and inverted separations bracket the auc range") {
    const ScoredSet perfect = {{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}};
    CHECK(auc(perfect) == doctest::Approx(1.0));
    const ScoredSet inverted = {{0.1, 1}, {0.2, 1}, {0.8, 0}, {0.9, 0}};
    CHECK(auc(inverted) == doctest::Approx(0.0));
    const ScoredSet all_tied = {{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}};
    CHECK(auc(all_tied) == doctest::Approx(0.5));
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    const ScoredSet s = random_scored(150, 7, false);
    ScoredSet warped = s;
    for (Scored& e : warped) e.score = std::exp(3.0 * e.score) - 0.5;
    CHECK(auc(warped) == doctest::Approx(auc(s)).epsilon(1e-12));
}

TEST_CASE("label flip mirrors the auc") {
    const ScoredSet s = random_scored(150, 8, true);
    ScoredSet flipped = s;
    for (Scored& e : flipped) e.label = 1 - e.label;
    CHECK(auc(flipped) == doctest::Approx(1.0 - auc(s)).epsilon(1e-12));
}

TEST_CASE("tpr_at_fpr interpolates on the fixture curves") {
    // Three-point elbow: expect 0.1/0.2 of the way up the first rise.
    const RocCurve elbow = {{0.0, 0.0}, {0.2, 0.8}, {1.0, 1.0}};
    CHECK(tpr_at_fpr(elbow, 0.1) == doctest::Approx(0.4));
    // Chance diagonal.
    const RocCurve diag = {{0.0, 0.0}, {1.0, 1.0}};
    CHECK(tpr_at_fpr(diag, 0.1) == doctest::Approx(0.1));
    // Perfect classifier reaches tpr 1 at fpr 0.
    const RocCurve perfect = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
    CHECK(tpr_at_fpr(perfect, 0.1) == doctest::Approx(1.0));
    // Exact hit needs no interpolation.
    const RocCurve exact = {{0.0, 0.0}, {0.1, 0.6}, {1.0, 1.0}};
    CHECK(tpr_at_fpr(exact, 0.1) == doctest::Approx(0.6));
}

TEST_CASE("tpr_at_fpr uses the topmost point of a vertical run") {
    const RocCurve vertical = {{0.0, 0.0}, {0.1, 0.3}, {0.1, 0.7}, {1.0, 1.0}};
    CHECK(tpr_at_fpr(vertical, 0.1) == doctest::Approx(0.7));
}

TEST_CASE("precision_recall matches a naive threshold sweep") {
    const ScoredSet s = random_scored(80, 9, true);
    int pos = 0;
    for (const Scored& e : s) pos += e.label == 1;
    const std::vector<PrPoint> got = precision_recall(s);
    std::set<double, std::greater<double>> thresholds;
    for (const Scored& e : s) thresholds.insert(e.score);
    REQUIRE(got.size() == thresholds.size());
    std::size_t i = 0;
    for (double th : thresholds) {
        int tp = 0, fp = 0;
        for (const Scored& e : s)
            if (e.score >= th) (e.label == 1 ? tp : fp) += 1;
        CHECK(got[i].recall == doctest::Approx(static_cast<double>(tp) / pos));
        CHECK(got[i].precision == doctest::Approx(static_cast<double>(tp) / (tp + fp)));
        ++i;
    }
}

TEST_CASE("f1_at applies the fixed threshold with score >= threshold positive") {
    // tp=2 (0.9,0.5 labeled 1), fp=1 (0.7), fn=1 (0.4).
    const ScoredSet s = {{0.9, 1}, {0.5, 1}, {0.7, 0}, {0.4, 1}, {0.2, 0}};
    const double precision = 2.0 / 3.0, recall = 2.0 / 3.0;
    CHECK(f1_at(s, 0.5) == doctest::Approx(2.0 * precision * recall / (precision + recall)));
    // No predicted positives -> 0 by definition.
    CHECK(f1_at({{0.1, 1}, {0.2, 0}}, 0.5) == 0.0);
    // No true positives among predictions -> 0.
    CHECK(f1_at({{0.9, 0}, {0.1, 1}}, 0.5) == 0.0);
}

TEST_CASE("bootstrap is deterministic in the seed and monotone in separation") {
    Rng rng(10);
    ScoredSet strong_a, weak_b;
    for (int i = 0; i < 240; ++i) {
        const int label = i % 3 == 0 ? 1 : 0;
        const double noise = uniform_double(rng);
        strong_a.push_back({label * 0.8 + 0.2 * noise, label});
        weak_b.push_back({0.2 * label + 0.8 * noise, label});
    }
    const BootstrapResult r1 = bootstrap_auc_diff(strong_a, weak_b, 500, 42);
    const BootstrapResult r2 = bootstrap_auc_diff(strong_a, weak_b, 500, 42);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.observed_diff == doctest::Approx(auc(strong_a) - auc(weak_b)));
    CHECK(r1.p_value > 0.0);
    CHECK(r1.p_value <= 1.0);
    CHECK(r1.significant == (r1.p_value < 0.05));
    CHECK(r1.p_value < 0.05); // clearly separated systems

    // Identical systems: p must be large.
    const BootstrapResult same = bootstrap_auc_diff(weak_b, weak_b, 500, 43);
    CHECK(same.p_value > 0.5);
}

TEST_CASE("bootstrap smallest possible p is 1/(1+R)") {
    ScoredSet a, b;
    Rng rng(11);
    for (int i = 0; i < 60; ++i) {
        const int label = i % 2;
        a.push_back({static_cast<double>(label), label}); // perfect
        b.push_back({uniform_double(rng), label});        // chance
    }
    const BootstrapResult r = bootstrap_auc_diff(a, b, 199, 44);
    CHECK(r.p_value >= 1.0 / 200.0);
    CHECK(r.p_value == doctest::Approx(1.0 / 200.0));
}

TEST_CASE("bootstrap rejects unpaired inputs") {
    const ScoredSet a = {{0.5, 1}, {0.4, 0}};
    const ScoredSet short_b = {{0.5, 1}};
    CHECK_THROWS_AS(bootstrap_auc_diff(a, short_b, 10, 1), NumericError);
    const ScoredSet mislabeled = {{0.5, 0}, {0.4, 1}};
    CHECK_THROWS_AS(bootstrap_auc_diff(a, mislabeled, 10, 1), NumericError);
}

#include "mtlkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mtlkit/errors.hpp"

namespace mtlkit {

namespace {

void count_classes(const ScoredSet& scores, int* pos, int* neg) {
    *pos = 0;
    *neg = 0;
    for (const Scored& s : scores) (s.label == 1 ? *pos : *neg) += 1;
}

std::vector<int> sorted_by_score_desc(const ScoredSet& scores) {
    std::vector<int> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[a].score > scores[b].score; });
    return idx;
}

} // namespace

RocCurve roc(const ScoredSet& scores) {
    int pos = 0, neg = 0;
    count_classes(scores, &pos, &neg);
    if (pos == 0 || neg == 0)
        throw NumericError("roc: need at least one positive and one negative");

    const std::vector<int> idx = sorted_by_score_desc(scores);
    RocCurve curve;
    curve.push_back({0.0, 0.0});
    int tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double threshold = scores[idx[i]].score;
        while (i < idx.size() && scores[idx[i]].score == threshold) {
            (scores[idx[i]].label == 1 ? tp : fp) += 1;
            ++i;
        }
        curve.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    }
    return curve;
}

double auc(const ScoredSet& scores) {
    const RocCurve curve = roc(scores);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
    return area;
}

double tpr_at_fpr(const RocCurve& curve, double target_fpr) {
    if (target_fpr < 0.0 || target_fpr > 1.0)
        throw NumericError("tpr_at_fpr: target must be in [0,1]");
    if (curve.size() < 2) throw NumericError("tpr_at_fpr: malformed curve");
    // Last point at or below the target; on vertical runs this picks the
    // highest achievable TPR.
    std::size_t lo = 0;
    for (std::size_t i = 0; i < curve.size(); ++i)
        if (curve[i].fpr <= target_fpr) lo = i;
    if (curve[lo].fpr == target_fpr || lo + 1 >= curve.size()) return curve[lo].tpr;
    const RocPoint& a = curve[lo];
    const RocPoint& b = curve[lo + 1];
    const double w = (target_fpr - a.fpr) / (b.fpr - a.fpr);
    return a.tpr + w * (b.tpr - a.tpr);
}

std::vector<PrPoint> precision_recall(const ScoredSet& scores) {
    int pos = 0, neg = 0;
    count_classes(scores, &pos, &neg);
    if (pos == 0) throw NumericError("precision_recall: no positives");

    const std::vector<int> idx = sorted_by_score_desc(scores);
    std::vector<PrPoint> points;
    int tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double threshold = scores[idx[i]].score;
        while (i < idx.size() && scores[idx[i]].score == threshold) {
            (scores[idx[i]].label == 1 ? tp : fp) += 1;
            ++i;
        }
        points.push_back({static_cast<double>(tp) / pos,
                          static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    return points;
}

double f1_at(const ScoredSet& scores, double threshold) {
    int tp = 0, fp = 0, fn = 0;
    for (const Scored& s : scores) {
        const bool predicted = s.score >= threshold;
        if (s.label == 1)
            (predicted ? tp : fn) += 1;
        else if (predicted)
            fp += 1;
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / (tp + fp);
    const double recall = static_cast<double>(tp) / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

BootstrapResult bootstrap_auc_diff(const ScoredSet& a, const ScoredSet& b, int resamples,
                                   std::uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw NumericError("bootstrap_auc_diff: score sets must cover the same users");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].label != b[i].label)
            throw NumericError("bootstrap_auc_diff: labels disagree at index " +
                               std::to_string(i));
    if (resamples < 1) throw NumericError("bootstrap_auc_diff: resamples must be >= 1");

    BootstrapResult res;
    res.resamples = resamples;
    res.observed_diff = auc(a) - auc(b);

    constexpr int kRedrawCap = 100;
    const std::size_t n = a.size();
    int non_positive = 0;
    for (int s = 0; s < resamples; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        ScoredSet ra(n), rb(n);
        bool ok = false;
        for (int attempt = 0; attempt < kRedrawCap && !ok; ++attempt) {
            int pos = 0, neg = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = uniform_index(rng, n);
                ra[i] = a[j];
                rb[i] = b[j];
                (a[j].label == 1 ? pos : neg) += 1;
            }
            ok = pos > 0 && neg > 0;
        }
        if (!ok)
            throw NumericError("bootstrap_auc_diff: could not draw a non-degenerate resample");
        if (auc(ra) - auc(rb) <= 0.0) ++non_positive;
    }
    res.p_value = (1.0 + non_positive) / (1.0 + resamples);
    res.significant = res.p_value < 0.05;
    return res;
}

} // namespace mtlkit

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mtlkit/rng.hpp"

namespace mtlkit {

// Scores and binary labels for one task, restricted to users labeled for it.
struct Scored {
    double score = 0.0;
    int label = 0;
};
using ScoredSet = std::vector<Scored>;

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// Ordered from (0,0) to (1,1); tied scores grouped at one threshold.
using RocCurve = std::vector<RocPoint>;

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

RocCurve roc(const ScoredSet& scores);
double auc(const ScoredSet& scores);

// Linear interpolation of TPR at the target FPR.
double tpr_at_fpr(const RocCurve& curve, double target_fpr = 0.1);

// (recall, precision) over all distinct score thresholds, descending.
std::vector<PrPoint> precision_recall(const ScoredSet& scores);

// F1 at a fixed decision threshold (score >= threshold -> positive);
// defined as 0 when precision or recall is undefined.
double f1_at(const ScoredSet& scores, double threshold = 0.5);

struct BootstrapResult {
    double observed_diff = 0.0;
    int resamples = 5000;
    double p_value = 1.0;
    bool significant = false; // at alpha = 0.05
};

// Paired bootstrap over users: resample indices with replacement, recompute
// both AUCs per resample; one-sided p = (1 + #{diff <= 0}) / (1 + resamples)
// for the hypothesis auc(a) > auc(b). Degenerate resamples (one class) are
// redrawn up to a cap. Deterministic in the seed; resample i uses a seed
// derived from (seed, i), so the result is independent of evaluation order.
BootstrapResult bootstrap_auc_diff(const ScoredSet& a, const ScoredSet& b, int resamples,
                                   std::uint64_t seed);

} // namespace mtlkit

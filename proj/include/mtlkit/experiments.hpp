#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtlkit/data.hpp"
#include "mtlkit/metrics.hpp"
#include "mtlkit/model.hpp"
#include "mtlkit/trainer.hpp"

namespace mtlkit {

struct SweepGrid {
    std::vector<double> l2 = {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 5.0, 10.0};
    std::vector<int> hidden_widths = {16, 32, 64, 128, 256, 512, 1024, 2048};
    std::vector<double> learning_rates = {1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1};
};

enum class SweepDim { learning_rate, l2, width };

SweepDim sweep_dim_from_string(const std::string& s);
std::string to_string(SweepDim d);

struct SweepRow {
    double value = 0.0;
    double mean_terminal_dev_loss = 0.0; // mean over the last 10 recorded evals
    bool diverged = false;
};

enum class AuxSubset { all, all_conds, neuro, neuro_mood, neuro_anx, neuro_targets, none };

AuxSubset aux_subset_from_string(const std::string& s);
std::string to_string(AuxSubset s);

// Head indices for {main} + auxiliary subset, in registry order. `none`
// yields just the main task (the STL configuration).
std::vector<int> ablation_heads(const std::string& main_task, AuxSubset subset,
                                const TaskRegistry& registry);

// Model for a config: mtl/lr directly, stl with per-task width matched to
// the equivalent MTL parameter count.
ModelParams build_from_config(const TrainConfig& cfg, int input_dim,
                              const TaskRegistry& registry);

// One-dimensional line search: vary `dim` over `values`, train the joint
// phase, record the mean dev loss over the final window. Diverged runs are
// recorded and the sweep continues. Cells run on a bounded worker pool.
std::vector<SweepRow> run_sweep(SweepDim dim, const std::vector<double>& values,
                                const Dataset& train, const Dataset& dev,
                                const TrainConfig& base_cfg, int n_workers = 1);

struct AblationResult {
    std::string main_task;
    AuxSubset subset = AuxSubset::all;
    double main_auc = 0.0;
    ScoredSet main_scores; // test-fold scores for the main task
};

AblationResult run_ablation(const std::string& main_task, AuxSubset subset, const Dataset& all,
                            const std::vector<int>& fold_of, const TrainConfig& cfg);

struct TaskMetrics {
    std::string task;
    bool defined = false; // false when the test fold lacks both classes
    double auc = 0.0;
    double tpr_at_fpr01 = 0.0;
    double f1 = 0.0;
};

struct ModelEval {
    ModelKind kind = ModelKind::mtl;
    std::vector<TaskMetrics> per_task;
    std::vector<ScoredSet> scores; // per task, test fold, labeled users only
    ModelParams model;
};

struct Comparison {
    std::string task;
    ModelKind candidate = ModelKind::mtl;
    ModelKind baseline = ModelKind::lr;
    BootstrapResult result;
};

struct ExperimentReport {
    std::vector<ModelEval> models;
    std::vector<Comparison> comparisons;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t data_hash = 0;
};

// Test-fold metrics for one trained model.
ModelEval evaluate_model(const ModelParams& model, const Dataset& test);

// Full 3/1/1 protocol: train each requested model class with the two-phase
// schedule, report test metrics, and bootstrap-compare every candidate
// against the LR and STL baselines when present.
ExperimentReport run_protocol(const Dataset& all, const std::vector<int>& fold_of,
                              const std::vector<ModelKind>& kinds, const TrainConfig& cfg,
                              int bootstrap_resamples = 5000);

// Bounded worker pool; jobs must be independent.
void run_jobs(int n_jobs, int n_workers, const std::function<void(int)>& job);

} // namespace mtlkit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtlkit/data.hpp"
#include "mtlkit/model.hpp"
#include "mtlkit/rng.hpp"

namespace mtlkit {

enum class Optimizer { adagrad, sgd };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
    int batch_size = 256;
    int joint_iters = 5000;
    int finetune_iters = 1000;
    int eval_every = 10; // dev-loss evaluation period, in gradient steps
    double learning_rate = 5e-2;
    double l2 = 1e-3;
    double dropout_rate = 0.05;
    int hidden_width = 256;
    int shared_depth = 1;
    std::uint64_t seed = 1;
    Optimizer optimizer = Optimizer::adagrad;
    ModelKind model = ModelKind::mtl;

    void validate() const;
};

// Per-tensor accumulated squared gradients.
struct AdagradState {
    std::vector<Layer> accum; // shaped like the model's layers, all zeros at start
    double epsilon = 1e-8;
};

AdagradState make_adagrad_state(const ModelParams& params);

struct Checkpoint {
    ModelParams params;
    int iteration = 0;
    double dev_loss = 0.0;
};

struct CurvePoint {
    int iteration = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<CurvePoint> curve;
};

// Uniform-with-replacement mini-batch of row indices.
std::vector<int> sample_batch(int n_rows, int batch_size, Rng& rng);

// theta -= lr * g / (sqrt(accum += g^2) + eps), per scalar.
void adagrad_step(ModelParams& params, const std::vector<Layer>& grads, AdagradState& state,
                  double learning_rate);
// Only the tensors listed in `layer_idx` are touched.
void adagrad_step_partial(ModelParams& params, const std::vector<Layer>& grads,
                          AdagradState& state, double learning_rate,
                          const std::vector<int>& layer_idx);

void sgd_step(ModelParams& params, const std::vector<Layer>& grads, double learning_rate);
void sgd_step_partial(ModelParams& params, const std::vector<Layer>& grads, double learning_rate,
                      const std::vector<int>& layer_idx);

// Joint phase: mini-batch steps over all weights, dev loss recorded at
// iteration 0 and every cfg.eval_every steps; returns the checkpoint with the
// lowest dev loss (earliest on ties) plus the full loss curve.
TrainResult train_joint(const ModelParams& init, const Dataset& train, const Dataset& dev,
                        const TrainConfig& cfg);

struct TaskCheckpoint {
    int iteration = 0;
    double dev_loss = 0.0;
    bool selected_by_dev = true; // false when the task had no labeled dev users
};

struct FinetuneResult {
    ModelParams params; // shared stack from the joint checkpoint, per-task best heads
    std::vector<TaskCheckpoint> per_task;
    std::vector<std::vector<CurvePoint>> curves; // per task
};

// Per-task phase: shared weights frozen, each task's own layers updated for
// cfg.finetune_iters steps against that task's loss alone; per-task selection
// by that task's dev loss.
FinetuneResult finetune_heads(const ModelParams& joint, const Dataset& train, const Dataset& dev,
                              const TrainConfig& cfg);

// The full two-phase schedule: joint phase followed by per-task fine-tuning.
ModelParams train_full(const ModelParams& init, const Dataset& train, const Dataset& dev,
                       const TrainConfig& cfg, TrainResult* joint_out = nullptr);

} // namespace mtlkit

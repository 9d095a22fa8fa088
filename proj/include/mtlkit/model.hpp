#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mtlkit/matrix.hpp"
#include "mtlkit/ops.hpp"
#include "mtlkit/rng.hpp"

namespace mtlkit {

enum class TaskRole { condition, demographic };

// Ordered task list; order defines output-head indices.
struct TaskRegistry {
    std::vector<std::string> names;
    std::vector<TaskRole> roles;

    int size() const { return static_cast<int>(names.size()); }
    int index_of(const std::string& name) const; // -1 if absent
};

// Canonical ten-task registry used by the synthetic cohorts and as the
// default head order everywhere.
TaskRegistry default_registry();

enum class ModelKind : std::uint8_t { lr = 0, stl = 1, mtl = 2 };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// One parametric description covering all three model classes:
//   lr  - per task: head only, straight off the input.
//   stl - per task: two ReLU hidden layers of width task_width, then head.
//   mtl - shared ReLU stack (shared_widths), per-task ReLU layer of width
//         task_width, then per-task head.
struct Topology {
    ModelKind kind = ModelKind::mtl;
    int input_dim = 0;
    std::vector<int> shared_widths; // mtl only; empty otherwise
    int task_width = 0;             // 0 for lr
    int n_tasks = 0;

    void validate() const;
};

std::int64_t param_count(const Topology& topo);
std::int64_t mtl_param_count(int input_dim, int width, int shared_depth, int n_tasks);
// One single-task two-hidden-layer model with both widths equal to w.
std::int64_t stl_param_count(int input_dim, int w);

struct Layer {
    std::string name;
    Matrix weights;
    std::vector<double> bias;
};

struct ModelParams {
    Topology topo;
    TaskRegistry tasks;
    std::vector<Layer> layers; // declaration order; see layout helpers below
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;

    // Layout helpers.
    int shared_layer_count() const;
    int layers_per_task() const;
    // Index of the first layer owned by task t (its hidden layers + head).
    int task_layer_begin(int t) const;
    bool layer_is_shared(int layer_idx) const { return layer_idx < shared_layer_count(); }
    // Owning task of a layer, or -1 for shared layers.
    int layer_task(int layer_idx) const;
};

bool operator==(const ModelParams& a, const ModelParams& b);

// Scaled-uniform fan-based init for weights, zero biases; deterministic in
// the seed.
ModelParams build_model(const Topology& topo, const TaskRegistry& registry, std::uint64_t seed);

ModelParams build_mtl(int input_dim, int width, int shared_depth, const TaskRegistry& registry,
                      std::uint64_t seed);
ModelParams build_lr(int input_dim, const TaskRegistry& registry, std::uint64_t seed);

// Largest equal-width two-hidden-layer single-task topology whose parameter
// count does not exceed mtl_params_count, required to land within a 5%
// relative deficit.
Topology build_stl_matched(int input_dim, std::int64_t mtl_params_count);

// Deterministic forward pass, no dropout. Returns one score in (0,1) per
// (row, task).
Matrix forward(const ModelParams& params, const Matrix& x);

// Training-mode forward: applies an input dropout mask drawn from rng when
// dropout_rate > 0, then evaluates as forward().
Matrix forward_train(const ModelParams& params, const Matrix& x, double dropout_rate, Rng& rng);

struct BackpropResult {
    double loss = 0.0;           // sum of per-head masked BCE + L2 penalty
    double data_loss = 0.0;      // without the L2 term
    std::vector<Layer> grads;    // aligned with params.layers
};

// Exact gradients of (sum over heads of masked BCE) + l2 * sum ||W||^2 over
// weight matrices (biases excluded). targets[t] holds one entry per batch
// row with values {0, 1, kMasked}.
BackpropResult backprop(const ModelParams& params, const Matrix& x,
                        const std::vector<std::vector<std::int8_t>>& targets, double l2);

// Single-task gradients for the fine-tuning phase: forward runs the shared
// stack plus `task`'s branch only, grads are exact for that task's layers and
// zero elsewhere, and the L2 term covers that task's weights. Matches
// backprop() bit-for-bit on the task's layers when all other heads are
// masked.
BackpropResult backprop_task(const ModelParams& params, const Matrix& x,
                             std::span<const std::int8_t> target, int task, double l2);

// Masked multi-task data loss only (no L2), dropout off.
double masked_loss(const ModelParams& params, const Matrix& x,
                   const std::vector<std::vector<std::int8_t>>& targets);

// Versioned binary container: header (magic, version, topology, task names,
// seed, config hash) then tensors as little-endian doubles in declaration
// order.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);
void describe_model(const ModelParams& params, std::ostream& out);

} // namespace mtlkit

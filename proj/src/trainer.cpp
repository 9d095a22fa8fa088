#include "mtlkit/trainer.hpp"

#include <cmath>

#include "mtlkit/errors.hpp"

namespace mtlkit {

std::string to_string(Optimizer o) {
    return o == Optimizer::adagrad ? "adagrad" : "sgd";
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "adagrad") return Optimizer::adagrad;
    if (s == "sgd") return Optimizer::sgd;
    throw ConfigError("unknown optimizer: " + s);
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (joint_iters < 1) throw ConfigError("joint_iters must be >= 1");
    if (finetune_iters < 0) throw ConfigError("finetune_iters must be >= 0");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (l2 < 0.0) throw ConfigError("l2 must be >= 0");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout_rate must be in [0,1)");
    if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
    if (shared_depth < 1) throw ConfigError("shared_depth must be >= 1");
}

AdagradState make_adagrad_state(const ModelParams& params) {
    AdagradState state;
    for (const Layer& layer : params.layers) {
        Layer z;
        z.name = layer.name;
        z.weights = Matrix(layer.weights.rows, layer.weights.cols);
        z.bias.assign(layer.bias.size(), 0.0);
        state.accum.push_back(std::move(z));
    }
    return state;
}

std::vector<int> sample_batch(int n_rows, int batch_size, Rng& rng) {
    if (n_rows < 1) throw ConfigError("sample_batch: empty train set");
    std::vector<int> idx(batch_size);
    for (int i = 0; i < batch_size; ++i)
        idx[i] = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_rows)));
    return idx;
}

namespace {

void adagrad_update_tensor(std::vector<double>& theta, const std::vector<double>& g,
                           std::vector<double>& accum, double lr, double eps,
                           const std::string& name) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        accum[i] += g[i] * g[i];
        const double step = lr * g[i] / (std::sqrt(accum[i]) + eps);
        theta[i] -= step;
        if (!std::isfinite(theta[i]))
            throw NumericError("adagrad_step: non-finite update in tensor " + name);
    }
}

void apply_adagrad(ModelParams& params, const std::vector<Layer>& grads, AdagradState& state,
                   double lr, int layer_idx) {
    adagrad_update_tensor(params.layers[layer_idx].weights.data, grads[layer_idx].weights.data,
                          state.accum[layer_idx].weights.data, lr, state.epsilon,
                          params.layers[layer_idx].name);
    adagrad_update_tensor(params.layers[layer_idx].bias, grads[layer_idx].bias,
                          state.accum[layer_idx].bias, lr, state.epsilon,
                          params.layers[layer_idx].name);
}

void apply_sgd(ModelParams& params, const std::vector<Layer>& grads, double lr, int layer_idx) {
    Layer& layer = params.layers[layer_idx];
    const Layer& g = grads[layer_idx];
    for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
        layer.weights.data[i] -= lr * g.weights.data[i];
        if (!std::isfinite(layer.weights.data[i]))
            throw NumericError("sgd_step: non-finite update in tensor " + layer.name);
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * g.bias[i];
}

} // namespace

void adagrad_step(ModelParams& params, const std::vector<Layer>& grads, AdagradState& state,
                  double learning_rate) {
    for (std::size_t i = 0; i < params.layers.size(); ++i)
        apply_adagrad(params, grads, state, learning_rate, static_cast<int>(i));
}

void adagrad_step_partial(ModelParams& params, const std::vector<Layer>& grads,
                          AdagradState& state, double learning_rate,
                          const std::vector<int>& layer_idx) {
    for (int i : layer_idx) apply_adagrad(params, grads, state, learning_rate, i);
}

void sgd_step(ModelParams& params, const std::vector<Layer>& grads, double learning_rate) {
    for (std::size_t i = 0; i < params.layers.size(); ++i)
        apply_sgd(params, grads, learning_rate, static_cast<int>(i));
}

void sgd_step_partial(ModelParams& params, const std::vector<Layer>& grads, double learning_rate,
                      const std::vector<int>& layer_idx) {
    for (int i : layer_idx) apply_sgd(params, grads, learning_rate, i);
}

namespace {

struct Batch {
    Matrix x;
    std::vector<std::vector<std::int8_t>> targets;
};

Batch gather_batch(const Dataset& data, const std::vector<int>& rows) {
    Batch b;
    b.x = Matrix(static_cast<int>(rows.size()), data.features.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < data.features.cols; ++c)
            b.x(static_cast<int>(i), c) = data.features(rows[i], c);
    b.targets.resize(data.labels.size());
    for (std::size_t t = 0; t < data.labels.size(); ++t) {
        b.targets[t].reserve(rows.size());
        for (int r : rows) b.targets[t].push_back(data.labels[t][r]);
    }
    return b;
}

double dev_loss_or_throw(const ModelParams& params, const Dataset& dev, int iteration) {
    const double loss = masked_loss(params, dev.features, dev.labels);
    if (!std::isfinite(loss))
        throw NumericError("training diverged: non-finite dev loss at iteration " +
                           std::to_string(iteration));
    return loss;
}

// Single-head masked loss on a dataset; returns false in `any_labeled` when
// every row is masked for the task.
double head_dev_loss(const ModelParams& params, const Dataset& dev, int task, bool* any_labeled) {
    Matrix scores = forward(params, dev.features);
    Matrix pred(scores.rows, 1);
    for (int r = 0; r < scores.rows; ++r) pred(r, 0) = scores(r, task);
    int unmasked = 0;
    for (std::int8_t y : dev.labels[task])
        if (y != kMasked) ++unmasked;
    if (any_labeled) *any_labeled = unmasked > 0;
    return bce_masked(pred, dev.labels[task]).loss;
}

} // namespace

TrainResult train_joint(const ModelParams& init, const Dataset& train, const Dataset& dev,
                        const TrainConfig& cfg) {
    cfg.validate();
    if (train.size() < 1) throw ConfigError("train_joint: empty train set");
    if (static_cast<int>(train.labels.size()) != init.topo.n_tasks)
        throw ConfigError("train_joint: dataset tasks do not match model heads");

    ModelParams params = init;
    AdagradState state = make_adagrad_state(params);
    Rng rng(cfg.seed);

    TrainResult result;
    const double dev0 = dev_loss_or_throw(params, dev, 0);
    const double train0 = masked_loss(params, train.features, train.labels);
    result.curve.push_back({0, train0, dev0});
    result.best = {params, 0, dev0};

    for (int iter = 1; iter <= cfg.joint_iters; ++iter) {
        Batch batch = gather_batch(train, sample_batch(train.size(), cfg.batch_size, rng));
        if (cfg.dropout_rate > 0.0) {
            Matrix mask = dropout_mask(batch.x.rows, batch.x.cols, cfg.dropout_rate, rng);
            batch.x = hadamard(batch.x, mask);
        }
        BackpropResult bp = backprop(params, batch.x, batch.targets, cfg.l2);
        if (cfg.optimizer == Optimizer::adagrad)
            adagrad_step(params, bp.grads, state, cfg.learning_rate);
        else
            sgd_step(params, bp.grads, cfg.learning_rate);

        if (iter % cfg.eval_every == 0) {
            const double dev_loss = dev_loss_or_throw(params, dev, iter);
            result.curve.push_back({iter, bp.data_loss, dev_loss});
            if (dev_loss < result.best.dev_loss) result.best = {params, iter, dev_loss};
        }
    }
    return result;
}

FinetuneResult finetune_heads(const ModelParams& joint, const Dataset& train, const Dataset& dev,
                              const TrainConfig& cfg) {
    cfg.validate();
    const int T = joint.topo.n_tasks;
    FinetuneResult result;
    result.params = joint;
    result.per_task.resize(T);
    result.curves.resize(T);

    for (int t = 0; t < T; ++t) {
        ModelParams params = joint;
        AdagradState state = make_adagrad_state(params);
        Rng rng(derive_seed(cfg.seed, 0x46545E00ULL + static_cast<std::uint64_t>(t)));

        std::vector<int> own_layers;
        for (int i = 0; i < static_cast<int>(params.layers.size()); ++i)
            if (params.layer_task(i) == t) own_layers.push_back(i);

        bool any_dev_labeled = false;
        double dev0 = head_dev_loss(params, dev, t, &any_dev_labeled);
        result.curves[t].push_back({0, 0.0, dev0});
        ModelParams best_params = params;
        TaskCheckpoint best{0, dev0, any_dev_labeled};

        for (int iter = 1; iter <= cfg.finetune_iters; ++iter) {
            Batch batch = gather_batch(train, sample_batch(train.size(), cfg.batch_size, rng));
            if (cfg.dropout_rate > 0.0) {
                Matrix mask = dropout_mask(batch.x.rows, batch.x.cols, cfg.dropout_rate, rng);
                batch.x = hadamard(batch.x, mask);
            }
            // The step sees this task's loss only; other heads are ignored.
            BackpropResult bp = backprop_task(params, batch.x, batch.targets[t], t, cfg.l2);
            if (cfg.optimizer == Optimizer::adagrad)
                adagrad_step_partial(params, bp.grads, state, cfg.learning_rate, own_layers);
            else
                sgd_step_partial(params, bp.grads, cfg.learning_rate, own_layers);

            if (iter % cfg.eval_every == 0) {
                const double dev_loss = head_dev_loss(params, dev, t, nullptr);
                if (!std::isfinite(dev_loss))
                    throw NumericError("fine-tuning diverged for task " + std::to_string(t) +
                                       " at iteration " + std::to_string(iter));
                result.curves[t].push_back({iter, bp.data_loss, dev_loss});
                if (any_dev_labeled && dev_loss < best.dev_loss) {
                    best = {iter, dev_loss, true};
                    best_params = params;
                }
            }
        }
        // With no labeled dev users the dev loss is 0 everywhere; fall back
        // to the final iterate.
        if (!any_dev_labeled) {
            best = {cfg.finetune_iters, 0.0, false};
            best_params = params;
        }
        result.per_task[t] = best;
        for (int i : own_layers) result.params.layers[i] = best_params.layers[i];
    }
    return result;
}

ModelParams train_full(const ModelParams& init, const Dataset& train, const Dataset& dev,
                       const TrainConfig& cfg, TrainResult* joint_out) {
    TrainResult joint = train_joint(init, train, dev, cfg);
    ModelParams selected = joint.best.params;
    if (joint_out) *joint_out = std::move(joint);
    if (cfg.finetune_iters == 0) return selected;
    return finetune_heads(selected, train, dev, cfg).params;
}

} // namespace mtlkit

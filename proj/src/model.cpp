#include "mtlkit/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

#include "mtlkit/errors.hpp"

namespace mtlkit {

int TaskRegistry::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

TaskRegistry default_registry() {
    TaskRegistry reg;
    reg.names = {"neurotypical", "anxiety",       "depression", "suicide_attempt",
                 "eating",       "schizophrenia", "panic",      "ptsd",
                 "bipolar",      "gender"};
    reg.roles.assign(reg.names.size(), TaskRole::condition);
    reg.roles.back() = TaskRole::demographic;
    return reg;
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::lr: return "lr";
        case ModelKind::stl: return "stl";
        case ModelKind::mtl: return "mtl";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "lr") return ModelKind::lr;
    if (s == "stl") return ModelKind::stl;
    if (s == "mtl") return ModelKind::mtl;
    throw ConfigError("unknown model kind: " + s);
}

void Topology::validate() const {
    if (input_dim < 1) throw ConfigError("topology: input_dim must be >= 1");
    if (n_tasks < 1) throw ConfigError("topology: n_tasks must be >= 1");
    switch (kind) {
        case ModelKind::lr:
            break;
        case ModelKind::stl:
            if (task_width < 1) throw ConfigError("topology: stl width must be >= 1");
            if (!shared_widths.empty()) throw ConfigError("topology: stl has no shared stack");
            break;
        case ModelKind::mtl:
            if (task_width < 1) throw ConfigError("topology: mtl task width must be >= 1");
            if (shared_widths.empty()) throw ConfigError("topology: mtl needs a shared stack");
            for (int w : shared_widths)
                if (w < 1) throw ConfigError("topology: shared widths must be >= 1");
            break;
    }
}

std::int64_t param_count(const Topology& topo) {
    std::int64_t total = 0;
    std::int64_t prev = topo.input_dim;
    switch (topo.kind) {
        case ModelKind::lr:
            total = static_cast<std::int64_t>(topo.n_tasks) * (topo.input_dim + 1);
            break;
        case ModelKind::stl:
            total = static_cast<std::int64_t>(topo.n_tasks) *
                    stl_param_count(topo.input_dim, topo.task_width);
            break;
        case ModelKind::mtl:
            for (int w : topo.shared_widths) {
                total += prev * w + w;
                prev = w;
            }
            total += static_cast<std::int64_t>(topo.n_tasks) *
                     (prev * topo.task_width + topo.task_width + topo.task_width + 1);
            break;
    }
    return total;
}

std::int64_t mtl_param_count(int input_dim, int width, int shared_depth, int n_tasks) {
    Topology topo;
    topo.kind = ModelKind::mtl;
    topo.input_dim = input_dim;
    topo.shared_widths.assign(shared_depth, width);
    topo.task_width = width;
    topo.n_tasks = n_tasks;
    return param_count(topo);
}

std::int64_t stl_param_count(int input_dim, int w) {
    // hidden0: input*w + w, hidden1: w*w + w, head: w + 1
    return static_cast<std::int64_t>(w) * (input_dim + w + 3) + 1;
}

int ModelParams::shared_layer_count() const {
    return static_cast<int>(topo.shared_widths.size());
}

int ModelParams::layers_per_task() const {
    switch (topo.kind) {
        case ModelKind::lr: return 1;
        case ModelKind::stl: return 3;
        case ModelKind::mtl: return 2;
    }
    return 0;
}

int ModelParams::task_layer_begin(int t) const {
    return shared_layer_count() + t * layers_per_task();
}

int ModelParams::layer_task(int layer_idx) const {
    if (layer_is_shared(layer_idx)) return -1;
    return (layer_idx - shared_layer_count()) / layers_per_task();
}

bool operator==(const ModelParams& a, const ModelParams& b) {
    if (a.topo.kind != b.topo.kind || a.topo.input_dim != b.topo.input_dim ||
        a.topo.shared_widths != b.topo.shared_widths || a.topo.task_width != b.topo.task_width ||
        a.topo.n_tasks != b.topo.n_tasks || a.tasks.names != b.tasks.names)
        return false;
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        if (!(a.layers[i].weights == b.layers[i].weights) || a.layers[i].bias != b.layers[i].bias)
            return false;
    return true;
}

namespace {

std::vector<Layer> make_layers(const Topology& topo) {
    std::vector<Layer> layers;
    auto add = [&](const std::string& name, int in, int out) {
        layers.push_back({name, Matrix(in, out), std::vector<double>(out, 0.0)});
    };
    int trunk_top = topo.input_dim;
    if (topo.kind == ModelKind::mtl) {
        int prev = topo.input_dim;
        for (std::size_t i = 0; i < topo.shared_widths.size(); ++i) {
            add("shared" + std::to_string(i), prev, topo.shared_widths[i]);
            prev = topo.shared_widths[i];
        }
        trunk_top = prev;
    }
    for (int t = 0; t < topo.n_tasks; ++t) {
        const std::string p = "task" + std::to_string(t) + "_";
        switch (topo.kind) {
            case ModelKind::lr:
                add(p + "head", topo.input_dim, 1);
                break;
            case ModelKind::stl:
                add(p + "hidden0", topo.input_dim, topo.task_width);
                add(p + "hidden1", topo.task_width, topo.task_width);
                add(p + "head", topo.task_width, 1);
                break;
            case ModelKind::mtl:
                add(p + "hidden", trunk_top, topo.task_width);
                add(p + "head", topo.task_width, 1);
                break;
        }
    }
    return layers;
}

} // namespace

ModelParams build_model(const Topology& topo, const TaskRegistry& registry, std::uint64_t seed) {
    topo.validate();
    if (registry.size() != topo.n_tasks)
        throw ConfigError("build_model: registry size does not match topology task count");
    ModelParams params;
    params.topo = topo;
    params.tasks = registry;
    params.seed = seed;
    params.layers = make_layers(topo);
    Rng rng(seed);
    for (Layer& layer : params.layers) {
        const double fan_in = layer.weights.rows;
        const double fan_out = layer.weights.cols;
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : layer.weights.data) v = (2.0 * uniform_double(rng) - 1.0) * limit;
    }
    return params;
}

ModelParams build_mtl(int input_dim, int width, int shared_depth, const TaskRegistry& registry,
                      std::uint64_t seed) {
    Topology topo;
    topo.kind = ModelKind::mtl;
    topo.input_dim = input_dim;
    topo.shared_widths.assign(shared_depth, width);
    topo.task_width = width;
    topo.n_tasks = registry.size();
    return build_model(topo, registry, seed);
}

ModelParams build_lr(int input_dim, const TaskRegistry& registry, std::uint64_t seed) {
    Topology topo;
    topo.kind = ModelKind::lr;
    topo.input_dim = input_dim;
    topo.task_width = 0;
    topo.n_tasks = registry.size();
    return build_model(topo, registry, seed);
}

Topology build_stl_matched(int input_dim, std::int64_t mtl_params_count) {
    if (stl_param_count(input_dim, 1) > mtl_params_count)
        throw ConfigError("build_stl_matched: no feasible width for parameter budget " +
                          std::to_string(mtl_params_count));
    // stl_param_count is strictly increasing in w; take the largest feasible w.
    std::int64_t lo = 1, hi = 1;
    while (stl_param_count(input_dim, static_cast<int>(hi * 2)) <= mtl_params_count) hi *= 2;
    hi *= 2;
    while (lo < hi) {
        const std::int64_t mid = (lo + hi + 1) / 2;
        if (stl_param_count(input_dim, static_cast<int>(mid)) <= mtl_params_count)
            lo = mid;
        else
            hi = mid - 1;
    }
    const std::int64_t achieved = stl_param_count(input_dim, static_cast<int>(lo));
    const double deficit = static_cast<double>(mtl_params_count - achieved) /
                           static_cast<double>(mtl_params_count);
    if (deficit > 0.05)
        throw ConfigError("build_stl_matched: best width " + std::to_string(lo) +
                          " misses the budget by more than 5%");
    Topology topo;
    topo.kind = ModelKind::stl;
    topo.input_dim = input_dim;
    topo.task_width = static_cast<int>(lo);
    topo.n_tasks = 1;
    return topo;
}

namespace {

// Forward pass keeping everything backprop needs.
struct ForwardCache {
    Matrix trunk;                       // mtl: top of shared stack; else unused
    std::vector<Matrix> shared_pre;     // pre-activations per shared layer
    std::vector<Matrix> shared_post;    // post-ReLU per shared layer
    std::vector<std::vector<Matrix>> task_pre;  // per task, per hidden layer
    std::vector<std::vector<Matrix>> task_post;
    Matrix scores;                      // rows x n_tasks
};

ForwardCache forward_cached(const ModelParams& params, const Matrix& x) {
    if (x.cols != params.topo.input_dim)
        throw NumericError("forward: input width " + std::to_string(x.cols) +
                           " does not match model input_dim " +
                           std::to_string(params.topo.input_dim));
    ForwardCache cache;
    const int n_shared = params.shared_layer_count();
    const Matrix* trunk_in = &x;
    for (int i = 0; i < n_shared; ++i) {
        const Layer& layer = params.layers[i];
        cache.shared_pre.push_back(affine_forward(*trunk_in, layer.weights, layer.bias));
        cache.shared_post.push_back(relu(cache.shared_pre.back()));
        trunk_in = &cache.shared_post.back();
    }
    if (n_shared > 0) cache.trunk = cache.shared_post.back();

    const int T = params.topo.n_tasks;
    cache.task_pre.resize(T);
    cache.task_post.resize(T);
    cache.scores = Matrix(x.rows, T);
    for (int t = 0; t < T; ++t) {
        int li = params.task_layer_begin(t);
        const Matrix* in = (params.topo.kind == ModelKind::mtl) ? &cache.trunk : &x;
        const int n_hidden = params.layers_per_task() - 1;
        for (int h = 0; h < n_hidden; ++h) {
            const Layer& layer = params.layers[li + h];
            cache.task_pre[t].push_back(affine_forward(*in, layer.weights, layer.bias));
            cache.task_post[t].push_back(relu(cache.task_pre[t].back()));
            in = &cache.task_post[t].back();
        }
        const Layer& head = params.layers[li + n_hidden];
        Matrix logits = affine_forward(*in, head.weights, head.bias);
        Matrix p = sigmoid(logits);
        for (int r = 0; r < x.rows; ++r) cache.scores(r, t) = p(r, 0);
    }
    return cache;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) s[c] += m(r, c);
    return s;
}

Matrix relu_backward(const Matrix& d_post, const Matrix& pre) {
    Matrix d_pre(d_post.rows, d_post.cols);
    for (std::size_t i = 0; i < d_pre.data.size(); ++i)
        d_pre.data[i] = (pre.data[i] > 0.0) ? d_post.data[i] : 0.0;
    return d_pre;
}

} // namespace

Matrix forward(const ModelParams& params, const Matrix& x) {
    return forward_cached(params, x).scores;
}

Matrix forward_train(const ModelParams& params, const Matrix& x, double dropout_rate, Rng& rng) {
    if (dropout_rate == 0.0) return forward(params, x);
    Matrix mask = dropout_mask(x.rows, x.cols, dropout_rate, rng);
    return forward(params, hadamard(x, mask));
}

BackpropResult backprop(const ModelParams& params, const Matrix& x,
                        const std::vector<std::vector<std::int8_t>>& targets, double l2) {
    const int T = params.topo.n_tasks;
    if (static_cast<int>(targets.size()) != T)
        throw NumericError("backprop: targets do not match task count");

    ForwardCache cache = forward_cached(params, x);

    BackpropResult res;
    res.grads = make_layers(params.topo);

    const int n_shared = params.shared_layer_count();
    const bool is_mtl = params.topo.kind == ModelKind::mtl;
    Matrix d_trunk;
    if (is_mtl) d_trunk = Matrix(x.rows, cache.trunk.cols);

    for (int t = 0; t < T; ++t) {
        if (targets[t].size() != static_cast<std::size_t>(x.rows))
            throw NumericError("backprop: target length mismatch for task " + std::to_string(t));
        // Loss value goes through the clamped BCE; the gradient uses the
        // standard (p - y) / M form, identical wherever the clamp is inactive.
        Matrix pred(x.rows, 1);
        for (int r = 0; r < x.rows; ++r) pred(r, 0) = cache.scores(r, t);
        BceResult bce = bce_masked(pred, targets[t]);
        res.data_loss += bce.loss;

        int unmasked = 0;
        for (std::int8_t y : targets[t])
            if (y != kMasked) ++unmasked;
        Matrix d_logit(x.rows, 1);
        if (unmasked > 0) {
            const double inv_m = 1.0 / static_cast<double>(unmasked);
            for (int r = 0; r < x.rows; ++r) {
                if (targets[t][r] == kMasked) continue;
                d_logit(r, 0) = (pred(r, 0) - static_cast<double>(targets[t][r])) * inv_m;
            }
        }

        const int li = params.task_layer_begin(t);
        const int n_hidden = params.layers_per_task() - 1;
        const Matrix& head_in = (n_hidden > 0) ? cache.task_post[t].back()
                                               : (is_mtl ? cache.trunk : x);
        const Layer& head = params.layers[li + n_hidden];
        res.grads[li + n_hidden].weights = matmul_at_b(head_in, d_logit);
        res.grads[li + n_hidden].bias = column_sums(d_logit);
        Matrix d_act = matmul_a_bt(d_logit, head.weights);

        for (int h = n_hidden - 1; h >= 0; --h) {
            Matrix d_pre = relu_backward(d_act, cache.task_pre[t][h]);
            const Matrix& in = (h > 0) ? cache.task_post[t][h - 1]
                                       : (is_mtl ? cache.trunk : x);
            res.grads[li + h].weights = matmul_at_b(in, d_pre);
            res.grads[li + h].bias = column_sums(d_pre);
            if (h > 0 || is_mtl) d_act = matmul_a_bt(d_pre, params.layers[li + h].weights);
        }
        if (is_mtl) add_scaled(d_trunk, d_act, 1.0);
    }

    // Back through the shared stack; the input gradient itself is not needed.
    if (is_mtl) {
        Matrix d_act = std::move(d_trunk);
        for (int i = n_shared - 1; i >= 0; --i) {
            Matrix d_pre = relu_backward(d_act, cache.shared_pre[i]);
            const Matrix& in = (i > 0) ? cache.shared_post[i - 1] : x;
            res.grads[i].weights = matmul_at_b(in, d_pre);
            res.grads[i].bias = column_sums(d_pre);
            if (i > 0) d_act = matmul_a_bt(d_pre, params.layers[i].weights);
        }
    }

    res.loss = res.data_loss;
    if (l2 > 0.0) {
        for (std::size_t i = 0; i < params.layers.size(); ++i) {
            res.loss += l2 * params.layers[i].weights.squared_norm();
            add_scaled(res.grads[i].weights, params.layers[i].weights, 2.0 * l2);
        }
    }

    for (const Layer& g : res.grads) {
        if (!g.weights.all_finite())
            throw NumericError("backprop: non-finite gradient in tensor " + g.name);
        for (double v : g.bias)
            if (!std::isfinite(v))
                throw NumericError("backprop: non-finite gradient in tensor " + g.name);
    }
    return res;
}

BackpropResult backprop_task(const ModelParams& params, const Matrix& x,
                             std::span<const std::int8_t> target, int task, double l2) {
    if (task < 0 || task >= params.topo.n_tasks)
        throw NumericError("backprop_task: task index out of range");
    if (target.size() != static_cast<std::size_t>(x.rows))
        throw NumericError("backprop_task: target length mismatch");
    if (x.cols != params.topo.input_dim)
        throw NumericError("backprop_task: input width does not match model input_dim");

    const bool is_mtl = params.topo.kind == ModelKind::mtl;
    const int n_shared = params.shared_layer_count();

    // Shared stack forward (frozen during fine-tuning, so no backward needed).
    std::vector<Matrix> shared_post;
    const Matrix* trunk_in = &x;
    for (int i = 0; i < n_shared; ++i) {
        const Layer& layer = params.layers[i];
        shared_post.push_back(relu(affine_forward(*trunk_in, layer.weights, layer.bias)));
        trunk_in = &shared_post.back();
    }
    const Matrix& branch_in = is_mtl ? *trunk_in : x;

    const int li = params.task_layer_begin(task);
    const int n_hidden = params.layers_per_task() - 1;
    std::vector<Matrix> pre, post;
    const Matrix* in = &branch_in;
    for (int h = 0; h < n_hidden; ++h) {
        const Layer& layer = params.layers[li + h];
        pre.push_back(affine_forward(*in, layer.weights, layer.bias));
        post.push_back(relu(pre.back()));
        in = &post.back();
    }
    const Layer& head = params.layers[li + n_hidden];
    Matrix pred = sigmoid(affine_forward(*in, head.weights, head.bias));

    BackpropResult res;
    res.grads = make_layers(params.topo);
    BceResult bce = bce_masked(pred, target);
    res.data_loss = bce.loss;

    int unmasked = 0;
    for (std::int8_t y : target)
        if (y != kMasked) ++unmasked;
    Matrix d_logit(x.rows, 1);
    if (unmasked > 0) {
        const double inv_m = 1.0 / static_cast<double>(unmasked);
        for (int r = 0; r < x.rows; ++r) {
            if (target[r] == kMasked) continue;
            d_logit(r, 0) = (pred(r, 0) - static_cast<double>(target[r])) * inv_m;
        }
    }

    const Matrix& head_in = (n_hidden > 0) ? post.back() : branch_in;
    res.grads[li + n_hidden].weights = matmul_at_b(head_in, d_logit);
    res.grads[li + n_hidden].bias = column_sums(d_logit);
    Matrix d_act = matmul_a_bt(d_logit, head.weights);
    for (int h = n_hidden - 1; h >= 0; --h) {
        Matrix d_pre = relu_backward(d_act, pre[h]);
        const Matrix& in_h = (h > 0) ? post[h - 1] : branch_in;
        res.grads[li + h].weights = matmul_at_b(in_h, d_pre);
        res.grads[li + h].bias = column_sums(d_pre);
        if (h > 0) d_act = matmul_a_bt(d_pre, params.layers[li + h].weights);
    }

    res.loss = res.data_loss;
    if (l2 > 0.0) {
        for (int i = li; i <= li + n_hidden; ++i) {
            res.loss += l2 * params.layers[i].weights.squared_norm();
            add_scaled(res.grads[i].weights, params.layers[i].weights, 2.0 * l2);
        }
    }
    for (int i = li; i <= li + n_hidden; ++i) {
        const Layer& g = res.grads[i];
        if (!g.weights.all_finite())
            throw NumericError("backprop: non-finite gradient in tensor " + g.name);
        for (double v : g.bias)
            if (!std::isfinite(v))
                throw NumericError("backprop: non-finite gradient in tensor " + g.name);
    }
    return res;
}

double masked_loss(const ModelParams& params, const Matrix& x,
                   const std::vector<std::vector<std::int8_t>>& targets) {
    Matrix scores = forward(params, x);
    double loss = 0.0;
    for (int t = 0; t < params.topo.n_tasks; ++t) {
        Matrix pred(x.rows, 1);
        for (int r = 0; r < x.rows; ++r) pred(r, 0) = scores(r, t);
        loss += bce_masked(pred, targets[t]).loss;
    }
    return loss;
}

// ---- serialization ----------------------------------------------------------

namespace {

constexpr char kModelMagic[8] = {'M', 'T', 'L', 'K', 'I', 'T', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataFormatError("model file: truncated");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const auto n = read_pod<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw DataFormatError("model file: truncated string");
    return s;
}

} // namespace

void save_model(const ModelParams& params, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataFormatError("cannot open for writing: " + tmp);
        out.write(kModelMagic, sizeof(kModelMagic));
        write_pod(out, kModelVersion);
        write_pod(out, static_cast<std::uint8_t>(params.topo.kind));
        write_pod(out, static_cast<std::int32_t>(params.topo.input_dim));
        write_pod(out, static_cast<std::uint32_t>(params.topo.shared_widths.size()));
        for (int w : params.topo.shared_widths) write_pod(out, static_cast<std::int32_t>(w));
        write_pod(out, static_cast<std::int32_t>(params.topo.task_width));
        write_pod(out, static_cast<std::int32_t>(params.topo.n_tasks));
        for (int t = 0; t < params.topo.n_tasks; ++t) {
            write_string(out, params.tasks.names[t]);
            write_pod(out, static_cast<std::uint8_t>(params.tasks.roles[t]));
        }
        write_pod(out, params.seed);
        write_pod(out, params.config_hash);
        for (const Layer& layer : params.layers) {
            out.write(reinterpret_cast<const char*>(layer.weights.data.data()),
                      static_cast<std::streamsize>(layer.weights.data.size() * sizeof(double)));
            out.write(reinterpret_cast<const char*>(layer.bias.data()),
                      static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
        }
        if (!out) throw DataFormatError("model file: write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataFormatError("cannot rename " + tmp + " to " + path);
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open model file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw DataFormatError("not a model file (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kModelVersion)
        throw DataFormatError("model file " + path + ": unsupported version " +
                              std::to_string(version));
    ModelParams params;
    params.topo.kind = static_cast<ModelKind>(read_pod<std::uint8_t>(in));
    params.topo.input_dim = read_pod<std::int32_t>(in);
    const auto n_shared = read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_shared; ++i)
        params.topo.shared_widths.push_back(read_pod<std::int32_t>(in));
    params.topo.task_width = read_pod<std::int32_t>(in);
    params.topo.n_tasks = read_pod<std::int32_t>(in);
    for (int t = 0; t < params.topo.n_tasks; ++t) {
        params.tasks.names.push_back(read_string(in));
        params.tasks.roles.push_back(static_cast<TaskRole>(read_pod<std::uint8_t>(in)));
    }
    params.seed = read_pod<std::uint64_t>(in);
    params.config_hash = read_pod<std::uint64_t>(in);
    params.topo.validate();
    params.layers = make_layers(params.topo);
    for (Layer& layer : params.layers) {
        in.read(reinterpret_cast<char*>(layer.weights.data.data()),
                static_cast<std::streamsize>(layer.weights.data.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(layer.bias.data()),
                static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
        if (!in) throw DataFormatError("model file: truncated tensors: " + path);
    }
    return params;
}

void describe_model(const ModelParams& params, std::ostream& out) {
    out << "kind: " << to_string(params.topo.kind) << "\n"
        << "input_dim: " << params.topo.input_dim << "\n";
    out << "shared_widths:";
    for (int w : params.topo.shared_widths) out << " " << w;
    out << "\n"
        << "task_width: " << params.topo.task_width << "\n"
        << "tasks:";
    for (const std::string& n : params.tasks.names) out << " " << n;
    out << "\n"
        << "param_count: " << param_count(params.topo) << "\n"
        << "seed: " << params.seed << "\n"
        << "config_hash: " << params.config_hash << "\n";
}

} // namespace mtlkit

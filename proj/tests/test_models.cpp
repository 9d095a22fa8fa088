#include <cmath>
#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "mtlkit/model.hpp"
#include "mtlkit/ops.hpp"

using namespace mtlkit;

namespace {

TaskRegistry tiny_registry(int n) {
    TaskRegistry reg;
    for (int t = 0; t < n; ++t) {
        reg.names.push_back("task" + std::to_string(t));
        reg.roles.push_back(TaskRole::condition);
    }
    return reg;
}

std::int64_t counted_scalars(const ModelParams& p) {
    std::int64_t n = 0;
    for (const Layer& l : p.layers) n += static_cast<std::int64_t>(l.weights.size()) +
                                         static_cast<std::int64_t>(l.bias.size());
    return n;
}

std::vector<std::vector<std::int8_t>> random_targets(int rows, int tasks, Rng& rng,
                                                     double mask_frac = 0.3) {
    std::vector<std::vector<std::int8_t>> t(tasks, std::vector<std::int8_t>(rows));
    for (int k = 0; k < tasks; ++k)
        for (int r = 0; r < rows; ++r) {
            const double u = uniform_double(rng);
            t[k][r] = u < mask_frac ? kMasked : static_cast<std::int8_t>(u < (1.0 + mask_frac) / 2.0);
        }
    return t;
}

double loss_at(const ModelParams& params, const Matrix& x,
               const std::vector<std::vector<std::int8_t>>& targets, double l2) {
    double loss = masked_loss(params, x, targets);
    for (const Layer& l : params.layers) loss += l2 * l.weights.squared_norm();
    return loss;
}

// Central finite differences against the analytic gradient, every scalar.
void check_gradients(ModelParams params, int batch, double l2, std::uint64_t seed) {
    Rng rng(seed);
    // Shrink weights so the BCE clamp stays inactive and the loss is smooth.
    for (Layer& l : params.layers) {
        for (double& w : l.weights.data) w *= 0.3;
        for (double& b : l.bias) b = 0.1 * (uniform_double(rng) - 0.5);
    }
    Matrix x(batch, params.topo.input_dim);
    for (double& v : x.data) v = uniform_double(rng) - 0.5;
    const auto targets = random_targets(batch, params.topo.n_tasks, rng);

    const BackpropResult bp = backprop(params, x, targets, l2);
    const double h = 1e-5;
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        Layer& layer = params.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            const double orig = layer.weights.data[i];
            layer.weights.data[i] = orig + h;
            const double up = loss_at(params, x, targets, l2);
            layer.weights.data[i] = orig - h;
            const double dn = loss_at(params, x, targets, l2);
            layer.weights.data[i] = orig;
            const double fd = (up - dn) / (2.0 * h);
            const double an = bp.grads[li].weights.data[i];
            CHECK(std::abs(an - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            const double orig = layer.bias[i];
            layer.bias[i] = orig + h;
            const double up = loss_at(params, x, targets, l2);
            layer.bias[i] = orig - h;
            const double dn = loss_at(params, x, targets, l2);
            layer.bias[i] = orig;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::abs(bp.grads[li].bias[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

} // namespace

TEST_CASE("mtl parameter count matches the closed form at reference size") {
    // input 25000, width 256, depth 1, 10 tasks:
    // 25000*256+256 shared, 10*(256*256+256) task hidden, 10*(256+1) heads.
    const std::int64_t expect = 25000LL * 256 + 256 + 10 * (256LL * 256 + 256) + 10 * (256 + 1);
    CHECK(mtl_param_count(25000, 256, 1, 10) == expect);
    CHECK(expect == 7060746);
}

TEST_CASE("stl parameter count matches the closed form") {
    // Head-to-toe: input*w + w, w*w + w, w + 1 = w*(input + w + 3) + 1.
    for (int w : {16, 100, 256})
        CHECK(stl_param_count(25000, w) == static_cast<std::int64_t>(w) * (25000 + w + 3) + 1);
}

TEST_CASE("param_count equals the number of allocated scalars for every kind") {
    const TaskRegistry reg = tiny_registry(4);
    Topology st = build_stl_matched(300, mtl_param_count(300, 32, 1, 4));
    st.n_tasks = 4;
    for (const ModelParams& p :
         {build_lr(30, reg, 1), build_mtl(30, 8, 2, reg, 1), build_model(st, reg, 1)}) {
        CHECK(param_count(p.topo) == counted_scalars(p));
    }
}

TEST_CASE("stl width matching lands within a 5% parameter deficit across the width grid") {
    for (int width : {16, 32, 64, 128, 256, 512, 1024, 2048}) {
        const std::int64_t budget = mtl_param_count(25000, width, 1, 10);
        const Topology topo = build_stl_matched(25000, budget);
        const std::int64_t got = stl_param_count(25000, topo.task_width);
        CHECK(got <= budget);
        CHECK(static_cast<double>(budget - got) / static_cast<double>(budget) <= 0.05);
        // Largest admissible width: one more would blow the budget.
        CHECK(stl_param_count(25000, topo.task_width + 1) > budget);
    }
}

TEST_CASE("build_model is deterministic in the seed and seed-sensitive") {
    const TaskRegistry reg = tiny_registry(3);
    const ModelParams a = build_mtl(20, 6, 1, reg, 42);
    const ModelParams b = build_mtl(20, 6, 1, reg, 42);
    const ModelParams c = build_mtl(20, 6, 1, reg, 43);
    CHECK(a == b);
    CHECK(!(a == c));
}

TEST_CASE("initial weights stay inside the fan-based uniform bound, biases zero") {
    const TaskRegistry reg = tiny_registry(2);
    const ModelParams p = build_mtl(40, 10, 1, reg, 7);
    for (const Layer& l : p.layers) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(l.weights.rows + l.weights.cols));
        for (double w : l.weights.data) CHECK(std::abs(w) <= bound);
        for (double b : l.bias) CHECK(b == 0.0);
    }
}

TEST_CASE("layer layout names and ownership are consistent") {
    const TaskRegistry reg = tiny_registry(2);
    const ModelParams mtl = build_mtl(10, 4, 2, reg, 1);
    REQUIRE(mtl.layers.size() == 2 + 2 * 2);
    CHECK(mtl.layers[0].name == "shared0");
    CHECK(mtl.layers[1].name == "shared1");
    CHECK(mtl.layers[2].name == "task0_hidden");
    CHECK(mtl.layers[3].name == "task0_head");
    CHECK(mtl.layer_task(1) == -1);
    CHECK(mtl.layer_task(4) == 1);
    CHECK(mtl.task_layer_begin(1) == 4);

    const ModelParams lr = build_lr(10, reg, 1);
    REQUIRE(lr.layers.size() == 2);
    CHECK(lr.layers[0].name == "task0_head");
    CHECK(lr.shared_layer_count() == 0);

    Topology st;
    st.kind = ModelKind::stl;
    st.input_dim = 10;
    st.task_width = 3;
    st.n_tasks = 2;
    const ModelParams stl = build_model(st, reg, 1);
    REQUIRE(stl.layers.size() == 6);
    CHECK(stl.layers[0].name == "task0_hidden0");
    CHECK(stl.layers[1].name == "task0_hidden1");
    CHECK(stl.layers[2].name == "task0_head");
}

TEST_CASE("forward emits one score in (0,1) per row and task") {
    const TaskRegistry reg = tiny_registry(3);
    const ModelParams p = build_mtl(12, 5, 1, reg, 9);
    Rng rng(10);
    Matrix x(7, 12);
    for (double& v : x.data) v = uniform_double(rng);
    const Matrix scores = forward(p, x);
    REQUIRE(scores.rows == 7);
    REQUIRE(scores.cols == 3);
    for (double s : scores.data) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("backprop gradients match finite differences for all three kinds") {
    const TaskRegistry reg = tiny_registry(3);
    check_gradients(build_lr(6, reg, 21), 5, 0.01, 100);
    check_gradients(build_mtl(6, 4, 2, reg, 22), 5, 0.01, 101);
    Topology st;
    st.kind = ModelKind::stl;
    st.input_dim = 6;
    st.task_width = 4;
    st.n_tasks = 3;
    check_gradients(build_model(st, reg, 23), 5, 0.01, 102);
}

TEST_CASE("l2 penalty covers weights only, never biases") {
    const TaskRegistry reg = tiny_registry(2);
    ModelParams p = build_mtl(5, 3, 1, reg, 3);
    for (Layer& l : p.layers)
        for (double& b : l.bias) b = 0.7;
    Rng rng(4);
    Matrix x(3, 5);
    for (double& v : x.data) v = uniform_double(rng);
    const auto targets = random_targets(3, 2, rng, 0.0);
    const BackpropResult with = backprop(p, x, targets, 0.5);
    const BackpropResult without = backprop(p, x, targets, 0.0);
    double wnorm = 0.0;
    for (const Layer& l : p.layers) wnorm += l.weights.squared_norm();
    CHECK(with.loss - without.loss == doctest::Approx(0.5 * wnorm).epsilon(1e-10));
    CHECK(with.data_loss == doctest::Approx(without.loss).epsilon(1e-12));
    // Bias gradients unchanged by the penalty.
    for (std::size_t li = 0; li < p.layers.size(); ++li)
        for (std::size_t i = 0; i < p.layers[li].bias.size(); ++i)
            CHECK(with.grads[li].bias[i] == without.grads[li].bias[i]);
}

TEST_CASE("masked rows contribute bitwise-zero gradients") {
    const TaskRegistry reg = tiny_registry(2);
    const ModelParams p = build_mtl(5, 3, 1, reg, 5);
    Rng rng(6);
    Matrix x(4, 5);
    for (double& v : x.data) v = uniform_double(rng);

    // All rows masked for task 1: its head layers must have gradient == +0.0.
    std::vector<std::vector<std::int8_t>> targets = {{1, 0, 1, 0},
                                                     {kMasked, kMasked, kMasked, kMasked}};
    const BackpropResult bp = backprop(p, x, targets, 0.0);
    const int begin = p.task_layer_begin(1);
    for (int li = begin; li < begin + p.layers_per_task(); ++li) {
        for (double g : bp.grads[li].weights.data) CHECK(g == 0.0);
        for (double g : bp.grads[li].bias) CHECK(g == 0.0);
    }

    // Appending masked rows leaves every gradient bit-identical.
    std::vector<std::vector<std::int8_t>> base_t = {{1, 0, 1, 0}, {0, 1, kMasked, 1}};
    const BackpropResult ref = backprop(p, x, base_t, 0.0);
    Matrix x2(6, 5);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) x2(r, c) = x(r, c);
    for (int c = 0; c < 5; ++c) {
        x2(4, c) = 0.33;
        x2(5, c) = 0.77;
    }
    std::vector<std::vector<std::int8_t>> padded = {{1, 0, 1, 0, kMasked, kMasked},
                                                    {0, 1, kMasked, 1, kMasked, kMasked}};
    const BackpropResult pad = backprop(p, x2, padded, 0.0);
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        CHECK(pad.grads[li].weights == ref.grads[li].weights);
        CHECK(pad.grads[li].bias == ref.grads[li].bias);
    }
    CHECK(pad.loss == ref.loss);
}

TEST_CASE("backprop_task matches full backprop with the other heads masked, bit for bit") {
    const TaskRegistry reg = tiny_registry(3);
    Rng rng(40);
    std::vector<ModelParams> models;
    models.push_back(build_lr(6, reg, 41));
    models.push_back(build_mtl(6, 4, 2, reg, 42));
    Topology st;
    st.kind = ModelKind::stl;
    st.input_dim = 6;
    st.task_width = 4;
    st.n_tasks = 3;
    models.push_back(build_model(st, reg, 43));

    for (const ModelParams& p : models) {
        Matrix x(5, 6);
        for (double& v : x.data) v = uniform_double(rng);
        const auto targets = random_targets(5, 3, rng, 0.2);
        for (int t = 0; t < 3; ++t) {
            auto masked = targets;
            for (int u = 0; u < 3; ++u)
                if (u != t) masked[u].assign(masked[u].size(), kMasked);
            const BackpropResult full = backprop(p, x, masked, 0.01);
            const BackpropResult single = backprop_task(p, x, targets[t], t, 0.01);
            CHECK(single.data_loss == full.data_loss);
            // Its L2 term covers this task's weights only.
            const int begin = p.task_layer_begin(t);
            double own_loss = single.data_loss;
            for (int li = begin; li < begin + p.layers_per_task(); ++li)
                own_loss += 0.01 * p.layers[li].weights.squared_norm();
            CHECK(single.loss == own_loss);
            for (std::size_t li = 0; li < p.layers.size(); ++li) {
                const bool own = static_cast<int>(li) >= begin &&
                                 static_cast<int>(li) < begin + p.layers_per_task();
                if (own) {
                    CHECK(single.grads[li].weights == full.grads[li].weights);
                    CHECK(single.grads[li].bias == full.grads[li].bias);
                } else {
                    for (double g : single.grads[li].weights.data) CHECK(g == 0.0);
                    for (double g : single.grads[li].bias) CHECK(g == 0.0);
                }
            }
        }
    }
}

TEST_CASE("model files round-trip bit-exactly") {
    const TaskRegistry reg = tiny_registry(3);
    ModelParams p = build_mtl(8, 4, 1, reg, 77);
    p.config_hash = 0xdeadbeefULL;
    const std::string path = (std::filesystem::temp_directory_path() / "mtlkit_rt.bin").string();
    save_model(p, path);
    const ModelParams q = load_model(path);
    CHECK(p == q);
    CHECK(q.seed == 77);
    CHECK(q.config_hash == 0xdeadbeefULL);
    CHECK(q.tasks.names == p.tasks.names);
    std::filesystem::remove(path);
}

TEST_CASE("corrupted model files are rejected") {
    const TaskRegistry reg = tiny_registry(1);
    const ModelParams p = build_lr(4, reg, 1);
    const std::string path = (std::filesystem::temp_directory_path() / "mtlkit_bad.bin").string();
    save_model(p, path);
    {
        std::FILE* f = std::fopen(path.c_str(), "r+b");
        REQUIRE(f);
        std::fputc('X', f); // clobber the magic
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_model(path), DataFormatError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), DataFormatError);
}

TEST_CASE("topology validation rejects inconsistent shapes") {
    Topology t;
    t.kind = ModelKind::mtl;
    t.input_dim = 0;
    t.task_width = 4;
    t.shared_widths = {4};
    t.n_tasks = 2;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.input_dim = 10;
    t.n_tasks = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.n_tasks = 2;
    t.shared_widths = {};
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("default registry has the canonical ten tasks with gender demographic") {
    const TaskRegistry reg = default_registry();
    REQUIRE(reg.size() == 10);
    CHECK(reg.names.front() == "neurotypical");
    CHECK(reg.names.back() == "gender");
    CHECK(reg.roles.back() == TaskRole::demographic);
    for (int t = 0; t + 1 < reg.size(); ++t) CHECK(reg.roles[t] == TaskRole::condition);
    CHECK(reg.index_of("depression") >= 0);
    CHECK(reg.index_of("nonexistent") == -1);
}

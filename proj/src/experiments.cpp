#include "mtlkit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "mtlkit/errors.hpp"

namespace mtlkit {

SweepDim sweep_dim_from_string(const std::string& s) {
    if (s == "lr" || s == "learning_rate") return SweepDim::learning_rate;
    if (s == "l2") return SweepDim::l2;
    if (s == "width") return SweepDim::width;
    throw ConfigError("unknown sweep dimension: " + s);
}

std::string to_string(SweepDim d) {
    switch (d) {
        case SweepDim::learning_rate: return "learning_rate";
        case SweepDim::l2: return "l2";
        case SweepDim::width: return "width";
    }
    return "?";
}

AuxSubset aux_subset_from_string(const std::string& s) {
    if (s == "all") return AuxSubset::all;
    if (s == "all_conds") return AuxSubset::all_conds;
    if (s == "neuro") return AuxSubset::neuro;
    if (s == "neuro_mood") return AuxSubset::neuro_mood;
    if (s == "neuro_anx") return AuxSubset::neuro_anx;
    if (s == "neuro_targets") return AuxSubset::neuro_targets;
    if (s == "none") return AuxSubset::none;
    throw ConfigError("unknown auxiliary subset: " + s);
}

std::string to_string(AuxSubset s) {
    switch (s) {
        case AuxSubset::all: return "all";
        case AuxSubset::all_conds: return "all_conds";
        case AuxSubset::neuro: return "neuro";
        case AuxSubset::neuro_mood: return "neuro_mood";
        case AuxSubset::neuro_anx: return "neuro_anx";
        case AuxSubset::neuro_targets: return "neuro_targets";
        case AuxSubset::none: return "none";
    }
    return "?";
}

std::vector<int> ablation_heads(const std::string& main_task, AuxSubset subset,
                                const TaskRegistry& registry) {
    const int main = registry.index_of(main_task);
    if (main < 0) throw ConfigError("ablation: unknown main task " + main_task);

    std::set<std::string> aux;
    switch (subset) {
        case AuxSubset::all:
            for (const std::string& n : registry.names) aux.insert(n);
            break;
        case AuxSubset::all_conds:
            for (int t = 0; t < registry.size(); ++t)
                if (registry.roles[t] == TaskRole::condition) aux.insert(registry.names[t]);
            break;
        case AuxSubset::neuro:
            aux = {"neurotypical"};
            break;
        case AuxSubset::neuro_mood:
            aux = {"neurotypical", "depression", "bipolar"};
            break;
        case AuxSubset::neuro_anx:
            aux = {"neurotypical", "anxiety", "panic"};
            break;
        case AuxSubset::neuro_targets:
            aux = {"neurotypical", "anxiety", "depression", "suicide_attempt", "bipolar"};
            break;
        case AuxSubset::none:
            break;
    }
    aux.insert(main_task);

    std::vector<int> heads;
    for (int t = 0; t < registry.size(); ++t)
        if (aux.count(registry.names[t])) heads.push_back(t);
    return heads;
}

ModelParams build_from_config(const TrainConfig& cfg, int input_dim,
                              const TaskRegistry& registry) {
    switch (cfg.model) {
        case ModelKind::lr:
            return build_lr(input_dim, registry, cfg.seed);
        case ModelKind::mtl:
            return build_mtl(input_dim, cfg.hidden_width, cfg.shared_depth, registry, cfg.seed);
        case ModelKind::stl: {
            const std::int64_t budget = mtl_param_count(input_dim, cfg.hidden_width,
                                                        cfg.shared_depth, registry.size());
            Topology topo = build_stl_matched(input_dim, budget);
            topo.n_tasks = registry.size();
            return build_model(topo, registry, cfg.seed);
        }
    }
    throw ConfigError("build_from_config: bad model kind");
}

void run_jobs(int n_jobs, int n_workers, const std::function<void(int)>& job) {
    if (n_workers <= 1 || n_jobs <= 1) {
        for (int i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    n_workers = std::min(n_workers, n_jobs);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) job(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<SweepRow> run_sweep(SweepDim dim, const std::vector<double>& values,
                                const Dataset& train, const Dataset& dev,
                                const TrainConfig& base_cfg, int n_workers) {
    if (values.empty()) throw ConfigError("run_sweep: empty grid");
    for (double v : values)
        if (v <= 0.0 && dim != SweepDim::l2)
            throw ConfigError("run_sweep: grid values must be positive");

    std::vector<SweepRow> rows(values.size());
    run_jobs(static_cast<int>(values.size()), n_workers, [&](int i) {
        TrainConfig cfg = base_cfg;
        switch (dim) {
            case SweepDim::learning_rate: cfg.learning_rate = values[i]; break;
            case SweepDim::l2: cfg.l2 = values[i]; break;
            case SweepDim::width: cfg.hidden_width = static_cast<int>(values[i]); break;
        }
        SweepRow row;
        row.value = values[i];
        try {
            ModelParams model = build_from_config(cfg, train.dim(), train.tasks);
            TrainResult result = train_joint(model, train, dev, cfg);
            const std::size_t window = std::min<std::size_t>(10, result.curve.size());
            double sum = 0.0;
            for (std::size_t j = result.curve.size() - window; j < result.curve.size(); ++j)
                sum += result.curve[j].dev_loss;
            row.mean_terminal_dev_loss = sum / static_cast<double>(window);
        } catch (const NumericError&) {
            row.diverged = true;
            row.mean_terminal_dev_loss = std::numeric_limits<double>::infinity();
        }
        rows[i] = row;
    });
    return rows;
}

namespace {

void check_fold_disjointness(const FoldSplit& split, int n_rows) {
    std::vector<int> seen(n_rows, 0);
    for (const std::vector<int>* part : {&split.train, &split.dev, &split.test})
        for (int r : *part) seen[r] += 1;
    for (int c : seen)
        if (c > 1) throw DataFormatError("fold roles overlap");
}

ScoredSet task_scores(const Matrix& scores, const Dataset& test, int task) {
    ScoredSet set;
    for (int r = 0; r < test.size(); ++r)
        if (test.labels[task][r] != kMasked)
            set.push_back({scores(r, task), static_cast<int>(test.labels[task][r])});
    return set;
}

} // namespace

ModelEval evaluate_model(const ModelParams& model, const Dataset& test) {
    ModelEval eval;
    eval.kind = model.topo.kind;
    eval.model = model;
    const Matrix scores = forward(model, test.features);
    for (int t = 0; t < model.topo.n_tasks; ++t) {
        TaskMetrics m;
        m.task = model.tasks.names[t];
        ScoredSet set = task_scores(scores, test, t);
        int pos = 0, neg = 0;
        for (const Scored& s : set) (s.label == 1 ? pos : neg) += 1;
        if (pos > 0 && neg > 0) {
            m.defined = true;
            m.auc = auc(set);
            m.tpr_at_fpr01 = tpr_at_fpr(roc(set), 0.1);
            m.f1 = f1_at(set, 0.5);
        }
        eval.per_task.push_back(m);
        eval.scores.push_back(std::move(set));
    }
    return eval;
}

AblationResult run_ablation(const std::string& main_task, AuxSubset subset, const Dataset& all,
                            const std::vector<int>& fold_of, const TrainConfig& cfg) {
    const std::vector<int> heads = ablation_heads(main_task, subset, all.tasks);
    Dataset restricted = all.with_tasks(heads);
    const FoldSplit split = split_by_folds(fold_of);
    check_fold_disjointness(split, all.size());
    const Dataset train = restricted.subset(split.train);
    const Dataset dev = restricted.subset(split.dev);
    const Dataset test = restricted.subset(split.test);

    TrainConfig run_cfg = cfg;
    run_cfg.model = (subset == AuxSubset::none) ? ModelKind::stl : ModelKind::mtl;
    ModelParams init = build_from_config(run_cfg, restricted.dim(), restricted.tasks);
    ModelParams trained = train_full(init, train, dev, run_cfg);

    const int main_head = restricted.tasks.index_of(main_task);
    const Matrix scores = forward(trained, test.features);

    AblationResult result;
    result.main_task = main_task;
    result.subset = subset;
    result.main_scores = task_scores(scores, test, main_head);
    int pos = 0, neg = 0;
    for (const Scored& s : result.main_scores) (s.label == 1 ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw DataFormatError("run_ablation: degenerate test fold for task " + main_task);
    result.main_auc = auc(result.main_scores);
    return result;
}

ExperimentReport run_protocol(const Dataset& all, const std::vector<int>& fold_of,
                              const std::vector<ModelKind>& kinds, const TrainConfig& cfg,
                              int bootstrap_resamples) {
    const FoldSplit split = split_by_folds(fold_of);
    check_fold_disjointness(split, all.size());
    const Dataset train = all.subset(split.train);
    const Dataset dev = all.subset(split.dev);
    const Dataset test = all.subset(split.test);

    ExperimentReport report;
    report.seed = cfg.seed;
    for (ModelKind kind : kinds) {
        TrainConfig run_cfg = cfg;
        run_cfg.model = kind;
        ModelParams init = build_from_config(run_cfg, all.dim(), all.tasks);
        ModelParams trained = train_full(init, train, dev, run_cfg);
        report.models.push_back(evaluate_model(trained, test));
    }

    // Bootstrap every candidate against the LR and STL baselines on the
    // shared test fold.
    const auto find_kind = [&](ModelKind k) -> const ModelEval* {
        for (const ModelEval& m : report.models)
            if (m.kind == k) return &m;
        return nullptr;
    };
    for (const ModelEval& cand : report.models) {
        for (ModelKind baseline : {ModelKind::lr, ModelKind::stl}) {
            if (cand.kind == baseline) continue;
            const ModelEval* base = find_kind(baseline);
            if (!base) continue;
            for (int t = 0; t < all.tasks.size(); ++t) {
                if (!cand.per_task[t].defined || !base->per_task[t].defined) continue;
                Comparison cmp;
                cmp.task = all.tasks.names[t];
                cmp.candidate = cand.kind;
                cmp.baseline = baseline;
                cmp.result = bootstrap_auc_diff(cand.scores[t], base->scores[t],
                                                bootstrap_resamples,
                                                derive_seed(cfg.seed, 0xB007ULL + t));
                report.comparisons.push_back(std::move(cmp));
            }
        }
    }
    return report;
}

} // namespace mtlkit

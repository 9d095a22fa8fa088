#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtlkit/errors.hpp"
#include "mtlkit/experiments.hpp"
#include "mtlkit/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mtlkit;

namespace {

constexpr const char* kToolVersion = "mtlkit 0.1.0";

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Provenance record per subcommand invocation; written atomically last.
class Manifest {
  public:
    Manifest(std::string subcommand, std::uint64_t seed)
        : start_(std::chrono::steady_clock::now()) {
        j_["tool"] = kToolVersion;
        j_["subcommand"] = std::move(subcommand);
        j_["seed"] = seed;
        j_["config"] = json::object();
        j_["inputs"] = json::object();
        j_["outputs"] = json::object();
    }

    void set_config_text(const std::string& text) {
        for (const auto& [k, v] : parse_key_value(text)) j_["config"][k] = v;
    }
    void add_input(const std::string& path) { j_["inputs"][path] = hash_hex(hash_file(path)); }
    void add_output(const std::string& path) { j_["outputs"][path] = hash_hex(hash_file(path)); }

    void write(const std::string& path) {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        j_["duration_seconds"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        atomic_write(path, j_.dump(2) + "\n");
    }

  private:
    json j_;
    std::chrono::steady_clock::time_point start_;
};

std::string default_manifest_path(const std::string& first_output) {
    return first_output + ".manifest.json";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    if (values.empty()) throw ConfigError("empty grid");
    return values;
}

// Rows of the data matrix split by fold role; without a folds file the last
// 20% of rows (by file order) serve as the dev set.
struct SplitDatasets {
    Dataset train;
    Dataset dev;
    Dataset test;
    bool has_test = false;
};

std::vector<int> folds_for_rows(const std::vector<std::string>& user_ids,
                                const std::string& folds_path) {
    const std::map<std::string, int> fold_of = load_folds(folds_path);
    std::vector<int> rows;
    rows.reserve(user_ids.size());
    for (const std::string& id : user_ids) {
        const auto it = fold_of.find(id);
        if (it == fold_of.end()) throw DataFormatError("no fold assignment for user " + id);
        rows.push_back(it->second);
    }
    return rows;
}

SplitDatasets split_dataset(const Dataset& all, const std::string& folds_path) {
    SplitDatasets out;
    if (!folds_path.empty()) {
        const FoldSplit split = split_by_folds(folds_for_rows(all.user_ids, folds_path));
        out.train = all.subset(split.train);
        out.dev = all.subset(split.dev);
        out.test = all.subset(split.test);
        out.has_test = true;
        return out;
    }
    std::vector<int> train_rows, dev_rows;
    const int cut = all.size() - all.size() / 5;
    for (int r = 0; r < all.size(); ++r) (r < cut ? train_rows : dev_rows).push_back(r);
    if (train_rows.empty() || dev_rows.empty())
        throw DataFormatError("dataset too small to split without a folds file");
    out.train = all.subset(train_rows);
    out.dev = all.subset(dev_rows);
    return out;
}

void write_scored_csv(const ScoredSet& set, const std::string& header_tag,
                      const std::vector<std::pair<double, double>>& points,
                      const std::string& path) {
    (void)set;
    std::string out = "#mtlkit-" + header_tag + " v1\n";
    out += header_tag == "roc" ? "fpr,tpr\n" : "recall,precision\n";
    for (const auto& [x, y] : points) out += format_double(x) + "," + format_double(y) + "\n";
    atomic_write(path, out);
}

int cmd_synth(const std::string& spec_path, const std::string& out_docs,
              const std::string& out_labels, const std::string& out_folds,
              const std::string& manifest_path) {
    const CohortSpec spec = cohort_spec_from_file(spec_path);
    Manifest manifest("synth", spec.seed);
    manifest.set_config_text(slurp(spec_path));
    manifest.add_input(spec_path);

    const std::vector<SyntheticUser> users = generate_cohort(spec);

    std::vector<Document> docs;
    std::vector<LabelTriple> labels;
    std::vector<std::string> ids;
    std::vector<std::vector<std::int8_t>> label_rows;
    for (const SyntheticUser& u : users) {
        docs.push_back({u.user_id, u.text});
        ids.push_back(u.user_id);
        label_rows.push_back(u.labels);
        for (int t = 0; t < spec.tasks.size(); ++t)
            if (u.labels[t] != kMasked)
                labels.push_back({u.user_id, spec.tasks.names[t], u.labels[t]});
    }
    const std::vector<int> fold_of =
        make_folds(label_rows, spec.tasks, 5, spec.seed, spec.stratify_folds);

    save_docs(docs, out_docs);
    save_labels(labels, out_labels);
    save_folds(ids, fold_of, out_folds);
    manifest.add_output(out_docs);
    manifest.add_output(out_labels);
    manifest.add_output(out_folds);
    manifest.write(manifest_path.empty() ? default_manifest_path(out_docs) : manifest_path);
    std::cout << "synth: " << users.size() << " users -> " << out_docs << "\n";
    return 0;
}

int cmd_featurize(const std::string& input, const std::string& vocab_path,
                  const std::string& out, bool build_vocab, const std::string& folds_path,
                  const std::string& orders_csv, int top_k, int threads,
                  const std::string& manifest_path) {
    Manifest manifest("featurize", 0);
    manifest.add_input(input);

    const std::vector<Document> docs = load_docs(input);
    Vocabulary vocab;
    if (build_vocab) {
        FeaturizerConfig cfg;
        if (!orders_csv.empty()) {
            cfg.orders.clear();
            for (double v : parse_grid(orders_csv)) cfg.orders.push_back(static_cast<int>(v));
        }
        cfg.top_k = top_k;
        std::vector<Document> corpus = docs;
        if (!folds_path.empty()) {
            // Vocabulary from training folds only.
            std::vector<std::string> ids;
            for (const Document& d : docs) ids.push_back(d.user_id);
            const std::vector<int> fold_of = folds_for_rows(ids, folds_path);
            const FoldSplit split = split_by_folds(fold_of);
            corpus.clear();
            for (int r : split.train) corpus.push_back(docs[r]);
            manifest.add_input(folds_path);
        }
        vocab = build_vocabulary(corpus, cfg, threads);
        save_vocabulary(vocab, vocab_path);
        manifest.add_output(vocab_path);
    } else {
        vocab = load_vocabulary(vocab_path);
        manifest.add_input(vocab_path);
    }

    const Matrix features = featurize_corpus(docs, vocab);
    std::vector<std::string> ids;
    for (const Document& d : docs) ids.push_back(d.user_id);
    save_matrix(ids, features, vocab_slot_labels(vocab), out);
    manifest.add_output(out);
    manifest.write(manifest_path.empty() ? default_manifest_path(out) : manifest_path);
    std::cout << "featurize: " << ids.size() << " users x " << vocab.dim() << " features -> "
              << out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& labels_path, const std::string& out,
              const std::string& folds_path, const std::string& curve_path,
              const std::string& manifest_path) {
    const TrainConfig cfg = train_config_from_file(config_path);
    Manifest manifest("train", cfg.seed);
    manifest.set_config_text(slurp(config_path));
    manifest.add_input(config_path);
    manifest.add_input(data_path);
    manifest.add_input(labels_path);
    if (!folds_path.empty()) manifest.add_input(folds_path);

    const Dataset all = assemble_dataset(load_matrix(data_path), load_labels(labels_path));
    const SplitDatasets split = split_dataset(all, folds_path);

    ModelParams init = build_from_config(cfg, all.dim(), all.tasks);
    init.config_hash = hash_file(config_path);
    TrainResult joint;
    ModelParams trained = train_full(init, split.train, split.dev, cfg, &joint);
    trained.config_hash = init.config_hash;

    save_model(trained, out);
    manifest.add_output(out);
    if (!curve_path.empty()) {
        save_curve(joint.curve, curve_path);
        manifest.add_output(curve_path);
    }
    manifest.write(manifest_path.empty() ? default_manifest_path(out) : manifest_path);
    std::cout << "train: best joint dev loss " << joint.best.dev_loss << " at iteration "
              << joint.best.iteration << " -> " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& labels_path, const std::string& out,
                 const std::string& folds_path, int bootstrap_resamples,
                 const std::string& manifest_path) {
    const ModelParams model = load_model(model_path);
    Manifest manifest("evaluate", model.seed);
    manifest.add_input(model_path);
    manifest.add_input(data_path);
    manifest.add_input(labels_path);
    if (!folds_path.empty()) manifest.add_input(folds_path);
    (void)bootstrap_resamples;

    const Dataset all =
        assemble_dataset(load_matrix(data_path), load_labels(labels_path), model.tasks);
    Dataset eval_set = all;
    if (!folds_path.empty()) {
        const FoldSplit split = split_by_folds(folds_for_rows(all.user_ids, folds_path));
        eval_set = all.subset(split.test);
    }

    const ModelEval eval = evaluate_model(model, eval_set);

    const fs::path out_path(out);
    const std::string stem = (out_path.parent_path() / out_path.stem()).string();
    json j;
    j["format"] = "mtlkit-report";
    j["version"] = 1;
    j["model"] = to_string(model.topo.kind);
    j["model_file"] = model_path;
    j["seed"] = model.seed;
    j["config_hash"] = hash_hex(model.config_hash);
    j["data_hash"] = hash_hex(hash_file(data_path));
    j["tasks"] = json::object();
    std::vector<std::string> curve_files;
    for (int t = 0; t < model.topo.n_tasks; ++t) {
        const TaskMetrics& m = eval.per_task[t];
        json tj;
        tj["defined"] = m.defined;
        if (m.defined) {
            tj["auc"] = m.auc;
            tj["tpr_at_fpr_0_1"] = m.tpr_at_fpr01;
            tj["f1"] = m.f1;
            const RocCurve curve = roc(eval.scores[t]);
            std::vector<std::pair<double, double>> roc_pts, pr_pts;
            for (const RocPoint& p : curve) roc_pts.push_back({p.fpr, p.tpr});
            for (const PrPoint& p : precision_recall(eval.scores[t]))
                pr_pts.push_back({p.recall, p.precision});
            const std::string roc_file = stem + "_roc_" + m.task + ".csv";
            const std::string pr_file = stem + "_pr_" + m.task + ".csv";
            write_scored_csv(eval.scores[t], "roc", roc_pts, roc_file);
            write_scored_csv(eval.scores[t], "pr", pr_pts, pr_file);
            tj["roc_csv"] = roc_file;
            tj["pr_csv"] = pr_file;
            curve_files.push_back(roc_file);
            curve_files.push_back(pr_file);
        }
        j["tasks"][m.task] = tj;
    }
    atomic_write(out, j.dump(2) + "\n");
    manifest.add_output(out);
    for (const std::string& f : curve_files) manifest.add_output(f);
    manifest.write(manifest_path.empty() ? default_manifest_path(out) : manifest_path);
    std::cout << "evaluate: " << eval_set.size() << " users -> " << out << "\n";
    return 0;
}

int cmd_sweep(const std::string& dim_name, const std::string& grid_csv,
              const std::string& config_path, const std::string& data_path,
              const std::string& labels_path, const std::string& folds_path,
              const std::string& out, int workers, const std::string& manifest_path) {
    const TrainConfig cfg = train_config_from_file(config_path);
    Manifest manifest("sweep", cfg.seed);
    manifest.set_config_text(slurp(config_path));
    manifest.add_input(config_path);
    manifest.add_input(data_path);
    manifest.add_input(labels_path);
    if (!folds_path.empty()) manifest.add_input(folds_path);

    const SweepDim dim = sweep_dim_from_string(dim_name);
    const std::vector<double> grid = parse_grid(grid_csv);
    const Dataset all = assemble_dataset(load_matrix(data_path), load_labels(labels_path));
    const SplitDatasets split = split_dataset(all, folds_path);

    const std::vector<SweepRow> rows =
        run_sweep(dim, grid, split.train, split.dev, cfg, workers);

    json j;
    j["format"] = "mtlkit-sweep";
    j["version"] = 1;
    j["dim"] = to_string(dim);
    j["rows"] = json::array();
    for (const SweepRow& r : rows) {
        json rj;
        rj["value"] = r.value;
        rj["diverged"] = r.diverged;
        rj["mean_terminal_dev_loss"] =
            r.diverged ? json("diverged") : json(r.mean_terminal_dev_loss);
        j["rows"].push_back(rj);
    }
    atomic_write(out, j.dump(2) + "\n");
    manifest.add_output(out);
    manifest.write(manifest_path.empty() ? default_manifest_path(out) : manifest_path);
    std::cout << "sweep: " << rows.size() << " cells -> " << out << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_path,
               const std::string& labels_path, const std::string& folds_path,
               const std::string& main_task, const std::string& subset_name,
               const std::string& out, const std::string& manifest_path) {
    const TrainConfig cfg = train_config_from_file(config_path);
    Manifest manifest("ablate", cfg.seed);
    manifest.set_config_text(slurp(config_path));
    manifest.add_input(config_path);
    manifest.add_input(data_path);
    manifest.add_input(labels_path);
    manifest.add_input(folds_path);

    const Dataset all = assemble_dataset(load_matrix(data_path), load_labels(labels_path));
    const std::vector<int> fold_of = folds_for_rows(all.user_ids, folds_path);
    const AuxSubset subset = aux_subset_from_string(subset_name);
    const AblationResult result = run_ablation(main_task, subset, all, fold_of, cfg);

    json j;
    j["format"] = "mtlkit-ablation";
    j["version"] = 1;
    j["main_task"] = result.main_task;
    j["subset"] = to_string(result.subset);
    j["test_auc"] = result.main_auc;
    atomic_write(out, j.dump(2) + "\n");
    manifest.add_output(out);
    manifest.write(manifest_path.empty() ? default_manifest_path(out) : manifest_path);
    std::cout << "ablate: " << main_task << "/" << subset_name << " AUC " << result.main_auc
              << " -> " << out << "\n";
    return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& out,
               const std::string& manifest_path) {
    Manifest manifest("report", 0);
    json j;
    j["format"] = "mtlkit-combined-report";
    j["version"] = 1;
    j["runs"] = json::object();
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const fs::path& dir : dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".json" &&
                entry.path().string().find(".manifest.") == std::string::npos)
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        json run = json::object();
        for (const fs::path& f : files) {
            try {
                run[f.filename().string()] = json::parse(slurp(f.string()));
            } catch (const json::parse_error&) {
                throw DataFormatError("not a JSON report: " + f.string());
            }
        }
        if (!run.empty()) j["runs"][dir.filename().string()] = run;
    }
    atomic_write(out, j.dump(2) + "\n");
    manifest.add_output(out);
    manifest.write(manifest_path.empty() ? default_manifest_path(out) : manifest_path);
    std::cout << "report: " << j["runs"].size() << " runs -> " << out << "\n";
    return 0;
}

int cmd_describe(const std::string& model_path) {
    describe_model(load_model(model_path), std::cout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task n-gram text classification toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::string spec_path, out_docs, out_labels_path, out_folds_path, manifest_path;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
    synth->add_option("--spec", spec_path, "Cohort spec (key-value file)")->required();
    synth->add_option("--out-docs", out_docs)->required();
    synth->add_option("--out-labels", out_labels_path)->required();
    synth->add_option("--out-folds", out_folds_path)->required();
    synth->add_option("--manifest", manifest_path);

    std::string input, vocab_path, matrix_out, folds_path, orders_csv;
    bool build_vocab = false;
    int top_k = 5000, threads = 1;
    auto* featurize = app.add_subcommand("featurize", "Character n-gram features");
    featurize->add_option("--input", input, "Docs file")->required();
    featurize->add_option("--vocab", vocab_path)->required();
    featurize->add_option("--out", matrix_out)->required();
    featurize->add_flag("--build-vocab", build_vocab, "Build the vocabulary first");
    featurize->add_option("--folds", folds_path, "Restrict vocabulary to training folds");
    featurize->add_option("--orders", orders_csv, "Comma-separated n-gram orders");
    featurize->add_option("--top-k", top_k, "Features retained per order");
    featurize->add_option("--threads", threads);
    featurize->add_option("--manifest", manifest_path);

    std::string config_path, data_path, labels_path, model_out, curve_path;
    auto* train = app.add_subcommand("train", "Train a model");
    train->add_option("--config", config_path)->required();
    train->add_option("--data", data_path)->required();
    train->add_option("--labels", labels_path)->required();
    train->add_option("--out", model_out)->required();
    train->add_option("--folds", folds_path);
    train->add_option("--curve", curve_path, "Loss-curve CSV output");
    train->add_option("--manifest", manifest_path);

    std::string model_path, report_out;
    int resamples = 5000;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model");
    evaluate->add_option("--model", model_path)->required();
    evaluate->add_option("--data", data_path)->required();
    evaluate->add_option("--labels", labels_path)->required();
    evaluate->add_option("--out", report_out)->required();
    evaluate->add_option("--folds", folds_path, "Evaluate on the test fold");
    evaluate->add_option("--resamples", resamples);
    evaluate->add_option("--manifest", manifest_path);

    std::string dim_name, grid_csv;
    int workers = 1;
    auto* sweep = app.add_subcommand("sweep", "Hyperparameter line search");
    sweep->add_option("--dim", dim_name, "lr | l2 | width")->required();
    sweep->add_option("--grid", grid_csv, "Comma-separated values")->required();
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--data", data_path)->required();
    sweep->add_option("--labels", labels_path)->required();
    sweep->add_option("--folds", folds_path);
    sweep->add_option("--out", report_out)->required();
    sweep->add_option("--workers", workers);
    sweep->add_option("--manifest", manifest_path);

    std::string main_task, subset_name;
    auto* ablate = app.add_subcommand("ablate", "Auxiliary-task ablation");
    ablate->add_option("--config", config_path)->required();
    ablate->add_option("--data", data_path)->required();
    ablate->add_option("--labels", labels_path)->required();
    ablate->add_option("--folds", folds_path)->required();
    ablate->add_option("--main", main_task)->required();
    ablate->add_option("--subset", subset_name)->required();
    ablate->add_option("--out", report_out)->required();
    ablate->add_option("--manifest", manifest_path);

    std::string runs_dir;
    auto* report = app.add_subcommand("report", "Assemble reports from a run directory");
    report->add_option("--runs", runs_dir)->required();
    report->add_option("--out", report_out)->required();
    report->add_option("--manifest", manifest_path);

    auto* describe = app.add_subcommand("describe", "Print a model file header");
    describe->add_option("--model", model_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(spec_path, out_docs, out_labels_path, out_folds_path, manifest_path);
        if (featurize->parsed())
            return cmd_featurize(input, vocab_path, matrix_out, build_vocab, folds_path,
                                 orders_csv, top_k, threads, manifest_path);
        if (train->parsed())
            return cmd_train(config_path, data_path, labels_path, model_out, folds_path,
                             curve_path, manifest_path);
        if (evaluate->parsed())
            return cmd_evaluate(model_path, data_path, labels_path, report_out, folds_path,
                                resamples, manifest_path);
        if (sweep->parsed())
            return cmd_sweep(dim_name, grid_csv, config_path, data_path, labels_path, folds_path,
                             report_out, workers, manifest_path);
        if (ablate->parsed())
            return cmd_ablate(config_path, data_path, labels_path, folds_path, main_task,
                              subset_name, report_out, manifest_path);
        if (report->parsed()) return cmd_report(runs_dir, report_out, manifest_path);
        if (describe->parsed()) return cmd_describe(model_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

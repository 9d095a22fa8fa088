#include "mtlkit/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mtlkit/errors.hpp"

namespace mtlkit {

namespace {

constexpr const char* kDocsHeader = "#mtlkit-docs v1";
constexpr const char* kLabelsHeader = "#mtlkit-labels v1";
constexpr const char* kFoldsHeader = "#mtlkit-folds v1";
constexpr const char* kVocabHeader = "#mtlkit-vocab v1";
constexpr const char* kMatrixHeader = "#mtlkit-matrix v1";
constexpr const char* kCurveHeader = "#mtlkit-curve v1";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

void expect_header(const std::vector<std::string>& lines, const char* header,
                   const std::string& path) {
    if (lines.empty() || lines[0] != header)
        throw DataFormatError(path + ": missing or mismatched header, expected \"" +
                              std::string(header) + "\"");
}

} // namespace

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 1 >= s.size()) throw DataFormatError("dangling escape in field");
        ++i;
        switch (s[i]) {
            case '\\': out.push_back('\\'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            default: throw DataFormatError(std::string("unknown escape \\") + s[i]);
        }
    }
    return out;
}

std::uint64_t hash_bytes(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path) { return hash_bytes(read_file(path)); }

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataFormatError("cannot open for writing: " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw DataFormatError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataFormatError("cannot rename " + tmp + " to " + path);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- docs -------------------------------------------------------------------

void save_docs(const std::vector<Document>& docs, const std::string& path) {
    std::string out = std::string(kDocsHeader) + "\n";
    for (const Document& d : docs) out += d.user_id + "\t" + escape_field(d.text) + "\n";
    atomic_write(path, out);
}

std::vector<Document> load_docs(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_file(path));
    expect_header(lines, kDocsHeader, path);
    std::vector<Document> docs;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_tabs(lines[i]);
        if (f.size() != 2)
            throw DataFormatError(path + ":" + std::to_string(i + 1) +
                                  ": expected user_id<TAB>text");
        docs.push_back({f[0], unescape_field(f[1])});
    }
    return docs;
}

// ---- labels -----------------------------------------------------------------

void save_labels(const std::vector<LabelTriple>& labels, const std::string& path) {
    std::string out = std::string(kLabelsHeader) + "\n";
    for (const LabelTriple& l : labels)
        out += l.user_id + "\t" + l.task + "\t" + std::to_string(l.value) + "\n";
    atomic_write(path, out);
}

std::vector<LabelTriple> load_labels(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_file(path));
    expect_header(lines, kLabelsHeader, path);
    std::vector<LabelTriple> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_tabs(lines[i]);
        if (f.size() != 3 || (f[2] != "0" && f[2] != "1"))
            throw DataFormatError(path + ":" + std::to_string(i + 1) +
                                  ": expected user_id<TAB>task<TAB>{0|1}");
        labels.push_back({f[0], f[1], f[2] == "1" ? 1 : 0});
    }
    return labels;
}

// ---- folds ------------------------------------------------------------------

void save_folds(const std::vector<std::string>& user_ids, const std::vector<int>& fold_of,
                const std::string& path) {
    if (user_ids.size() != fold_of.size())
        throw DataFormatError("save_folds: user/fold count mismatch");
    std::string out = std::string(kFoldsHeader) + "\n";
    for (std::size_t i = 0; i < user_ids.size(); ++i)
        out += user_ids[i] + "\t" + std::to_string(fold_of[i]) + "\n";
    atomic_write(path, out);
}

std::map<std::string, int> load_folds(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_file(path));
    expect_header(lines, kFoldsHeader, path);
    std::map<std::string, int> folds;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_tabs(lines[i]);
        if (f.size() != 2)
            throw DataFormatError(path + ":" + std::to_string(i + 1) +
                                  ": expected user_id<TAB>fold");
        folds[f[0]] = std::stoi(f[1]);
    }
    return folds;
}

// ---- vocabulary -------------------------------------------------------------

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    std::string out = std::string(kVocabHeader) + "\n";
    out += "orders=";
    for (std::size_t i = 0; i < vocab.cfg.orders.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(vocab.cfg.orders[i]);
    }
    out += "\ttop_k=" + std::to_string(vocab.cfg.top_k);
    out += "\tlowercase=" + std::to_string(vocab.cfg.lowercase ? 1 : 0);
    out += "\tcollapse_whitespace=" + std::to_string(vocab.cfg.collapse_whitespace ? 1 : 0);
    out += "\n";
    for (std::size_t oi = 0; oi < vocab.per_order.size(); ++oi) {
        for (const VocabEntry& e : vocab.per_order[oi])
            out += std::to_string(vocab.cfg.orders[oi]) + "\t" + escape_field(e.ngram) + "\t" +
                   std::to_string(e.count) + "\t" + std::to_string(e.slot) + "\n";
    }
    atomic_write(path, out);
}

Vocabulary load_vocabulary(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_file(path));
    expect_header(lines, kVocabHeader, path);
    if (lines.size() < 2) throw DataFormatError(path + ": missing config line");

    Vocabulary vocab;
    vocab.cfg.orders.clear();
    for (const std::string& field : split_tabs(lines[1])) {
        const std::size_t eq = field.find('=');
        if (eq == std::string::npos)
            throw DataFormatError(path + ":2: malformed config field " + field);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "orders") {
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) vocab.cfg.orders.push_back(std::stoi(item));
        } else if (key == "top_k") {
            vocab.cfg.top_k = std::stoi(value);
        } else if (key == "lowercase") {
            vocab.cfg.lowercase = value == "1";
        } else if (key == "collapse_whitespace") {
            vocab.cfg.collapse_whitespace = value == "1";
        } else {
            throw DataFormatError(path + ":2: unknown config field " + key);
        }
    }
    vocab.cfg.validate();
    vocab.per_order.resize(vocab.cfg.orders.size());

    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_tabs(lines[i]);
        if (f.size() != 4)
            throw DataFormatError(path + ":" + std::to_string(i + 1) +
                                  ": expected order<TAB>ngram<TAB>count<TAB>slot");
        const int order = std::stoi(f[0]);
        const auto it = std::find(vocab.cfg.orders.begin(), vocab.cfg.orders.end(), order);
        if (it == vocab.cfg.orders.end())
            throw DataFormatError(path + ":" + std::to_string(i + 1) + ": unlisted order " +
                                  f[0]);
        VocabEntry entry{unescape_field(f[1]), std::stoll(f[2]), std::stoi(f[3])};
        vocab.per_order[it - vocab.cfg.orders.begin()].push_back(std::move(entry));
    }
    return vocab;
}

std::vector<std::string> vocab_slot_labels(const Vocabulary& vocab) {
    std::vector<std::string> labels(vocab.dim());
    for (int i = 0; i < vocab.dim(); ++i) labels[i] = "slot" + std::to_string(i);
    for (std::size_t oi = 0; oi < vocab.per_order.size(); ++oi)
        for (const VocabEntry& e : vocab.per_order[oi])
            labels[e.slot] = std::to_string(vocab.cfg.orders[oi]) + ":" + escape_field(e.ngram);
    return labels;
}

// ---- matrix -----------------------------------------------------------------

void save_matrix(const std::vector<std::string>& user_ids, const Matrix& features,
                 const std::vector<std::string>& slot_labels, const std::string& path) {
    if (static_cast<int>(user_ids.size()) != features.rows)
        throw DataFormatError("save_matrix: user/row count mismatch");
    if (static_cast<int>(slot_labels.size()) != features.cols)
        throw DataFormatError("save_matrix: label/column count mismatch");
    std::string out = std::string(kMatrixHeader) + "\n";
    out += "user_id";
    for (const std::string& l : slot_labels) out += "\t" + l;
    out += "\n";
    for (int r = 0; r < features.rows; ++r) {
        out += user_ids[r];
        for (int c = 0; c < features.cols; ++c) out += "\t" + format_double(features(r, c));
        out += "\n";
    }
    atomic_write(path, out);
}

LoadedMatrix load_matrix(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_file(path));
    expect_header(lines, kMatrixHeader, path);
    if (lines.size() < 2) throw DataFormatError(path + ": missing column header");
    const std::vector<std::string> header = split_tabs(lines[1]);
    if (header.empty() || header[0] != "user_id")
        throw DataFormatError(path + ":2: first column must be user_id");
    const int cols = static_cast<int>(header.size()) - 1;

    LoadedMatrix out;
    std::vector<double> values;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_tabs(lines[i]);
        if (static_cast<int>(f.size()) != cols + 1)
            throw DataFormatError(path + ":" + std::to_string(i + 1) + ": expected " +
                                  std::to_string(cols + 1) + " fields");
        out.user_ids.push_back(f[0]);
        for (int c = 0; c < cols; ++c) {
            char* end = nullptr;
            const double v = std::strtod(f[c + 1].c_str(), &end);
            if (end == f[c + 1].c_str() || *end != '\0')
                throw DataFormatError(path + ":" + std::to_string(i + 1) + ": bad number " +
                                      f[c + 1]);
            values.push_back(v);
        }
    }
    out.features = Matrix(static_cast<int>(out.user_ids.size()), cols, std::move(values));
    return out;
}

// ---- loss curve -------------------------------------------------------------

void save_curve(const std::vector<CurvePoint>& curve, const std::string& path) {
    std::string out = std::string(kCurveHeader) + "\n";
    out += "iteration,train_loss,dev_loss\n";
    for (const CurvePoint& p : curve)
        out += std::to_string(p.iteration) + "," + format_double(p.train_loss) + "," +
               format_double(p.dev_loss) + "\n";
    atomic_write(path, out);
}

// ---- key-value configs ------------------------------------------------------

namespace {

struct KvEntry {
    int line = 0;
    std::string key;
    std::string value;
};

std::vector<KvEntry> parse_kv_lines(const std::string& text) {
    std::vector<KvEntry> entries;
    const std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(i + 1) + ": expected key = value");
        KvEntry entry;
        entry.line = static_cast<int>(i + 1);
        entry.key = strip(line.substr(0, eq));
        entry.value = strip(line.substr(eq + 1));
        if (entry.key.empty())
            throw ConfigError("line " + std::to_string(i + 1) + ": empty key");
        entries.push_back(std::move(entry));
    }
    return entries;
}

[[noreturn]] void kv_error(const KvEntry& e, const std::string& what) {
    throw ConfigError("line " + std::to_string(e.line) + ": " + e.key + ": " + what);
}

double kv_double(const KvEntry& e) {
    try {
        std::size_t used = 0;
        const double v = std::stod(e.value, &used);
        if (used != e.value.size()) kv_error(e, "bad number " + e.value);
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        kv_error(e, "bad number " + e.value);
    }
}

std::int64_t kv_int(const KvEntry& e) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(e.value, &used);
        if (used != e.value.size()) kv_error(e, "bad integer " + e.value);
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        kv_error(e, "bad integer " + e.value);
    }
}

bool kv_bool(const KvEntry& e) {
    if (e.value == "1" || e.value == "true") return true;
    if (e.value == "0" || e.value == "false") return false;
    kv_error(e, "expected a boolean");
}

void apply_env_seed(bool seed_was_set, std::uint64_t* seed) {
    if (seed_was_set) return;
    if (const char* env = std::getenv("MTLKIT_SEED"))
        *seed = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
}

} // namespace

std::map<std::string, std::string> parse_key_value(const std::string& text) {
    std::map<std::string, std::string> out;
    for (const KvEntry& e : parse_kv_lines(text)) out[e.key] = e.value;
    return out;
}

TrainConfig train_config_from_text(const std::string& text) {
    TrainConfig cfg;
    bool seed_set = false;
    for (const KvEntry& e : parse_kv_lines(text)) {
        if (e.key == "batch_size") {
            cfg.batch_size = static_cast<int>(kv_int(e));
        } else if (e.key == "joint_iters") {
            cfg.joint_iters = static_cast<int>(kv_int(e));
        } else if (e.key == "finetune_iters") {
            cfg.finetune_iters = static_cast<int>(kv_int(e));
        } else if (e.key == "eval_every") {
            cfg.eval_every = static_cast<int>(kv_int(e));
        } else if (e.key == "learning_rate") {
            cfg.learning_rate = kv_double(e);
        } else if (e.key == "l2") {
            cfg.l2 = kv_double(e);
        } else if (e.key == "dropout_rate") {
            cfg.dropout_rate = kv_double(e);
            if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
                kv_error(e, "must be in [0,1)");
        } else if (e.key == "hidden_width") {
            cfg.hidden_width = static_cast<int>(kv_int(e));
        } else if (e.key == "shared_depth") {
            cfg.shared_depth = static_cast<int>(kv_int(e));
        } else if (e.key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(kv_int(e));
            seed_set = true;
        } else if (e.key == "optimizer") {
            try {
                cfg.optimizer = optimizer_from_string(e.value);
            } catch (const ConfigError& err) {
                kv_error(e, err.what());
            }
        } else if (e.key == "model") {
            try {
                cfg.model = model_kind_from_string(e.value);
            } catch (const ConfigError& err) {
                kv_error(e, err.what());
            }
        } else {
            kv_error(e, "unknown key");
        }
    }
    apply_env_seed(seed_set, &cfg.seed);
    cfg.validate();
    return cfg;
}

TrainConfig train_config_from_file(const std::string& path) {
    try {
        return train_config_from_text(read_file(path));
    } catch (const DataFormatError& e) {
        throw ConfigError(e.what());
    }
}

CohortSpec cohort_spec_from_text(const std::string& text) {
    CohortSpec spec;
    bool seed_set = false;
    for (const KvEntry& e : parse_kv_lines(text)) {
        if (e.key == "n_users") {
            spec.n_users = static_cast<int>(kv_int(e));
        } else if (e.key == "tasks") {
            spec.tasks.names.clear();
            spec.tasks.roles.clear();
            std::stringstream ss(e.value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                spec.tasks.names.push_back(item);
                spec.tasks.roles.push_back(item == "gender" ? TaskRole::demographic
                                                            : TaskRole::condition);
            }
            if (spec.tasks.names.empty()) kv_error(e, "empty task list");
        } else if (e.key.rfind("prevalence.", 0) == 0) {
            spec.prevalence[e.key.substr(11)] = kv_double(e);
        } else if (e.key.rfind("comorbidity.", 0) == 0) {
            const std::string rest = e.key.substr(12);
            const std::size_t dot = rest.find('.');
            if (dot == std::string::npos) kv_error(e, "expected comorbidity.<a>.<b>");
            std::string a = rest.substr(0, dot);
            std::string b = rest.substr(dot + 1);
            if (a > b) std::swap(a, b);
            spec.comorbidity[{a, b}] = kv_double(e);
        } else if (e.key == "gender_label_fraction") {
            spec.gender_label_fraction = kv_double(e);
        } else if (e.key == "doc_length_mean") {
            spec.doc_length_mean = kv_double(e);
        } else if (e.key == "doc_length_min") {
            spec.doc_length_min = kv_double(e);
        } else if (e.key == "signal_strength") {
            spec.signal_strength = kv_double(e);
        } else if (e.key == "seed") {
            spec.seed = static_cast<std::uint64_t>(kv_int(e));
            seed_set = true;
        } else if (e.key == "stratify_folds") {
            spec.stratify_folds = kv_bool(e);
        } else {
            kv_error(e, "unknown key");
        }
    }
    apply_env_seed(seed_set, &spec.seed);
    spec.validate();
    return spec;
}

CohortSpec cohort_spec_from_file(const std::string& path) {
    try {
        return cohort_spec_from_text(read_file(path));
    } catch (const DataFormatError& e) {
        throw ConfigError(e.what());
    }
}

// ---- dataset assembly -------------------------------------------------------

TaskRegistry registry_from_label_tasks(const std::vector<LabelTriple>& labels) {
    std::vector<std::string> present;
    for (const LabelTriple& l : labels)
        if (std::find(present.begin(), present.end(), l.task) == present.end())
            present.push_back(l.task);

    const TaskRegistry canonical = default_registry();
    TaskRegistry reg;
    for (int t = 0; t < canonical.size(); ++t) {
        if (std::find(present.begin(), present.end(), canonical.names[t]) != present.end()) {
            reg.names.push_back(canonical.names[t]);
            reg.roles.push_back(canonical.roles[t]);
        }
    }
    std::vector<std::string> unknown;
    for (const std::string& name : present)
        if (canonical.index_of(name) < 0) unknown.push_back(name);
    std::sort(unknown.begin(), unknown.end());
    for (const std::string& name : unknown) {
        reg.names.push_back(name);
        reg.roles.push_back(TaskRole::condition);
    }
    return reg;
}

Dataset assemble_dataset(const LoadedMatrix& matrix, const std::vector<LabelTriple>& labels,
                         const TaskRegistry& registry) {
    Dataset data;
    data.user_ids = matrix.user_ids;
    data.features = matrix.features;
    data.tasks = registry;
    data.labels.assign(registry.names.size(),
                       std::vector<std::int8_t>(matrix.user_ids.size(), kMasked));

    std::map<std::string, int> row_of;
    for (std::size_t i = 0; i < matrix.user_ids.size(); ++i)
        row_of[matrix.user_ids[i]] = static_cast<int>(i);

    for (const LabelTriple& l : labels) {
        const auto rit = row_of.find(l.user_id);
        if (rit == row_of.end())
            throw DataFormatError("label for unknown user: " + l.user_id);
        const int t = registry.index_of(l.task);
        if (t < 0) continue; // task outside the requested registry
        std::int8_t& cell = data.labels[t][rit->second];
        if (cell != kMasked && cell != static_cast<std::int8_t>(l.value))
            throw DataFormatError("conflicting labels for user " + l.user_id + ", task " +
                                  l.task);
        cell = static_cast<std::int8_t>(l.value);
    }
    return data;
}

Dataset assemble_dataset(const LoadedMatrix& matrix, const std::vector<LabelTriple>& labels) {
    return assemble_dataset(matrix, labels, registry_from_label_tasks(labels));
}

} // namespace mtlkit

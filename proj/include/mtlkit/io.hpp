#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtlkit/data.hpp"
#include "mtlkit/featurizer.hpp"
#include "mtlkit/synth.hpp"
#include "mtlkit/trainer.hpp"

namespace mtlkit {

// \t, \n, and backslash escaping for tab-separated text formats.
std::string escape_field(const std::string& s);
std::string unescape_field(const std::string& s);

std::uint64_t hash_bytes(const std::string& bytes);
std::uint64_t hash_file(const std::string& path);

// Write-then-rename; no partial artifacts on abort.
void atomic_write(const std::string& path, const std::string& contents);

// ---- docs file: "#mtlkit-docs v1", then user_id<TAB>escaped-text ----------
void save_docs(const std::vector<Document>& docs, const std::string& path);
std::vector<Document> load_docs(const std::string& path);

// ---- labels file: "#mtlkit-labels v1", then user_id<TAB>task<TAB>{0|1} ----
struct LabelTriple {
    std::string user_id;
    std::string task;
    int value = 0;
};
void save_labels(const std::vector<LabelTriple>& labels, const std::string& path);
std::vector<LabelTriple> load_labels(const std::string& path);

// ---- folds file: "#mtlkit-folds v1", then user_id<TAB>fold ----------------
void save_folds(const std::vector<std::string>& user_ids, const std::vector<int>& fold_of,
                const std::string& path);
std::map<std::string, int> load_folds(const std::string& path);

// ---- vocab file: "#mtlkit-vocab v1" + config line, then
//      order<TAB>ngram(escaped)<TAB>count<TAB>slot ---------------------------
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

// ---- matrix file: "#mtlkit-matrix v1", header row (user_id + slot labels),
//      one row per user, decimal values, tab-separated ----------------------
void save_matrix(const std::vector<std::string>& user_ids, const Matrix& features,
                 const std::vector<std::string>& slot_labels, const std::string& path);
struct LoadedMatrix {
    std::vector<std::string> user_ids;
    Matrix features;
};
LoadedMatrix load_matrix(const std::string& path);

std::vector<std::string> vocab_slot_labels(const Vocabulary& vocab);

// ---- loss-curve CSV: "#mtlkit-curve v1", iteration,train_loss,dev_loss ----
void save_curve(const std::vector<CurvePoint>& curve, const std::string& path);

// ---- flat key-value config files -------------------------------------------
// Lines are "key = value"; '#' starts a comment; unknown keys are errors
// reported with their line number.
std::map<std::string, std::string> parse_key_value(const std::string& text);

TrainConfig train_config_from_file(const std::string& path);
TrainConfig train_config_from_text(const std::string& text);
CohortSpec cohort_spec_from_file(const std::string& path);
CohortSpec cohort_spec_from_text(const std::string& text);

// Task order: known names in canonical registry order first, unknown names
// appended sorted.
TaskRegistry registry_from_label_tasks(const std::vector<LabelTriple>& labels);

// Feature rows from a matrix file joined with a labels file. Users missing a
// (user, task) pair are masked for that task.
Dataset assemble_dataset(const LoadedMatrix& matrix, const std::vector<LabelTriple>& labels);
Dataset assemble_dataset(const LoadedMatrix& matrix, const std::vector<LabelTriple>& labels,
                         const TaskRegistry& registry);

std::string format_double(double v); // shortest round-trip decimal

} // namespace mtlkit

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtlkit/model.hpp"

namespace mtlkit {

// Generator parameters for a desk-scale cohort with controllable prevalence,
// pairwise comorbidity, partial gender annotation, and condition-dependent
// character-level text signal.
struct CohortSpec {
    int n_users = 1000;
    TaskRegistry tasks = default_registry();
    // Marginal probability per condition task (everything except
    // neurotypical and gender). Missing entries default to 0.
    std::map<std::string, double> prevalence;
    // Symmetric pairwise odds multipliers, keyed by (task_a, task_b) with
    // task_a < task_b lexicographically. Missing pairs default to 1.
    std::map<std::pair<std::string, std::string>, double> comorbidity;
    double gender_label_fraction = 0.115;
    double doc_length_mean = 600.0;
    double doc_length_min = 200.0;
    double signal_strength = 0.3;
    std::uint64_t seed = 1;
    bool stratify_folds = true;

    void validate() const;
    double comorbidity_multiplier(const std::string& a, const std::string& b) const;
};

struct SyntheticUser {
    std::string user_id;
    std::vector<std::int8_t> labels; // aligned with spec.tasks; gender masked
                                     // outside the annotated fraction
    std::string text;
};

// Condition labels by sequential conditional sampling in registry order:
// each condition's probability is its marginal times the comorbidity
// multipliers of the conditions already drawn positive, clamped to (0,1).
// neurotypical is set iff no condition is positive; gender is a fair coin
// for a random gender_label_fraction subset and masked elsewhere.
std::vector<std::vector<std::int8_t>> sample_labels(const CohortSpec& spec, std::uint64_t seed);

// Character stream over a fixed 30-symbol alphabet: base unigram
// distribution mixed with one biased distribution per positive condition at
// weight signal_strength each; length is doc_length_min plus a geometric
// draw with the matching mean.
std::string generate_text(const std::vector<std::int8_t>& labels, const CohortSpec& spec,
                          std::uint64_t seed);

// Full cohort; user i derives its seed from (spec.seed, i) so generation is
// order-independent.
std::vector<SyntheticUser> generate_cohort(const CohortSpec& spec);

// Random equal-sized (+-1) k-fold assignment, optionally stratified on the
// neurotypical flag.
std::vector<int> make_folds(const std::vector<std::vector<std::int8_t>>& user_labels,
                            const TaskRegistry& tasks, int k, std::uint64_t seed,
                            bool stratify);

const std::string& synth_alphabet();

} // namespace mtlkit

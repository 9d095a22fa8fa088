#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtlkit/matrix.hpp"

namespace mtlkit {

struct Document {
    std::string user_id;
    std::string text; // full concatenated history, already normalized or raw
};

struct FeaturizerConfig {
    std::vector<int> orders = {1, 2, 3, 4, 5}; // ascending, unique
    int top_k = 5000;
    bool lowercase = true;
    bool collapse_whitespace = true;

    void validate() const;
    int dim() const { return static_cast<int>(orders.size()) * top_k; }
};

struct VocabEntry {
    std::string ngram;
    std::int64_t count = 0;
    int slot = 0; // dense index into the feature vector
};

// Per-order retained n-grams. Order i's block occupies slots
// [i * top_k, i * top_k + entries) in the feature vector.
struct Vocabulary {
    FeaturizerConfig cfg;
    std::vector<std::vector<VocabEntry>> per_order; // aligned with cfg.orders

    int dim() const { return cfg.dim(); }
};

bool operator==(const Vocabulary& a, const Vocabulary& b);

// Lowercases / collapses whitespace per the config flags and strips
// leading/trailing whitespace. Empty result is an error.
std::string normalize_text(const std::string& raw, const FeaturizerConfig& cfg);

// Counts of all contiguous substrings of length `order`, stride 1.
std::map<std::string, std::int64_t> count_ngrams(const std::string& doc, int order);

// Top-k n-grams per order by summed corpus count, ties broken
// lexicographically ascending. Documents are normalized internally.
// n_threads > 1 splits the corpus and merges partial counts; the result is
// identical for any thread count.
Vocabulary build_vocabulary(const std::vector<Document>& corpus, const FeaturizerConfig& cfg,
                            int n_threads = 1);

// Relative frequency per retained n-gram: count in doc divided by the total
// number of n-grams of that order in the doc (retained or not).
std::vector<double> featurize(const Document& doc, const Vocabulary& vocab);

// Feature rows for a whole corpus, one row per document in input order.
Matrix featurize_corpus(const std::vector<Document>& docs, const Vocabulary& vocab);

} // namespace mtlkit

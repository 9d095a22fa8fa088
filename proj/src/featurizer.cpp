#include "mtlkit/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <thread>
#include <unordered_map>

#include "mtlkit/errors.hpp"

namespace mtlkit {

void FeaturizerConfig::validate() const {
    if (orders.empty()) throw ConfigError("featurizer: orders must be non-empty");
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (orders[i] < 1) throw ConfigError("featurizer: orders must be >= 1");
        if (i > 0 && orders[i] <= orders[i - 1])
            throw ConfigError("featurizer: orders must be ascending and unique");
    }
    if (top_k < 1) throw ConfigError("featurizer: top_k must be >= 1");
}

bool operator==(const Vocabulary& a, const Vocabulary& b) {
    if (a.cfg.orders != b.cfg.orders || a.cfg.top_k != b.cfg.top_k) return false;
    if (a.per_order.size() != b.per_order.size()) return false;
    for (std::size_t i = 0; i < a.per_order.size(); ++i) {
        if (a.per_order[i].size() != b.per_order[i].size()) return false;
        for (std::size_t j = 0; j < a.per_order[i].size(); ++j) {
            const VocabEntry& x = a.per_order[i][j];
            const VocabEntry& y = b.per_order[i][j];
            if (x.ngram != y.ngram || x.count != y.count || x.slot != y.slot) return false;
        }
    }
    return true;
}

std::string normalize_text(const std::string& raw, const FeaturizerConfig& cfg) {
    std::string out;
    out.reserve(raw.size());
    bool in_space = true; // suppresses leading whitespace
    for (char c : raw) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (cfg.collapse_whitespace && std::isspace(uc)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
            continue;
        }
        in_space = std::isspace(uc) != 0;
        out.push_back(cfg.lowercase ? static_cast<char>(std::tolower(uc)) : c);
    }
    // Strip trailing whitespace (a single trailing space when collapsing;
    // possibly a run otherwise).
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    if (!cfg.collapse_whitespace) {
        std::size_t start = 0;
        while (start < out.size() && std::isspace(static_cast<unsigned char>(out[start]))) ++start;
        out.erase(0, start);
    }
    if (out.empty()) throw DataFormatError("empty document after normalization");
    return out;
}

std::map<std::string, std::int64_t> count_ngrams(const std::string& doc, int order) {
    if (order < 1) throw ConfigError("count_ngrams: order must be >= 1");
    std::map<std::string, std::int64_t> counts;
    if (doc.size() < static_cast<std::size_t>(order)) return counts;
    const std::size_t total = doc.size() - order + 1;
    for (std::size_t i = 0; i < total; ++i) counts[doc.substr(i, order)] += 1;
    return counts;
}

namespace {

using CountMap = std::unordered_map<std::string, std::int64_t>;

void count_into(const std::string& doc, int order, CountMap& counts) {
    if (doc.size() < static_cast<std::size_t>(order)) return;
    for (std::size_t i = 0; i + order <= doc.size(); ++i) counts[doc.substr(i, order)] += 1;
}

} // namespace

Vocabulary build_vocabulary(const std::vector<Document>& corpus, const FeaturizerConfig& cfg,
                            int n_threads) {
    cfg.validate();
    if (corpus.empty()) throw DataFormatError("build_vocabulary: empty corpus");
    if (n_threads < 1) n_threads = 1;

    std::vector<std::string> normalized(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        normalized[i] = normalize_text(corpus[i].text, cfg);

    Vocabulary vocab;
    vocab.cfg = cfg;
    vocab.per_order.resize(cfg.orders.size());

    for (std::size_t oi = 0; oi < cfg.orders.size(); ++oi) {
        const int order = cfg.orders[oi];
        CountMap merged;
        if (n_threads == 1) {
            for (const std::string& doc : normalized) count_into(doc, order, merged);
        } else {
            std::vector<CountMap> partial(n_threads);
            std::vector<std::thread> workers;
            const std::size_t chunk = (normalized.size() + n_threads - 1) / n_threads;
            for (int w = 0; w < n_threads; ++w) {
                workers.emplace_back([&, w] {
                    const std::size_t lo = w * chunk;
                    const std::size_t hi = std::min(normalized.size(), lo + chunk);
                    for (std::size_t i = lo; i < hi; ++i)
                        count_into(normalized[i], order, partial[w]);
                });
            }
            for (std::thread& t : workers) t.join();
            // Summing integer counts is associative, so the merged map does
            // not depend on the partition.
            for (CountMap& p : partial)
                for (auto& [ngram, c] : p) merged[ngram] += c;
        }

        std::vector<VocabEntry> entries;
        entries.reserve(merged.size());
        for (auto& [ngram, c] : merged) entries.push_back({ngram, c, 0});
        std::sort(entries.begin(), entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
            if (a.count != b.count) return a.count > b.count;
            return a.ngram < b.ngram;
        });
        if (entries.size() > static_cast<std::size_t>(cfg.top_k)) entries.resize(cfg.top_k);
        const int base = static_cast<int>(oi) * cfg.top_k;
        for (std::size_t j = 0; j < entries.size(); ++j)
            entries[j].slot = base + static_cast<int>(j);
        vocab.per_order[oi] = std::move(entries);
    }
    return vocab;
}

std::vector<double> featurize(const Document& doc, const Vocabulary& vocab) {
    const std::string text = normalize_text(doc.text, vocab.cfg);
    std::vector<double> values(vocab.dim(), 0.0);
    for (std::size_t oi = 0; oi < vocab.cfg.orders.size(); ++oi) {
        const int order = vocab.cfg.orders[oi];
        if (text.size() < static_cast<std::size_t>(order)) continue;
        const double total = static_cast<double>(text.size() - order + 1);
        std::unordered_map<std::string_view, int> slot_of;
        slot_of.reserve(vocab.per_order[oi].size());
        for (const VocabEntry& e : vocab.per_order[oi]) slot_of.emplace(e.ngram, e.slot);
        for (std::size_t i = 0; i + order <= text.size(); ++i) {
            auto it = slot_of.find(std::string_view(text).substr(i, order));
            if (it != slot_of.end()) values[it->second] += 1.0;
        }
        const int base = static_cast<int>(oi) * vocab.cfg.top_k;
        for (int j = base; j < base + vocab.cfg.top_k; ++j) values[j] /= total;
    }
    return values;
}

Matrix featurize_corpus(const std::vector<Document>& docs, const Vocabulary& vocab) {
    // Build the ngram -> slot lookups once for the whole corpus.
    std::vector<std::unordered_map<std::string_view, int>> slot_of(vocab.cfg.orders.size());
    for (std::size_t oi = 0; oi < vocab.cfg.orders.size(); ++oi) {
        slot_of[oi].reserve(vocab.per_order[oi].size());
        for (const VocabEntry& e : vocab.per_order[oi]) slot_of[oi].emplace(e.ngram, e.slot);
    }

    Matrix out(static_cast<int>(docs.size()), vocab.dim());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const std::string text = normalize_text(docs[i].text, vocab.cfg);
        double* row = &out.data[i * static_cast<std::size_t>(vocab.dim())];
        for (std::size_t oi = 0; oi < vocab.cfg.orders.size(); ++oi) {
            const int order = vocab.cfg.orders[oi];
            if (text.size() < static_cast<std::size_t>(order)) continue;
            const double total = static_cast<double>(text.size() - order + 1);
            for (std::size_t p = 0; p + order <= text.size(); ++p) {
                auto it = slot_of[oi].find(std::string_view(text).substr(p, order));
                if (it != slot_of[oi].end()) row[it->second] += 1.0;
            }
            const int base = static_cast<int>(oi) * vocab.cfg.top_k;
            for (int j = base; j < base + vocab.cfg.top_k; ++j) row[j] /= total;
        }
    }
    return out;
}

} // namespace mtlkit

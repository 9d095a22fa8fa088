#include "mtlkit/synth.hpp"

#include <algorithm>
#include <cmath>

#include "mtlkit/errors.hpp"
#include "mtlkit/ops.hpp"
#include "mtlkit/rng.hpp"

namespace mtlkit {

namespace {

// 26 letters, space, and three punctuation marks.
const std::string kAlphabet = "abcdefghijklmnopqrstuvwxyz .,!";

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> base_distribution() {
    // Rough English letter frequencies plus whitespace/punctuation mass.
    static const double weights[30] = {
        8.2,  1.5, 2.8, 4.3, 12.7, 2.2, 2.0, 6.1, 7.0, 0.15, 0.77, 4.0, 2.4,
        6.7,  7.5, 1.9, 0.1, 6.0,  6.3, 9.1, 2.8, 1.0, 2.4,  0.15, 2.0, 0.07,
        18.0, 1.5, 1.5, 0.5};
    std::vector<double> dist(weights, weights + 30);
    double total = 0.0;
    for (double w : dist) total += w;
    for (double& w : dist) w /= total;
    return dist;
}

// A stable per-condition distribution, derived from the task name only.
std::vector<double> condition_distribution(const std::string& task_name) {
    Rng rng(splitmix64(fnv1a64(task_name)));
    std::vector<double> dist(kAlphabet.size());
    double total = 0.0;
    for (double& w : dist) {
        w = -std::log(1.0 - uniform_double(rng));
        total += w;
    }
    for (double& w : dist) w /= total;
    return dist;
}

void fisher_yates(std::vector<int>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

} // namespace

const std::string& synth_alphabet() { return kAlphabet; }

void CohortSpec::validate() const {
    if (n_users < 1) throw ConfigError("cohort: n_users must be >= 1");
    if (gender_label_fraction < 0.0 || gender_label_fraction > 1.0)
        throw ConfigError("cohort: gender_label_fraction must be in [0,1]");
    if (doc_length_min < 1.0 || doc_length_mean < doc_length_min)
        throw ConfigError("cohort: need doc_length_mean >= doc_length_min >= 1");
    if (signal_strength < 0.0) throw ConfigError("cohort: signal_strength must be >= 0");
    for (const auto& [name, p] : prevalence) {
        if (tasks.index_of(name) < 0)
            throw ConfigError("cohort: prevalence for unknown task " + name);
        if (p <= 0.0 || p >= 1.0)
            throw ConfigError("cohort: prevalence for " + name + " must be in (0,1)");
    }
    for (const auto& [pair, m] : comorbidity) {
        if (tasks.index_of(pair.first) < 0 || tasks.index_of(pair.second) < 0)
            throw ConfigError("cohort: comorbidity for unknown task pair");
        if (m <= 0.0) throw ConfigError("cohort: comorbidity multipliers must be > 0");
        if (pair.first >= pair.second)
            throw ConfigError("cohort: comorbidity keys must be ordered pairs");
    }
}

double CohortSpec::comorbidity_multiplier(const std::string& a, const std::string& b) const {
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    const auto it = comorbidity.find(key);
    return it == comorbidity.end() ? 1.0 : it->second;
}

std::vector<std::vector<std::int8_t>> sample_labels(const CohortSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int T = spec.tasks.size();
    const int neuro = spec.tasks.index_of("neurotypical");

    // Condition tasks in registry order; neurotypical and demographics are
    // handled separately.
    std::vector<int> conditions;
    for (int t = 0; t < T; ++t) {
        if (t == neuro || spec.tasks.roles[t] == TaskRole::demographic) continue;
        conditions.push_back(t);
    }

    std::vector<std::vector<std::int8_t>> users(spec.n_users);
    for (int u = 0; u < spec.n_users; ++u) {
        Rng rng(derive_seed(seed, 2ULL * static_cast<std::uint64_t>(u)));
        std::vector<std::int8_t>& labels = users[u];
        labels.assign(T, 0);

        std::vector<int> positive;
        for (int t : conditions) {
            const auto it = spec.prevalence.find(spec.tasks.names[t]);
            double p = it == spec.prevalence.end() ? 0.0 : it->second;
            for (int d : positive)
                p *= spec.comorbidity_multiplier(spec.tasks.names[t], spec.tasks.names[d]);
            p = std::clamp(p, 0.0, 1.0 - 1e-9);
            if (uniform_double(rng) < p) {
                labels[t] = 1;
                positive.push_back(t);
            }
        }
        if (neuro >= 0) labels[neuro] = positive.empty() ? 1 : 0;

        for (int t = 0; t < T; ++t) {
            if (spec.tasks.roles[t] != TaskRole::demographic) continue;
            if (uniform_double(rng) < spec.gender_label_fraction)
                labels[t] = uniform_double(rng) < 0.5 ? 1 : 0;
            else
                labels[t] = kMasked;
        }
    }
    return users;
}

std::string generate_text(const std::vector<std::int8_t>& labels, const CohortSpec& spec,
                          std::uint64_t seed) {
    const int T = spec.tasks.size();
    if (static_cast<int>(labels.size()) != T)
        throw ConfigError("generate_text: label vector does not match task registry");
    const int neuro = spec.tasks.index_of("neurotypical");

    std::vector<double> dist = base_distribution();
    std::vector<int> positive;
    for (int t = 0; t < T; ++t) {
        if (t == neuro || spec.tasks.roles[t] == TaskRole::demographic) continue;
        if (labels[t] == 1) positive.push_back(t);
    }
    if (!positive.empty() && spec.signal_strength > 0.0) {
        double s = spec.signal_strength;
        if (s * positive.size() > 0.8) s = 0.8 / static_cast<double>(positive.size());
        const double base_weight = 1.0 - s * static_cast<double>(positive.size());
        for (double& w : dist) w *= base_weight;
        for (int t : positive) {
            const std::vector<double> cond = condition_distribution(spec.tasks.names[t]);
            for (std::size_t i = 0; i < dist.size(); ++i) dist[i] += s * cond[i];
        }
    }

    std::vector<double> cdf(dist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    Rng rng(seed);
    const double extra_mean = spec.doc_length_mean - spec.doc_length_min;
    std::size_t length = static_cast<std::size_t>(spec.doc_length_min);
    if (extra_mean > 0.0) {
        const double p = 1.0 / (extra_mean + 1.0);
        const double u = 1.0 - uniform_double(rng);
        length += static_cast<std::size_t>(std::floor(std::log(u) / std::log(1.0 - p)));
    }

    std::string text;
    text.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double u = uniform_double(rng);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        text.push_back(kAlphabet[static_cast<std::size_t>(it - cdf.begin())]);
    }
    return text;
}

std::vector<SyntheticUser> generate_cohort(const CohortSpec& spec) {
    std::vector<std::vector<std::int8_t>> labels = sample_labels(spec, spec.seed);
    std::vector<SyntheticUser> users(spec.n_users);
    for (int u = 0; u < spec.n_users; ++u) {
        users[u].user_id = "user" + std::to_string(u);
        users[u].labels = std::move(labels[u]);
        users[u].text = generate_text(users[u].labels, spec,
                                      derive_seed(spec.seed, 2ULL * u + 1ULL));
    }
    return users;
}

std::vector<int> make_folds(const std::vector<std::vector<std::int8_t>>& user_labels,
                            const TaskRegistry& tasks, int k, std::uint64_t seed,
                            bool stratify) {
    const int n = static_cast<int>(user_labels.size());
    if (n < k) throw ConfigError("make_folds: need at least k users");
    const int neuro = tasks.index_of("neurotypical");

    std::vector<std::vector<int>> strata(1);
    if (stratify && neuro >= 0) strata.resize(2);
    for (int u = 0; u < n; ++u) {
        const bool is_neuro = stratify && neuro >= 0 && user_labels[u][neuro] == 1;
        strata[is_neuro ? 1 : 0].push_back(u);
    }

    Rng rng(derive_seed(seed, 0xF01D5ULL));
    std::vector<int> fold_of(n, 0);
    int next = 0; // rotating fold cursor shared across strata keeps sizes +-1
    for (std::vector<int>& stratum : strata) {
        fisher_yates(stratum, rng);
        for (int u : stratum) {
            fold_of[u] = next;
            next = (next + 1) % k;
        }
    }
    return fold_of;
}

} // namespace mtlkit

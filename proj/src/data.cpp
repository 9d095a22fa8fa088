#include "mtlkit/data.hpp"

#include "mtlkit/errors.hpp"

namespace mtlkit {

Dataset Dataset::subset(const std::vector<int>& rows) const {
    Dataset out;
    out.tasks = tasks;
    out.features = Matrix(static_cast<int>(rows.size()), features.cols);
    out.labels.resize(labels.size());
    for (auto& col : out.labels) col.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        if (r < 0 || r >= size()) throw DataFormatError("Dataset::subset: row out of range");
        out.user_ids.push_back(user_ids[r]);
        for (int c = 0; c < features.cols; ++c) out.features(static_cast<int>(i), c) = features(r, c);
        for (std::size_t t = 0; t < labels.size(); ++t) out.labels[t].push_back(labels[t][r]);
    }
    return out;
}

Dataset Dataset::with_tasks(const std::vector<int>& task_idx) const {
    Dataset out;
    out.user_ids = user_ids;
    out.features = features;
    for (int t : task_idx) {
        if (t < 0 || t >= tasks.size()) throw DataFormatError("Dataset::with_tasks: bad task index");
        out.labels.push_back(labels[t]);
        out.tasks.names.push_back(tasks.names[t]);
        out.tasks.roles.push_back(tasks.roles[t]);
    }
    return out;
}

FoldSplit split_by_folds(const std::vector<int>& fold_of_row, int k) {
    if (k < 3) throw ConfigError("split_by_folds: need at least 3 folds");
    FoldSplit split;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i) {
        const int f = fold_of_row[i];
        if (f < 0 || f >= k) throw DataFormatError("fold index out of range: " + std::to_string(f));
        if (f == k - 1)
            split.test.push_back(static_cast<int>(i));
        else if (f == k - 2)
            split.dev.push_back(static_cast<int>(i));
        else
            split.train.push_back(static_cast<int>(i));
    }
    return split;
}

} // namespace mtlkit

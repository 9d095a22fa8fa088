#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtlkit/matrix.hpp"
#include "mtlkit/model.hpp"
#include "mtlkit/ops.hpp"

namespace mtlkit {

// Feature rows plus per-task label columns for a set of users. Labels are
// {0, 1, kMasked}, column-major: labels[task][row].
struct Dataset {
    std::vector<std::string> user_ids;
    Matrix features;
    std::vector<std::vector<std::int8_t>> labels;
    TaskRegistry tasks;

    int size() const { return features.rows; }
    int dim() const { return features.cols; }
    Dataset subset(const std::vector<int>& rows) const;
    // Same users, labels restricted to the given task indices (in order).
    Dataset with_tasks(const std::vector<int>& task_idx) const;
};

// Fold roles for the fixed 3/1/1 split: folds 0-2 train, 3 dev, 4 test.
struct FoldSplit {
    std::vector<int> train;
    std::vector<int> dev;
    std::vector<int> test;
};

FoldSplit split_by_folds(const std::vector<int>& fold_of_row, int k = 5);

} // namespace mtlkit

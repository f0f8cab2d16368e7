#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entifilt/corpus.hpp"
#include "entifilt/parallel.hpp"

namespace entifilt {

struct ForestParams {
    int n_trees = 100;
    int max_features = 0;  // 0 -> ceil(sqrt(n_features))
    int min_leaf = 1;
    std::uint64_t seed = 0;
};

// Row-major dense feature matrix.
struct FeatureMatrix {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    const double* row(std::size_t r) const { return values.data() + r * cols; }
};

// feature == -1 marks a leaf carrying the class counts; internal nodes send
// x[feature] <= threshold to the left child.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::int64_t count_related = 0;
    std::int64_t count_unrelated = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at index 0

    Label vote(const double* x) const;
};

class Forest {
public:
    ForestParams params;
    std::size_t n_features = 0;
    std::vector<Tree> trees;

    // Vote fractions (related, unrelated); each is k/n_trees. Ties inside a
    // leaf go to RELATED. Throws DataError on a dimension mismatch.
    std::pair<double, double> predict(const double* x, std::size_t dim) const;

    std::string to_json() const;
    static Forest from_json(const std::string& content);
    void save(const std::string& path) const;
    static Forest load(const std::string& path);
};

// Bagged trees over bootstrap samples with per-node feature subsampling and
// Gini-impurity splits at midpoints of consecutive distinct values. All
// randomness comes from substreams keyed by (seed, tree index), so the
// parallel fit is bit-identical to the serial one.
Forest fit_forest(const FeatureMatrix& x, const std::vector<Label>& y,
                  const ForestParams& params, ExecMode mode = ExecMode::parallel);

std::vector<std::pair<double, double>> predict_forest_batch(
    const Forest& forest, const FeatureMatrix& x,
    ExecMode mode = ExecMode::parallel);

// Out-of-bag accuracy on the training data; the bootstrap draws are
// regenerated from the stored seed. Samples that are in-bag for every tree
// are skipped.
double oob_accuracy(const Forest& forest, const FeatureMatrix& x,
                    const std::vector<Label>& y);

namespace detail {

struct SplitSearchResult {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double parent_impurity = 0.0;
    double weighted_impurity = 0.0;
};

// Exposed for the property tests: any executed split must not raise impurity.
SplitSearchResult find_best_split(const FeatureMatrix& x,
                                  const std::vector<Label>& y,
                                  const std::vector<std::size_t>& samples,
                                  const std::vector<std::size_t>& features,
                                  int min_leaf);

}  // namespace detail

}  // namespace entifilt

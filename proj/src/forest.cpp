#include "entifilt/forest.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "entifilt/errors.hpp"
#include "entifilt/io.hpp"
#include "entifilt/rng.hpp"

namespace entifilt {

namespace {

constexpr std::uint64_t kBootstrapSalt = 0xB0075ULL;
constexpr std::uint64_t kGrowSalt = 0x6120FULL;

double gini_impurity(std::int64_t n_related, std::int64_t n_total) {
    if (n_total == 0) return 0.0;
    double p = static_cast<double>(n_related) / static_cast<double>(n_total);
    return 1.0 - (p * p + (1.0 - p) * (1.0 - p));
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rng.index(n);
    return out;
}

// Partial Fisher-Yates over [0, n_features): the first k slots of a fresh
// index array, then sorted so the split search visits features in a canonical
// order.
std::vector<std::size_t> sample_features(std::size_t n_features, std::size_t k,
                                         Rng& rng) {
    std::vector<std::size_t> idx(n_features);
    for (std::size_t i = 0; i < n_features; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.index(n_features - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct TreeBuilder {
    const FeatureMatrix& x;
    const std::vector<Label>& y;
    int min_leaf;
    std::size_t max_features;
    Rng rng;
    Tree tree;

    int build(std::vector<std::size_t>& samples) {
        std::int64_t n_rel = 0;
        for (std::size_t s : samples)
            if (y[s] == Label::related) ++n_rel;
        auto n = static_cast<std::int64_t>(samples.size());

        int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        bool pure = n_rel == 0 || n_rel == n;
        bool too_small = n < 2 * static_cast<std::int64_t>(min_leaf) || n < 2;
        detail::SplitSearchResult split;
        if (!pure && !too_small) {
            auto feats = sample_features(x.cols, max_features, rng);
            split = detail::find_best_split(x, y, samples, feats, min_leaf);
        }

        if (!split.found) {
            TreeNode& leaf = tree.nodes[node_index];
            leaf.feature = -1;
            leaf.count_related = n_rel;
            leaf.count_unrelated = n - n_rel;
            return node_index;
        }

        std::vector<std::size_t> left, right;
        left.reserve(samples.size());
        for (std::size_t s : samples)
            (x.at(s, split.feature) <= split.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();

        int li = build(left);
        int ri = build(right);
        TreeNode& node = tree.nodes[node_index];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = li;
        node.right = ri;
        return node_index;
    }
};

Tree fit_tree(const FeatureMatrix& x, const std::vector<Label>& y,
              const ForestParams& params, std::size_t max_features,
              std::size_t tree_index) {
    Rng boot(mix_seed(params.seed, tree_index, kBootstrapSalt));
    std::vector<std::size_t> samples = bootstrap_sample(x.rows, boot);
    TreeBuilder builder{x, y, params.min_leaf, max_features,
                        Rng(mix_seed(params.seed, tree_index, kGrowSalt)),
                        Tree{}};
    builder.build(samples);
    return std::move(builder.tree);
}

}  // namespace

namespace detail {

SplitSearchResult find_best_split(const FeatureMatrix& x,
                                  const std::vector<Label>& y,
                                  const std::vector<std::size_t>& samples,
                                  const std::vector<std::size_t>& features,
                                  int min_leaf) {
    SplitSearchResult best;
    auto n = static_cast<std::int64_t>(samples.size());
    std::int64_t parent_rel = 0;
    for (std::size_t s : samples)
        if (y[s] == Label::related) ++parent_rel;
    best.parent_impurity = gini_impurity(parent_rel, n);

    std::vector<std::pair<double, bool>> column(samples.size());
    for (std::size_t f : features) {
        for (std::size_t k = 0; k < samples.size(); ++k)
            column[k] = {x.at(samples[k], f), y[samples[k]] == Label::related};
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::int64_t left_n = 0, left_rel = 0;
        for (std::size_t k = 0; k + 1 < column.size(); ++k) {
            ++left_n;
            if (column[k].second) ++left_rel;
            if (column[k].first == column[k + 1].first) continue;

            std::int64_t right_n = n - left_n;
            if (left_n < min_leaf || right_n < min_leaf) continue;

            double thr = 0.5 * (column[k].first + column[k + 1].first);
            // Guard against the midpoint rounding up onto the next distinct
            // value, which would break the <= partition.
            if (!(thr < column[k + 1].first)) thr = column[k].first;

            double weighted =
                (static_cast<double>(left_n) * gini_impurity(left_rel, left_n) +
                 static_cast<double>(right_n) *
                     gini_impurity(parent_rel - left_rel, right_n)) /
                static_cast<double>(n);
            if (weighted >= best.parent_impurity - 1e-12) continue;
            if (!best.found || weighted < best.weighted_impurity) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.weighted_impurity = weighted;
            }
        }
    }
    return best;
}

}  // namespace detail

Label Tree::vote(const double* x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
        i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                      : nodes[i].right;
    return nodes[i].count_related >= nodes[i].count_unrelated ? Label::related
                                                              : Label::unrelated;
}

std::pair<double, double> Forest::predict(const double* x, std::size_t dim) const {
    if (dim != n_features)
        throw DataError("feature dimension mismatch: forest expects " +
                        std::to_string(n_features) + ", got " + std::to_string(dim));
    std::int64_t rel = 0;
    for (const Tree& t : trees)
        if (t.vote(x) == Label::related) ++rel;
    auto total = static_cast<double>(trees.size());
    return {static_cast<double>(rel) / total,
            static_cast<double>(static_cast<std::int64_t>(trees.size()) - rel) / total};
}

Forest fit_forest(const FeatureMatrix& x, const std::vector<Label>& y,
                  const ForestParams& params, ExecMode mode) {
    if (x.rows < 2) throw DataError("forest fit needs at least 2 samples");
    if (x.rows != y.size()) throw InternalError("feature/label size mismatch");
    bool has_rel = false, has_unrel = false;
    for (Label l : y) (l == Label::related ? has_rel : has_unrel) = true;
    if (!has_rel || !has_unrel)
        throw DataError("forest fit needs both labels present");
    if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
    if (params.min_leaf < 1) throw UsageError("min_leaf must be >= 1");

    std::size_t max_features = params.max_features > 0
        ? static_cast<std::size_t>(params.max_features)
        : static_cast<std::size_t>(
              std::ceil(std::sqrt(static_cast<double>(x.cols))));
    max_features = std::min(max_features, x.cols);
    if (max_features == 0)
        throw UsageError("max_features must be in [1, n_features]");

    Forest forest;
    forest.params = params;
    forest.params.max_features = static_cast<int>(max_features);
    forest.n_features = x.cols;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    parallel_for(forest.trees.size(), mode, [&](std::size_t t) {
        forest.trees[t] = fit_tree(x, y, params, max_features, t);
    });
    return forest;
}

std::vector<std::pair<double, double>> predict_forest_batch(const Forest& forest,
                                                            const FeatureMatrix& x,
                                                            ExecMode mode) {
    std::vector<std::pair<double, double>> out(x.rows);
    parallel_for(x.rows, mode,
                 [&](std::size_t i) { out[i] = forest.predict(x.row(i), x.cols); });
    return out;
}

double oob_accuracy(const Forest& forest, const FeatureMatrix& x,
                    const std::vector<Label>& y) {
    if (x.rows != y.size()) throw InternalError("feature/label size mismatch");
    std::vector<std::int64_t> votes_rel(x.rows, 0), votes_total(x.rows, 0);
    std::vector<char> in_bag(x.rows);
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        Rng boot(mix_seed(forest.params.seed, t, kBootstrapSalt));
        std::fill(in_bag.begin(), in_bag.end(), 0);
        for (std::size_t i = 0; i < x.rows; ++i) in_bag[boot.index(x.rows)] = 1;
        for (std::size_t i = 0; i < x.rows; ++i) {
            if (in_bag[i]) continue;
            ++votes_total[i];
            if (forest.trees[t].vote(x.row(i)) == Label::related) ++votes_rel[i];
        }
    }
    std::int64_t correct = 0, counted = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        if (votes_total[i] == 0) continue;
        ++counted;
        Label pred = 2 * votes_rel[i] >= votes_total[i] ? Label::related
                                                        : Label::unrelated;
        if (pred == y[i]) ++correct;
    }
    if (counted == 0) return 0.0;
    return static_cast<double>(correct) / static_cast<double>(counted);
}

std::string Forest::to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "forest";
    j["params"] = {{"n_trees", params.n_trees},
                   {"max_features", params.max_features},
                   {"min_leaf", params.min_leaf},
                   {"seed", params.seed}};
    j["n_features"] = n_features;
    auto& jtrees = j["trees"] = nlohmann::ordered_json::array();
    for (const Tree& t : trees) {
        nlohmann::ordered_json jnodes = nlohmann::ordered_json::array();
        for (const TreeNode& n : t.nodes) {
            if (n.feature < 0)
                jnodes.push_back({{"cr", n.count_related}, {"cu", n.count_unrelated}});
            else
                jnodes.push_back({{"f", n.feature},
                                  {"t", n.threshold},
                                  {"l", n.left},
                                  {"r", n.right}});
        }
        jtrees.push_back({{"nodes", std::move(jnodes)}});
    }
    return j.dump();
}

Forest Forest::from_json(const std::string& content) {
    auto j = nlohmann::json::parse(content, nullptr, false);
    if (j.is_discarded() || j.value("type", "") != "forest")
        throw DataError("not a forest model file");
    Forest f;
    f.params.n_trees = j["params"].value("n_trees", 0);
    f.params.max_features = j["params"].value("max_features", 0);
    f.params.min_leaf = j["params"].value("min_leaf", 1);
    f.params.seed = j["params"].value("seed", std::uint64_t{0});
    f.n_features = j.value("n_features", std::size_t{0});
    for (const auto& jt : j["trees"]) {
        Tree t;
        for (const auto& jn : jt["nodes"]) {
            TreeNode n;
            if (jn.contains("f")) {
                n.feature = jn["f"].get<int>();
                n.threshold = jn["t"].get<double>();
                n.left = jn["l"].get<int>();
                n.right = jn["r"].get<int>();
            } else {
                n.count_related = jn["cr"].get<std::int64_t>();
                n.count_unrelated = jn["cu"].get<std::int64_t>();
            }
            t.nodes.push_back(n);
        }
        f.trees.push_back(std::move(t));
    }
    return f;
}

void Forest::save(const std::string& path) const { atomic_write(path, to_json()); }

Forest Forest::load(const std::string& path) {
    return from_json(read_file(path));
}

}  // namespace entifilt

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "entifilt/corpus.hpp"
#include "entifilt/parallel.hpp"
#include "entifilt/textprep.hpp"

namespace entifilt {

struct TermStats {
    std::int64_t df = 0;           // messages containing the term
    std::int64_t tf_related = 0;   // total occurrences in RELATED messages
    std::int64_t tf_unrelated = 0;
    double gini = 0.0;             // sum_c P(c|term)^2, in [0.5, 1] for 2 classes
    double idf = 0.0;              // ln(N / df)
};

using TermStatsMap = std::map<std::string, TermStats>;

// Term statistics over the labeled training messages. Unlabeled messages are
// skipped; P(c|term) is computed from term counts, not document counts.
// Throws DataError when the training data does not contain both labels.
TermStatsMap compute_term_stats(const Dataset& train, const Preprocessor& prep,
                                int n_max, ExecMode mode = ExecMode::parallel);

// tf * idf * gini. Out-of-vocabulary terms weigh 0 at the call sites.
double term_weight(std::int64_t message_tf, const TermStats& stats);

// Discriminant vocabulary: terms ordered by descending gini, ties broken by
// ascending term string.
class Vocabulary {
public:
    Vocabulary() = default;

    const std::vector<std::string>& terms() const { return order_; }
    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }

    const TermStats* find(const std::string& term) const;
    bool contains(const std::string& term) const { return find(term) != nullptr; }

    std::int64_t train_messages() const { return n_train_; }
    std::uint64_t prep_hash() const { return prep_hash_; }

    // JSONL with a leading header record carrying N and the prep-config hash.
    std::string to_jsonl() const;
    static Vocabulary from_jsonl(const std::string& content);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    friend Vocabulary select_vocabulary(const TermStatsMap&, std::int64_t,
                                        std::int64_t, std::size_t, std::uint64_t);

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, TermStats> stats_;
    std::int64_t n_train_ = 0;
    std::uint64_t prep_hash_ = 0;
};

// Drops terms below min_df, keeps the top_k by gini. Metadata tokens bypass
// the top_k cap so the author/entity/language signal always survives.
Vocabulary select_vocabulary(const TermStatsMap& stats, std::int64_t n_train,
                             std::int64_t min_df, std::size_t top_k,
                             std::uint64_t prep_hash);

// Sparse term->weight map with no zero entries.
struct WeightedVector {
    std::map<std::string, double> weights;

    bool empty() const { return weights.empty(); }
    double dot(const WeightedVector& other) const;
    double norm() const;
    void add(const WeightedVector& other);
    void scale(double k);
};

double cosine_similarity(const WeightedVector& a, const WeightedVector& b);

// Message terms restricted to the vocabulary, weighted tf*idf*gini; metadata
// tokens enter with tf = 1. A message with no in-vocabulary terms yields an
// empty vector.
WeightedVector vectorize(const Message& msg, const Vocabulary& vocab,
                         const Preprocessor& prep, int n_max);

std::vector<WeightedVector> vectorize_batch(const Dataset& dataset,
                                            const Vocabulary& vocab,
                                            const Preprocessor& prep, int n_max,
                                            ExecMode mode = ExecMode::parallel);

}  // namespace entifilt

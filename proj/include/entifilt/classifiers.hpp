#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "entifilt/corpus.hpp"
#include "entifilt/forest.hpp"
#include "entifilt/parallel.hpp"
#include "entifilt/weighting.hpp"

namespace entifilt {

struct Prediction {
    std::string message_id;
    double score_related = 0.5;
    double score_unrelated = 0.5;
    Label chosen = Label::related;

    double score(Label l) const {
        return l == Label::related ? score_related : score_unrelated;
    }
};

// Normalizes the two raw scores to sum 1 and applies the global tie rule
// (ties choose RELATED). Two zero scores fall back to (0.5, 0.5).
Prediction make_prediction(std::string id, double raw_related, double raw_unrelated);

// One system's outputs, one prediction per message.
class SystemRun {
public:
    SystemRun() = default;
    explicit SystemRun(std::string system) : system_(std::move(system)) {}

    const std::string& system() const { return system_; }
    void set_system(std::string s) { system_ = std::move(s); }

    void add(Prediction p);  // rejects duplicate ids
    const std::vector<Prediction>& predictions() const { return preds_; }
    std::size_t size() const { return preds_.size(); }
    const Prediction* find(const std::string& id) const;

    // Extra header fields carried through to the output file (strategy,
    // thresholds, input run names for merged runs).
    std::map<std::string, std::string> header_extras;

    std::string to_jsonl(const std::string& config_hash = "") const;
    static SystemRun from_jsonl(const std::string& content, const std::string& name_hint = "");
    void save(const std::string& path, const std::string& config_hash = "") const;
    static SystemRun load(const std::string& path);

private:
    std::string system_;
    std::vector<Prediction> preds_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---- cosine (TF-IDF-Gini) ----

struct CosineModel {
    WeightedVector bag_related;    // L2-normalized class bag
    WeightedVector bag_unrelated;

    std::string to_json(const std::string& config_hash) const;
    static CosineModel from_json(const std::string& content, std::string* config_hash);
};

// Component-wise sum of the class members' vectors, L2-normalized. Throws
// DataError when a class has no messages.
CosineModel train_cosine(const Dataset& train, const Vocabulary& vocab,
                         const Preprocessor& prep, int n_max,
                         ExecMode mode = ExecMode::parallel);

Prediction predict_cosine(const CosineModel& model, const Message& msg,
                          const Vocabulary& vocab, const Preprocessor& prep,
                          int n_max);

// ---- KNN on discriminant token sets ----

struct KnnEntry {
    std::string id;
    std::vector<std::string> tokens;  // sorted unique, all in the vocabulary
    Label label = Label::related;
};

struct KnnIndex {
    std::vector<KnnEntry> entries;
    int k = 5;

    std::string to_jsonl(const std::string& config_hash) const;
    static KnnIndex from_jsonl(const std::string& content, std::string* config_hash);
};

// The discriminant token set: vocabulary terms present in the message plus
// the author and entity metadata tokens (when in the vocabulary).
std::vector<std::string> knn_token_set(const Message& msg, const Vocabulary& vocab,
                                       const Preprocessor& prep, int n_max);

KnnIndex build_knn_index(const Dataset& train, const Vocabulary& vocab,
                         const Preprocessor& prep, int n_max, int k,
                         ExecMode mode = ExecMode::parallel);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Similarity-weighted vote of the K nearest training messages; neighbor ties
// at equal similarity break by ascending message id. An all-zero similarity
// sum yields (0.5, 0.5).
Prediction predict_knn(const KnnIndex& index, const Message& msg,
                       const Vocabulary& vocab, const Preprocessor& prep,
                       int n_max);

// ---- KBA-style feature classifier ----

// Per-entity time-ordered message counts for the burst feature.
class EntityStream {
public:
    static EntityStream from_dataset(const Dataset& ds);

    // Messages of the entity in the 24h window ending at t, divided by the
    // stream's mean 24h count, clamped to [0, 10].
    double burst_ratio(const std::string& entity_id, std::int64_t t) const;

private:
    std::map<std::string, std::vector<std::int64_t>> times_;  // sorted
};

inline constexpr std::size_t kKbaFeatureCount = 15;

enum KbaFeature : std::size_t {
    kTokenCount = 0,
    kHashtagCount,
    kMentionCount,
    kUrlCount,
    kUppercaseFraction,
    kCanonicalNameTf,
    kAliasTf,
    kFirstMentionPosition,
    kProfileJaccard,
    kProfileCosine,
    kProfileTokenOverlap,
    kAliasMatchCount,
    kHourOfDay,
    kDayOfWeek,
    kBurstRatio,
};

std::array<double, kKbaFeatureCount> extract_kba_features(
    const Message& msg, const EntityProfile& profile, const EntityStream& stream,
    const Preprocessor& prep);

struct KbaModel {
    std::map<std::string, Forest> forests;  // keyed by category

    std::string to_json(const std::string& config_hash) const;
    static KbaModel from_json(const std::string& content, std::string* config_hash);
};

// One forest per entity category; a category whose examples carry a single
// label is a fatal error. Per-category seeds derive from (seed, category).
KbaModel train_kba(const Dataset& train,
                   const std::map<std::string, EntityProfile>& profiles,
                   const EntityStream& stream, const Preprocessor& prep,
                   const ForestParams& params, ExecMode mode = ExecMode::parallel);

Prediction predict_kba(const KbaModel& model, const Message& msg,
                       const EntityProfile& profile, const EntityStream& stream,
                       const Preprocessor& prep);

// ---- batch drivers (parallel kernels with a serial reference mode) ----

SystemRun predict_cosine_batch(const CosineModel& model, const Dataset& input,
                               const Vocabulary& vocab, const Preprocessor& prep,
                               int n_max, ExecMode mode = ExecMode::parallel);

SystemRun predict_knn_batch(const KnnIndex& index, const Dataset& input,
                            const Vocabulary& vocab, const Preprocessor& prep,
                            int n_max, ExecMode mode = ExecMode::parallel);

SystemRun predict_kba_batch(const KbaModel& model, const Dataset& input,
                            const std::map<std::string, EntityProfile>& profiles,
                            const EntityStream& stream, const Preprocessor& prep,
                            ExecMode mode = ExecMode::parallel);

}  // namespace entifilt

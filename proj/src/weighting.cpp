#include "entifilt/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "entifilt/errors.hpp"
#include "entifilt/io.hpp"

namespace entifilt {

using nlohmann::ordered_json;

namespace {

struct RawCounts3 {
    std::int64_t df = 0;
    std::int64_t tf[2] = {0, 0};
};

using PartialMap = std::unordered_map<std::string, RawCounts3>;

void accumulate_message(const Message& msg, const Preprocessor& prep, int n_max,
                        PartialMap& into) {
    std::unordered_map<std::string, std::int64_t> tf;
    for (std::string& t : message_terms(msg, prep, n_max)) ++tf[std::move(t)];
    int cls = *msg.gold_label == Label::related ? 0 : 1;
    for (auto& [term, count] : tf) {
        RawCounts3& rc = into[term];
        rc.df += 1;
        rc.tf[cls] += count;
    }
}

}  // namespace

TermStatsMap compute_term_stats(const Dataset& train, const Preprocessor& prep,
                                int n_max, ExecMode mode) {
    std::vector<std::size_t> labeled;
    std::int64_t n_related = 0, n_unrelated = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& gl = train.at(i).gold_label;
        if (!gl) continue;
        labeled.push_back(i);
        (*gl == Label::related ? n_related : n_unrelated) += 1;
    }
    if (n_related == 0 || n_unrelated == 0)
        throw DataError("term statistics need training messages of both labels");

    // Counts are integers, so merging per-thread partials is order-independent
    // and the parallel path reproduces the serial fold exactly.
    PartialMap merged;
    if (mode == ExecMode::serial) {
        for (std::size_t i : labeled)
            accumulate_message(train.at(i), prep, n_max, merged);
    } else {
        int workers = std::max(1, max_threads());
        std::vector<PartialMap> partial(static_cast<std::size_t>(workers));
        std::size_t chunk =
            (labeled.size() + static_cast<std::size_t>(workers) - 1) /
            static_cast<std::size_t>(workers);
        parallel_for(static_cast<std::size_t>(workers), mode, [&](std::size_t w) {
            std::size_t lo = w * chunk;
            std::size_t hi = std::min(labeled.size(), lo + chunk);
            for (std::size_t k = lo; k < hi; ++k)
                accumulate_message(train.at(labeled[k]), prep, n_max, partial[w]);
        });
        for (PartialMap& pm : partial)
            for (auto& [term, rc] : pm) {
                RawCounts3& dst = merged[term];
                dst.df += rc.df;
                dst.tf[0] += rc.tf[0];
                dst.tf[1] += rc.tf[1];
            }
    }

    double n_docs = static_cast<double>(labeled.size());
    TermStatsMap out;
    for (auto& [term, rc] : merged) {
        TermStats ts;
        ts.df = rc.df;
        ts.tf_related = rc.tf[0];
        ts.tf_unrelated = rc.tf[1];
        double total = static_cast<double>(rc.tf[0] + rc.tf[1]);
        double pr = static_cast<double>(rc.tf[0]) / total;
        double pu = static_cast<double>(rc.tf[1]) / total;
        ts.gini = pr * pr + pu * pu;
        ts.idf = std::log(n_docs / static_cast<double>(rc.df));
        out.emplace(term, ts);
    }
    return out;
}

double term_weight(std::int64_t message_tf, const TermStats& stats) {
    return static_cast<double>(message_tf) * stats.idf * stats.gini;
}

const TermStats* Vocabulary::find(const std::string& term) const {
    auto it = stats_.find(term);
    return it == stats_.end() ? nullptr : &it->second;
}

Vocabulary select_vocabulary(const TermStatsMap& stats, std::int64_t n_train,
                             std::int64_t min_df, std::size_t top_k,
                             std::uint64_t prep_hash) {
    if (top_k < 1) throw UsageError("top_k must be >= 1");

    std::vector<const std::pair<const std::string, TermStats>*> kept;
    kept.reserve(stats.size());
    for (const auto& entry : stats)
        if (entry.second.df >= min_df) kept.push_back(&entry);

    std::sort(kept.begin(), kept.end(), [](const auto* a, const auto* b) {
        if (a->second.gini != b->second.gini) return a->second.gini > b->second.gini;
        return a->first < b->first;
    });

    Vocabulary v;
    v.n_train_ = n_train;
    v.prep_hash_ = prep_hash;
    std::size_t ranked = 0;
    for (const auto* entry : kept) {
        bool meta = is_metadata_token(entry->first);
        if (!meta) {
            if (ranked >= top_k) continue;
            ++ranked;
        }
        v.order_.push_back(entry->first);
        v.stats_.emplace(entry->first, entry->second);
    }
    return v;
}

std::string Vocabulary::to_jsonl() const {
    std::string out;
    ordered_json header;
    header["type"] = "vocabulary";
    header["n_train"] = n_train_;
    header["prep_hash"] = hash_hex(prep_hash_);
    header["terms"] = order_.size();
    out += header.dump();
    out += '\n';
    for (const std::string& term : order_) {
        const TermStats& ts = stats_.at(term);
        ordered_json j;
        j["term"] = term;
        j["df"] = ts.df;
        j["tf"] = {{"RELATED", ts.tf_related}, {"UNRELATED", ts.tf_unrelated}};
        j["gini"] = ts.gini;
        j["idf"] = ts.idf;
        out += j.dump();
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::from_jsonl(const std::string& content) {
    Vocabulary v;
    std::istringstream in(content);
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("vocabulary line " + std::to_string(lineno) +
                            ": bad JSON");
        if (!saw_header) {
            if (j.value("type", "") != "vocabulary")
                throw DataError("vocabulary file missing header record");
            v.n_train_ = j.value("n_train", std::int64_t{0});
            v.prep_hash_ = std::stoull(j.value("prep_hash", "0"), nullptr, 16);
            saw_header = true;
            continue;
        }
        TermStats ts;
        std::string term = j.at("term").get<std::string>();
        ts.df = j.at("df").get<std::int64_t>();
        ts.tf_related = j.at("tf").at("RELATED").get<std::int64_t>();
        ts.tf_unrelated = j.at("tf").at("UNRELATED").get<std::int64_t>();
        ts.gini = j.at("gini").get<double>();
        ts.idf = j.at("idf").get<double>();
        v.order_.push_back(term);
        v.stats_.emplace(std::move(term), ts);
    }
    if (!saw_header) throw DataError("vocabulary file is empty");
    return v;
}

void Vocabulary::save(const std::string& path) const {
    atomic_write(path, to_jsonl());
}

Vocabulary Vocabulary::load(const std::string& path) {
    return from_jsonl(read_file(path));
}

double WeightedVector::dot(const WeightedVector& other) const {
    const auto& small = weights.size() <= other.weights.size() ? *this : other;
    const auto& big = weights.size() <= other.weights.size() ? other : *this;
    double sum = 0.0;
    for (const auto& [term, w] : small.weights) {
        auto it = big.weights.find(term);
        if (it != big.weights.end()) sum += w * it->second;
    }
    return sum;
}

double WeightedVector::norm() const {
    double sum = 0.0;
    for (const auto& [term, w] : weights) sum += w * w;
    return std::sqrt(sum);
}

void WeightedVector::add(const WeightedVector& other) {
    for (const auto& [term, w] : other.weights) weights[term] += w;
}

void WeightedVector::scale(double k) {
    for (auto& [term, w] : weights) w *= k;
}

double cosine_similarity(const WeightedVector& a, const WeightedVector& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

WeightedVector vectorize(const Message& msg, const Vocabulary& vocab,
                         const Preprocessor& prep, int n_max) {
    std::map<std::string, std::int64_t> tf;
    for (std::string& t : ngrams(prep.normalize(msg.text, PrepMode::cosine_knn), n_max))
        ++tf[std::move(t)];
    for (std::string& t : metadata_tokens(msg)) tf[std::move(t)] = 1;

    WeightedVector v;
    for (const auto& [term, count] : tf) {
        const TermStats* ts = vocab.find(term);
        if (!ts) continue;
        double w = term_weight(count, *ts);
        if (w != 0.0) v.weights.emplace(term, w);
    }
    return v;
}

std::vector<WeightedVector> vectorize_batch(const Dataset& dataset,
                                            const Vocabulary& vocab,
                                            const Preprocessor& prep, int n_max,
                                            ExecMode mode) {
    std::vector<WeightedVector> out(dataset.size());
    parallel_for(dataset.size(), mode, [&](std::size_t i) {
        out[i] = vectorize(dataset.at(i), vocab, prep, n_max);
    });
    return out;
}

}  // namespace entifilt

#include "entifilt/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

#include "entifilt/errors.hpp"
#include "entifilt/io.hpp"
#include "entifilt/rng.hpp"
#include "entifilt/textprep.hpp"

namespace entifilt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kKbaCategorySalt = 0xCA7E60ULL;

std::vector<std::string> split_lines(const std::string& content) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(content);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

json parse_record(const std::string& line, const char* what) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DataError(std::string(what) + ": malformed JSON record");
    return j;
}

}  // namespace

Prediction make_prediction(std::string id, double raw_related, double raw_unrelated) {
    if (raw_related < 0.0 || raw_unrelated < 0.0)
        throw InternalError("negative raw score for message " + id);
    Prediction p;
    p.message_id = std::move(id);
    double sum = raw_related + raw_unrelated;
    if (sum > 0.0) {
        p.score_related = raw_related / sum;
        p.score_unrelated = raw_unrelated / sum;
    }
    p.chosen = p.score_related >= p.score_unrelated ? Label::related : Label::unrelated;
    return p;
}

void SystemRun::add(Prediction p) {
    auto [it, inserted] = index_.emplace(p.message_id, preds_.size());
    if (!inserted)
        throw DataError("duplicate prediction for message " + p.message_id);
    preds_.push_back(std::move(p));
}

const Prediction* SystemRun::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &preds_[it->second];
}

std::string SystemRun::to_jsonl(const std::string& config_hash) const {
    ordered_json header;
    header["type"] = "header";
    header["system"] = system_;
    std::string hash = config_hash;
    if (hash.empty()) {
        auto it = header_extras.find("config_hash");
        if (it != header_extras.end()) hash = it->second;
    }
    header["config_hash"] = hash;
    for (const auto& [k, v] : header_extras)
        if (k != "config_hash") header[k] = v;

    std::string out = header.dump();
    out.push_back('\n');
    for (const Prediction& p : preds_) {
        ordered_json rec;
        rec["id"] = p.message_id;
        rec["system"] = system_;
        rec["scores"] = ordered_json{{"RELATED", p.score_related},
                                     {"UNRELATED", p.score_unrelated}};
        rec["chosen"] = label_name(p.chosen);
        out += rec.dump();
        out.push_back('\n');
    }
    return out;
}

SystemRun SystemRun::from_jsonl(const std::string& content, const std::string& name_hint) {
    auto lines = split_lines(content);
    if (lines.empty())
        throw DataError("run file" + (name_hint.empty() ? "" : " " + name_hint) + " is empty");
    json header = parse_record(lines[0], "run header");
    if (header.value("type", "") != "header")
        throw DataError("run file must start with a header record");

    SystemRun run(header.value("system", ""));
    for (auto it = header.begin(); it != header.end(); ++it) {
        if (it.key() == "type" || it.key() == "system") continue;
        if (it->is_string()) run.header_extras[it.key()] = it->get<std::string>();
    }

    for (std::size_t i = 1; i < lines.size(); ++i) {
        json rec = parse_record(lines[i], "run record");
        if (!rec.contains("id") || !rec.contains("scores") || !rec.contains("chosen"))
            throw DataError("run record missing id/scores/chosen");
        const json& scores = rec["scores"];
        if (!scores.contains("RELATED") || !scores.contains("UNRELATED"))
            throw DataError("run record must score both labels");
        Prediction p;
        p.message_id = rec["id"].get<std::string>();
        p.score_related = scores["RELATED"].get<double>();
        p.score_unrelated = scores["UNRELATED"].get<double>();
        auto chosen = parse_label(rec["chosen"].get<std::string>());
        if (!chosen) throw DataError("run record with unknown chosen label");
        p.chosen = *chosen;
        if (p.score_related < 0.0 || p.score_related > 1.0 ||
            p.score_unrelated < 0.0 || p.score_unrelated > 1.0 ||
            std::abs(p.score_related + p.score_unrelated - 1.0) > 1e-6)
            throw DataError("run scores for " + p.message_id + " are not normalized");
        run.add(std::move(p));
    }
    return run;
}

void SystemRun::save(const std::string& path, const std::string& config_hash) const {
    atomic_write(path, to_jsonl(config_hash));
}

SystemRun SystemRun::load(const std::string& path) {
    return from_jsonl(read_file(path), path);
}

// ---- cosine ----

std::string CosineModel::to_json(const std::string& config_hash) const {
    ordered_json j;
    j["type"] = "cosine";
    j["config_hash"] = config_hash;
    ordered_json rel, unrel;
    for (const auto& [term, w] : bag_related.weights) rel[term] = w;
    for (const auto& [term, w] : bag_unrelated.weights) unrel[term] = w;
    j["related"] = std::move(rel);
    j["unrelated"] = std::move(unrel);
    return j.dump(2) + "\n";
}

CosineModel CosineModel::from_json(const std::string& content, std::string* config_hash) {
    json j = json::parse(content, nullptr, false);
    if (j.is_discarded() || j.value("type", "") != "cosine")
        throw DataError("not a cosine model file");
    if (config_hash) *config_hash = j.value("config_hash", "");
    CosineModel m;
    for (auto it = j.at("related").begin(); it != j.at("related").end(); ++it)
        m.bag_related.weights[it.key()] = it->get<double>();
    for (auto it = j.at("unrelated").begin(); it != j.at("unrelated").end(); ++it)
        m.bag_unrelated.weights[it.key()] = it->get<double>();
    return m;
}

CosineModel train_cosine(const Dataset& train, const Vocabulary& vocab,
                         const Preprocessor& prep, int n_max, ExecMode mode) {
    std::vector<WeightedVector> vecs = vectorize_batch(train, vocab, prep, n_max, mode);
    CosineModel model;
    std::size_t n_related = 0, n_unrelated = 0;
    // Accumulation stays in message order: float addition is not associative.
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& gold = train.at(i).gold_label;
        if (!gold) continue;
        if (*gold == Label::related) {
            model.bag_related.add(vecs[i]);
            ++n_related;
        } else {
            model.bag_unrelated.add(vecs[i]);
            ++n_unrelated;
        }
    }
    if (n_related == 0 || n_unrelated == 0)
        throw DataError("cosine training needs examples of both labels");
    double nr = model.bag_related.norm();
    double nu = model.bag_unrelated.norm();
    if (nr > 0.0) model.bag_related.scale(1.0 / nr);
    if (nu > 0.0) model.bag_unrelated.scale(1.0 / nu);
    return model;
}

Prediction predict_cosine(const CosineModel& model, const Message& msg,
                          const Vocabulary& vocab, const Preprocessor& prep,
                          int n_max) {
    WeightedVector v = vectorize(msg, vocab, prep, n_max);
    double sr = cosine_similarity(v, model.bag_related);
    double su = cosine_similarity(v, model.bag_unrelated);
    return make_prediction(msg.id, sr, su);
}

// ---- KNN ----

std::vector<std::string> knn_token_set(const Message& msg, const Vocabulary& vocab,
                                       const Preprocessor& prep, int n_max) {
    std::vector<std::string> tokens =
        ngrams(prep.normalize(msg.text, PrepMode::cosine_knn), n_max);
    for (std::string& t : metadata_tokens_knn(msg)) tokens.push_back(std::move(t));
    std::vector<std::string> kept;
    for (std::string& t : tokens)
        if (vocab.contains(t)) kept.push_back(std::move(t));
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    return kept;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0, ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        int cmp = a[ia].compare(b[ib]);
        if (cmp == 0) {
            ++inter;
            ++ia;
            ++ib;
        } else if (cmp < 0) {
            ++ia;
        } else {
            ++ib;
        }
    }
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

KnnIndex build_knn_index(const Dataset& train, const Vocabulary& vocab,
                         const Preprocessor& prep, int n_max, int k, ExecMode mode) {
    if (k < 1) throw UsageError("K must be at least 1");
    std::vector<KnnEntry> slots(train.size());
    parallel_for(train.size(), mode, [&](std::size_t i) {
        const Message& msg = train.at(i);
        if (!msg.gold_label) return;
        slots[i].id = msg.id;
        slots[i].tokens = knn_token_set(msg, vocab, prep, n_max);
        slots[i].label = *msg.gold_label;
    });
    KnnIndex index;
    index.k = k;
    for (auto& e : slots)
        if (!e.id.empty()) index.entries.push_back(std::move(e));
    // Canonical entry order; neighbor selection never depends on it.
    std::sort(index.entries.begin(), index.entries.end(),
              [](const KnnEntry& a, const KnnEntry& b) { return a.id < b.id; });
    if (index.entries.empty()) throw DataError("KNN index has no labeled entries");
    return index;
}

Prediction predict_knn(const KnnIndex& index, const Message& msg,
                       const Vocabulary& vocab, const Preprocessor& prep, int n_max) {
    std::vector<std::string> tokens = knn_token_set(msg, vocab, prep, n_max);
    std::vector<std::pair<double, std::size_t>> sims(index.entries.size());
    for (std::size_t i = 0; i < index.entries.size(); ++i)
        sims[i] = {jaccard(tokens, index.entries[i].tokens), i};

    std::size_t k = std::min<std::size_t>(index.k, sims.size());
    // Highest similarity first; equal similarities break by ascending id.
    auto better = [&](const std::pair<double, std::size_t>& a,
                      const std::pair<double, std::size_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return index.entries[a.second].id < index.entries[b.second].id;
    };
    std::partial_sort(sims.begin(), sims.begin() + k, sims.end(), better);

    double sum_related = 0.0, sum_unrelated = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const KnnEntry& e = index.entries[sims[i].second];
        (e.label == Label::related ? sum_related : sum_unrelated) += sims[i].first;
    }
    return make_prediction(msg.id, sum_related, sum_unrelated);
}

std::string KnnIndex::to_jsonl(const std::string& config_hash) const {
    ordered_json header;
    header["type"] = "knn_index";
    header["config_hash"] = config_hash;
    header["k"] = k;
    header["entries"] = entries.size();
    std::string out = header.dump();
    out.push_back('\n');
    for (const KnnEntry& e : entries) {
        ordered_json rec;
        rec["id"] = e.id;
        rec["label"] = label_name(e.label);
        rec["tokens"] = e.tokens;
        out += rec.dump();
        out.push_back('\n');
    }
    return out;
}

KnnIndex KnnIndex::from_jsonl(const std::string& content, std::string* config_hash) {
    auto lines = split_lines(content);
    if (lines.empty()) throw DataError("KNN index file is empty");
    json header = parse_record(lines[0], "knn header");
    if (header.value("type", "") != "knn_index")
        throw DataError("not a KNN index file");
    if (config_hash) *config_hash = header.value("config_hash", "");
    KnnIndex index;
    index.k = header.value("k", 5);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        json rec = parse_record(lines[i], "knn entry");
        KnnEntry e;
        e.id = rec.at("id").get<std::string>();
        auto label = parse_label(rec.at("label").get<std::string>());
        if (!label) throw DataError("knn entry with unknown label");
        e.label = *label;
        e.tokens = rec.at("tokens").get<std::vector<std::string>>();
        index.entries.push_back(std::move(e));
    }
    if (static_cast<std::size_t>(header.value("entries", 0)) != index.entries.size())
        throw DataError("KNN index entry count does not match header");
    return index;
}

// ---- KBA features ----

EntityStream EntityStream::from_dataset(const Dataset& ds) {
    EntityStream s;
    for (const Message& m : ds.messages()) s.times_[m.entity_id].push_back(m.timestamp);
    for (auto& [_, v] : s.times_) std::sort(v.begin(), v.end());
    return s;
}

double EntityStream::burst_ratio(const std::string& entity_id, std::int64_t t) const {
    auto it = times_.find(entity_id);
    if (it == times_.end() || it->second.empty()) return 0.0;
    const std::vector<std::int64_t>& ts = it->second;
    auto lo = std::upper_bound(ts.begin(), ts.end(), t - 86400);
    auto hi = std::upper_bound(ts.begin(), ts.end(), t);
    double window = static_cast<double>(hi - lo);
    double span_days = static_cast<double>(ts.back() - ts.front()) / 86400.0;
    double mean = static_cast<double>(ts.size()) / std::max(1.0, span_days);
    double ratio = window / mean;
    return std::clamp(ratio, 0.0, 10.0);
}

namespace {

// Occurrences of `name` as a contiguous token run; every start position counts.
int count_token_run(const std::vector<std::string>& tokens,
                    const std::vector<std::string>& name, std::size_t* first_pos) {
    if (name.empty() || tokens.size() < name.size()) return 0;
    int count = 0;
    for (std::size_t i = 0; i + name.size() <= tokens.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < name.size(); ++j)
            if (tokens[i + j] != name[j]) {
                match = false;
                break;
            }
        if (match) {
            if (count == 0 && first_pos) *first_pos = i;
            ++count;
        }
    }
    return count;
}

double binary_cosine(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const std::string& t : a) inter += b.count(t);
    return static_cast<double>(inter) /
           (std::sqrt(static_cast<double>(a.size())) * std::sqrt(static_cast<double>(b.size())));
}

}  // namespace

std::array<double, kKbaFeatureCount> extract_kba_features(
    const Message& msg, const EntityProfile& profile, const EntityStream& stream,
    const Preprocessor& prep) {
    std::array<double, kKbaFeatureCount> f{};

    std::vector<std::string> tokens = prep.normalize(msg.text, PrepMode::kba);
    std::vector<std::string> plain = Preprocessor::plain_tokens(msg.text);
    RawCounts raw = scan_raw(msg.text);

    f[kTokenCount] = static_cast<double>(tokens.size());
    f[kHashtagCount] = raw.hashtags;
    f[kMentionCount] = raw.mentions;
    f[kUrlCount] = raw.urls;
    f[kUppercaseFraction] =
        raw.codepoints > 0 ? static_cast<double>(raw.uppercase) / raw.codepoints : 0.0;

    std::vector<std::string> canonical = Preprocessor::plain_tokens(profile.canonical_name);
    std::size_t first = plain.size();
    std::size_t pos = 0;
    int canonical_tf = count_token_run(plain, canonical, &pos);
    if (canonical_tf > 0) first = std::min(first, pos);
    f[kCanonicalNameTf] = canonical_tf;

    int alias_tf = 0, alias_matches = 0;
    for (const std::string& alias : profile.aliases) {
        int c = count_token_run(plain, Preprocessor::plain_tokens(alias), &pos);
        if (c > 0) {
            alias_tf += c;
            ++alias_matches;
            first = std::min(first, pos);
        }
    }
    f[kAliasTf] = alias_tf;
    f[kFirstMentionPosition] =
        first < plain.size() ? static_cast<double>(first) / plain.size() : 1.0;

    std::set<std::string> msg_set(tokens.begin(), tokens.end());
    std::vector<std::string> ptoks = prep.normalize(profile.profile_text, PrepMode::kba);
    std::set<std::string> profile_set(ptoks.begin(), ptoks.end());

    std::size_t inter = 0;
    for (const std::string& t : msg_set) inter += profile_set.count(t);
    std::size_t uni = msg_set.size() + profile_set.size() - inter;
    f[kProfileJaccard] = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
    f[kProfileCosine] = binary_cosine(msg_set, profile_set);

    // The overlap count also honors curated homepage tokens; Jaccard/cosine
    // stay on the profile text alone so identical texts score exactly 1.
    std::set<std::string> wide = profile_set;
    for (const std::string& t : profile.homepage_tokens) wide.insert(to_lower_utf8(t));
    std::size_t overlap = 0;
    for (const std::string& t : msg_set) overlap += wide.count(t);
    f[kProfileTokenOverlap] = static_cast<double>(overlap);
    f[kAliasMatchCount] = alias_matches;

    std::int64_t day_sec = ((msg.timestamp % 86400) + 86400) % 86400;
    f[kHourOfDay] = static_cast<double>(day_sec / 3600) / 23.0;
    std::int64_t epoch_day = msg.timestamp / 86400 - (msg.timestamp % 86400 < 0 ? 1 : 0);
    f[kDayOfWeek] = static_cast<double>((epoch_day % 7 + 7 + 3) % 7) / 6.0;  // Monday = 0
    f[kBurstRatio] = stream.burst_ratio(msg.entity_id, msg.timestamp) / 10.0;
    return f;
}

// ---- KBA model ----

std::string KbaModel::to_json(const std::string& config_hash) const {
    ordered_json j;
    j["type"] = "kba";
    j["config_hash"] = config_hash;
    ordered_json cats;
    for (const auto& [cat, forest] : forests)
        cats[cat] = ordered_json::parse(forest.to_json());
    j["categories"] = std::move(cats);
    return j.dump() + "\n";
}

KbaModel KbaModel::from_json(const std::string& content, std::string* config_hash) {
    json j = json::parse(content, nullptr, false);
    if (j.is_discarded() || j.value("type", "") != "kba")
        throw DataError("not a KBA model file");
    if (config_hash) *config_hash = j.value("config_hash", "");
    KbaModel m;
    for (auto it = j.at("categories").begin(); it != j.at("categories").end(); ++it)
        m.forests[it.key()] = Forest::from_json(it->dump());
    return m;
}

namespace {

const EntityProfile& profile_for(const std::map<std::string, EntityProfile>& profiles,
                                 const std::string& entity_id) {
    auto it = profiles.find(entity_id);
    if (it == profiles.end())
        throw DataError("no entity profile for " + entity_id);
    return it->second;
}

}  // namespace

KbaModel train_kba(const Dataset& train,
                   const std::map<std::string, EntityProfile>& profiles,
                   const EntityStream& stream, const Preprocessor& prep,
                   const ForestParams& params, ExecMode mode) {
    // Labeled message indices per category, in dataset order.
    std::map<std::string, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const Message& msg = train.at(i);
        if (!msg.gold_label) continue;
        by_category[profile_for(profiles, msg.entity_id).category].push_back(i);
    }
    if (by_category.empty()) throw DataError("KBA training set has no labeled messages");

    KbaModel model;
    std::uint64_t category_index = 0;
    for (const auto& [category, rows] : by_category) {
        FeatureMatrix x;
        x.rows = rows.size();
        x.cols = kKbaFeatureCount;
        x.values.resize(x.rows * x.cols);
        std::vector<Label> y(rows.size());
        parallel_for(rows.size(), mode, [&](std::size_t r) {
            const Message& msg = train.at(rows[r]);
            auto f = extract_kba_features(msg, profile_for(profiles, msg.entity_id),
                                          stream, prep);
            std::copy(f.begin(), f.end(), x.values.begin() + r * x.cols);
            y[r] = *msg.gold_label;
        });
        bool has_related = false, has_unrelated = false;
        for (Label l : y) (l == Label::related ? has_related : has_unrelated) = true;
        if (!has_related || !has_unrelated)
            throw DataError("category " + category + " has a single label; cannot train");

        ForestParams p = params;
        p.seed = mix_seed(params.seed, category_index++, kKbaCategorySalt);
        model.forests[category] = fit_forest(x, y, p, mode);
    }
    return model;
}

Prediction predict_kba(const KbaModel& model, const Message& msg,
                       const EntityProfile& profile, const EntityStream& stream,
                       const Preprocessor& prep) {
    auto it = model.forests.find(profile.category);
    if (it == model.forests.end())
        throw DataError("no forest for category " + profile.category);
    auto f = extract_kba_features(msg, profile, stream, prep);
    auto [vr, vu] = it->second.predict(f.data(), f.size());
    return make_prediction(msg.id, vr, vu);
}

// ---- batch drivers ----

namespace {

template <class Fn>
SystemRun run_batch(const std::string& system, const Dataset& input, ExecMode mode,
                    Fn&& predict_one) {
    std::vector<Prediction> slots(input.size());
    parallel_for(input.size(), mode,
                 [&](std::size_t i) { slots[i] = predict_one(input.at(i)); });
    SystemRun run(system);
    for (Prediction& p : slots) run.add(std::move(p));
    return run;
}

}  // namespace

SystemRun predict_cosine_batch(const CosineModel& model, const Dataset& input,
                               const Vocabulary& vocab, const Preprocessor& prep,
                               int n_max, ExecMode mode) {
    return run_batch("cosine", input, mode, [&](const Message& m) {
        return predict_cosine(model, m, vocab, prep, n_max);
    });
}

SystemRun predict_knn_batch(const KnnIndex& index, const Dataset& input,
                            const Vocabulary& vocab, const Preprocessor& prep,
                            int n_max, ExecMode mode) {
    return run_batch("knn", input, mode, [&](const Message& m) {
        return predict_knn(index, m, vocab, prep, n_max);
    });
}

SystemRun predict_kba_batch(const KbaModel& model, const Dataset& input,
                            const std::map<std::string, EntityProfile>& profiles,
                            const EntityStream& stream, const Preprocessor& prep,
                            ExecMode mode) {
    // All lookups validated up front: the parallel region must not throw.
    for (const auto& [entity_id, _] : input.by_entity()) {
        const EntityProfile& profile = profile_for(profiles, entity_id);
        auto it = model.forests.find(profile.category);
        if (it == model.forests.end())
            throw DataError("no forest for category " + profile.category);
        if (it->second.n_features != kKbaFeatureCount)
            throw DataError("model feature width does not match this build");
    }
    return run_batch("kba", input, mode, [&](const Message& m) {
        return predict_kba(model, m, profiles.find(m.entity_id)->second, stream, prep);
    });
}

}  // namespace entifilt

#include "entifilt/synth.hpp"

#include <array>
#include <cstdio>
#include <set>
#include <vector>

#include "entifilt/errors.hpp"
#include "entifilt/rng.hpp"

namespace entifilt {

namespace {

constexpr std::uint64_t kPoolSalt = 0x500139ULL;
constexpr std::uint64_t kMessageSalt = 0x9E55A6ULL;
constexpr std::uint64_t kNoiseSalt = 0xF11B5ULL;

constexpr std::int64_t kBaseTime = 1338508800;  // 2012-06-01 00:00 UTC
constexpr std::int64_t kSpan = 60 * 86400;
constexpr int kSenses = 3;

// Fraction of unrelated messages that borrow words from the related topic
// pool; this is the planted vocabulary overlap that blurs the class bags.
constexpr double kOverlapRate = 0.75;

const char* const kSyllables[] = {
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe",
    "fi", "fo", "fu", "ga", "ge", "gi", "go", "gu", "ka", "ke", "ki", "ko",
    "ku", "la", "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu", "na",
    "ne", "ni", "no", "nu", "pa", "pe", "pi", "po", "pu", "ra", "re", "ri",
    "ro", "ru", "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu",
    "va", "ve", "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu"};

struct EntitySpec {
    const char* id;
    const char* canonical;
    std::vector<const char*> aliases;
    const char* category;
    const char* handle;       // mention target, e.g. @jaguarcars
    double related_frac;
};

const std::vector<EntitySpec>& entity_specs() {
    static const std::vector<EntitySpec> specs = {
        {"auto-jaguar", "Jaguar", {"Jag", "JaguarCars"}, "automotive", "jaguarcars", 0.55},
        {"bank-santander", "Santander", {"SantanderBank"}, "banking", "santanderbank", 0.50},
        {"univ-columbia", "Columbia", {"ColumbiaU"}, "universities", "columbiau", 0.45},
        {"music-nirvana", "Nirvana", {"NirvanaBand"}, "music", "nirvanaband", 0.60},
    };
    return specs;
}

std::string make_word(Rng& rng, std::set<std::string>& used) {
    for (;;) {
        std::string w;
        for (int s = 0; s < 3; ++s) w += kSyllables[rng.index(std::size(kSyllables))];
        if (used.insert(w).second) return w;
    }
}

std::vector<std::string> make_pool(Rng& rng, std::set<std::string>& used, std::size_t n) {
    std::vector<std::string> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.push_back(make_word(rng, used));
    return pool;
}

struct EntityWorld {
    std::vector<std::string> related;                 // coherent topic words
    std::array<std::vector<std::string>, kSenses> senses;  // the other meanings
    std::vector<std::string> shared;                  // words both classes use
    std::vector<std::string> overlap;                 // related words leaked to senses
    std::vector<std::string> fans, casuals;
    std::array<std::vector<std::string>, kSenses> crowds;
    std::vector<std::int64_t> events;                 // burst centers
    EntityProfile profile;
};

EntityWorld build_world(const EntitySpec& spec, std::size_t ei, std::uint64_t seed,
                        std::set<std::string>& used) {
    Rng rng(mix_seed(seed, ei, kPoolSalt));
    EntityWorld w;
    w.related = make_pool(rng, used, 36);
    for (auto& sense : w.senses) sense = make_pool(rng, used, 24);
    w.shared = make_pool(rng, used, 16);
    w.overlap.assign(w.related.begin(), w.related.begin() + 8);

    auto people = [&](std::size_t n) {
        std::vector<std::string> v;
        for (std::size_t i = 0; i < n; ++i) {
            std::string name = make_word(rng, used);
            char buf[8];
            std::snprintf(buf, sizeof buf, "%02d", static_cast<int>(rng.below(100)));
            v.push_back(name + buf);
        }
        return v;
    };
    w.fans = people(50);
    w.casuals = people(80);
    for (auto& crowd : w.crowds) crowd = people(30);

    for (int k = 0; k < 6; ++k)
        w.events.push_back(kBaseTime + (static_cast<std::int64_t>(ei) * 7 + k * 9 + 3) * 86400 +
                           17 * 3600);

    w.profile.entity_id = spec.id;
    w.profile.canonical_name = spec.canonical;
    for (const char* a : spec.aliases) w.profile.aliases.push_back(a);
    w.profile.category = spec.category;
    // Profile text draws on the topic words the senses never borrow, so the
    // profile-overlap features stay clean.
    std::string text = std::string(spec.canonical) + " official " + spec.category;
    for (std::size_t i = 8; i < 32; ++i) text += " " + w.related[i];
    w.profile.profile_text = text;
    for (std::size_t i = 8; i < 14; ++i) w.profile.homepage_tokens.push_back(w.related[i]);
    return w;
}

std::string capitalized(std::string word) {
    if (!word.empty() && word[0] >= 'a' && word[0] <= 'z')
        word[0] = static_cast<char>(word[0] - 'a' + 'A');
    return word;
}

Message make_message(const EntitySpec& spec, const EntityWorld& w,
                     const std::vector<std::string>& filler, std::size_t ei,
                     std::size_t i, std::uint64_t seed) {
    Rng rng(mix_seed(seed, ei * 1000003ULL + i, kMessageSalt));
    Message msg;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "%s-%06zu", spec.id, i);
    msg.id = idbuf;
    msg.entity_id = spec.id;
    bool related = rng.chance(spec.related_frac);
    msg.gold_label = related ? Label::related : Label::unrelated;
    msg.language = rng.chance(0.12) ? "es" : "en";

    if (related) {
        msg.timestamp = w.events[rng.index(w.events.size())] +
                        static_cast<std::int64_t>(rng.below(72000)) - 36000;
        double a = rng.unit();
        msg.author = a < 0.7   ? w.fans[rng.index(w.fans.size())]
                   : a < 0.9 ? w.casuals[rng.index(w.casuals.size())]
                             : w.crowds[rng.index(kSenses)][rng.index(30)];
    } else {
        msg.timestamp = kBaseTime + static_cast<std::int64_t>(rng.below(kSpan));
        double a = rng.unit();
        std::size_t sense = rng.index(kSenses);
        msg.author = a < 0.7   ? w.crowds[sense][rng.index(30)]
                   : a < 0.95 ? w.casuals[rng.index(w.casuals.size())]
                              : w.fans[rng.index(w.fans.size())];
    }
    if (msg.timestamp <= 0) msg.timestamp = kBaseTime;

    std::vector<std::string> words;
    double name_roll = rng.unit();
    if (related) {
        if (name_roll < 0.55)
            words.push_back(spec.canonical);
        else if (name_roll < 0.85)
            words.push_back(spec.aliases[rng.index(spec.aliases.size())]);
        else
            words.push_back(std::string("@") + w.profile.canonical_name);
    } else {
        words.push_back(name_roll < 0.9
                            ? std::string(spec.canonical)
                            : std::string(spec.aliases[rng.index(spec.aliases.size())]));
    }

    auto draw = [&](const std::vector<std::string>& pool, std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) words.push_back(pool[rng.index(pool.size())]);
    };
    std::size_t sense = rng.index(kSenses);
    if (related) {
        draw(w.related, 3 + rng.index(3));
        draw(w.shared, 1 + rng.index(2));
        draw(filler, 2 + rng.index(3));
        if (rng.chance(0.25)) words.push_back("#" + w.related[rng.index(w.related.size())]);
        if (rng.chance(0.30)) words.push_back(std::string("@") + spec.handle);
    } else {
        draw(w.senses[sense], 3 + rng.index(3));
        if (rng.chance(kOverlapRate)) draw(w.overlap, 1 + rng.index(2));
        draw(w.shared, 1 + rng.index(2));
        draw(filler, 2 + rng.index(3));
        if (rng.chance(0.10))
            words.push_back("#" + w.senses[sense][rng.index(w.senses[sense].size())]);
        if (rng.chance(0.05)) words.push_back(std::string("@") + spec.handle);
    }
    if (rng.chance(0.15)) {
        std::string tail = "http://t.co/";
        for (int k = 0; k < 6; ++k) tail += kSyllables[rng.index(std::size(kSyllables))][0];
        words.push_back(tail);
    }

    // Name stays in front; the rest shuffles. Random casing adds case noise.
    std::string text = words[0];
    std::vector<std::string> rest(words.begin() + 1, words.end());
    rng.shuffle(rest);
    for (std::string& word : rest) {
        if (word[0] != '#' && word[0] != '@' && rng.chance(0.12)) word = capitalized(word);
        text += " " + word;
    }
    msg.text = text;
    return msg;
}

}  // namespace

SynthCorpus generate_synth(const SynthParams& params) {
    if (params.per_entity < 10) throw UsageError("per_entity must be at least 10");
    if (params.train_frac <= 0.0 || params.dev_frac <= 0.0 ||
        params.train_frac + params.dev_frac >= 1.0)
        throw UsageError("train and dev fractions must be positive and sum below 1");
    if (params.label_noise < 0.0 || params.label_noise >= 0.5)
        throw UsageError("label noise must be in [0, 0.5)");

    std::set<std::string> used;
    Rng filler_rng(mix_seed(params.seed, 9999, kPoolSalt));
    std::vector<std::string> filler = make_pool(filler_rng, used, 120);

    SynthCorpus out;
    out.train.set_role(DatasetRole::train);
    out.dev.set_role(DatasetRole::dev);
    out.test.set_role(DatasetRole::test);

    const auto& specs = entity_specs();
    std::size_t n_train = static_cast<std::size_t>(params.per_entity * params.train_frac);
    std::size_t n_dev = static_cast<std::size_t>(params.per_entity * params.dev_frac);

    for (std::size_t ei = 0; ei < specs.size(); ++ei) {
        EntityWorld w = build_world(specs[ei], ei, params.seed, used);
        out.profiles[w.profile.entity_id] = w.profile;
        for (std::size_t i = 0; i < params.per_entity; ++i) {
            Message msg = make_message(specs[ei], w, filler, ei, i, params.seed);
            if (i < n_train) {
                Rng noise(mix_seed(params.seed, ei * 1000003ULL + i, kNoiseSalt));
                if (noise.chance(params.label_noise))
                    msg.gold_label = *msg.gold_label == Label::related
                                         ? Label::unrelated
                                         : Label::related;
                out.train.add(std::move(msg));
            } else if (i < n_train + n_dev) {
                out.dev.add(std::move(msg));
            } else {
                out.test.add(std::move(msg));
            }
        }
    }
    return out;
}

}  // namespace entifilt

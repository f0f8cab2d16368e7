#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "entifilt/classifiers.hpp"
#include "entifilt/errors.hpp"
#include "test_util.hpp"

using namespace entifilt;
using testutil::make_msg;

namespace {

// Disjoint class vocabularies so the bags are orthogonal.
Dataset orthogonal_corpus() {
    Dataset ds;
    ds.add(make_msg("r1", "e1", "rocket rover", Label::related));
    ds.add(make_msg("u1", "e1", "urchin umbra", Label::unrelated));
    return ds;
}

Vocabulary vocab_of(const Dataset& ds, const Preprocessor& prep, int n_max = 1) {
    auto stats = compute_term_stats(ds, prep, n_max, ExecMode::serial);
    std::int64_t n = 0;
    for (const Message& m : ds.messages())
        if (m.gold_label) ++n;
    return select_vocabulary(stats, n, 1, 100000, prep.config_hash(PrepMode::cosine_knn, n_max));
}

// Hand-built vocabulary accepting exactly the given terms.
Vocabulary vocab_for(const std::vector<std::string>& terms) {
    TermStatsMap stats;
    for (const auto& t : terms) {
        TermStats s;
        s.df = 2;
        s.tf_related = 1;
        s.tf_unrelated = 1;
        s.gini = 0.9;
        s.idf = 0.5;
        stats[t] = s;
    }
    return select_vocabulary(stats, 4, 1, 100000, 0);
}

EntityProfile jaguar_profile() {
    EntityProfile p;
    p.entity_id = "auto-jaguar";
    p.canonical_name = "Jaguar";
    p.aliases = {"Jag", "JaguarCars"};
    p.category = "automotive";
    p.profile_text = "british luxury performance cars";
    p.homepage_tokens = {"xj", "coupe"};
    return p;
}

}  // namespace

TEST_CASE("raw scores normalize to one with ties choosing related") {
    auto p = make_prediction("m1", 0.3, 0.1);
    CHECK(p.score_related == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p.score_unrelated == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.chosen == Label::related);

    auto tie = make_prediction("m2", 0.2, 0.2);
    CHECK(tie.score_related == doctest::Approx(0.5));
    CHECK(tie.chosen == Label::related);

    auto zero = make_prediction("m3", 0.0, 0.0);
    CHECK(zero.score_related == doctest::Approx(0.5));
    CHECK(zero.chosen == Label::related);

    auto unrel = make_prediction("m4", 0.1, 0.9);
    CHECK(unrel.chosen == Label::unrelated);

    CHECK_THROWS_AS(make_prediction("m5", -0.1, 0.5), InternalError);
}

TEST_CASE("runs reject duplicate ids and round-trip with extras") {
    SystemRun run("cosine");
    run.header_extras["strategy"] = "none";
    run.add(make_prediction("m1", 0.9, 0.1));
    run.add(make_prediction("m2", 0.2, 0.8));
    CHECK_THROWS_AS(run.add(make_prediction("m1", 0.5, 0.5)), DataError);

    std::string text = run.to_jsonl("cafe1234");
    SystemRun back = SystemRun::from_jsonl(text);
    CHECK(back.system() == "cosine");
    CHECK(back.size() == 2);
    CHECK(back.header_extras.at("strategy") == "none");
    CHECK(back.to_jsonl("cafe1234") == text);
    REQUIRE(back.find("m2") != nullptr);
    CHECK(back.find("m2")->chosen == Label::unrelated);

    CHECK_THROWS_AS(SystemRun::from_jsonl("{\"not\":\"a header\"}\n"), DataError);
    // scores failing the sum-to-one contract are data corruption
    std::string bad = text;
    auto pos = bad.find("0.9");
    bad.replace(pos, 3, "0.7");
    CHECK_THROWS_AS(SystemRun::from_jsonl(bad), DataError);
}

TEST_CASE("orthogonal class bags give certain cosine predictions") {
    Preprocessor prep;
    Dataset ds = orthogonal_corpus();
    auto vocab = vocab_of(ds, prep);
    auto model = train_cosine(ds, vocab, prep, 1, ExecMode::serial);

    auto related = predict_cosine(model, make_msg("q1", "e9", "rocket rover", {}, 100, "q"),
                                  vocab, prep, 1);
    CHECK(related.score_related == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(related.chosen == Label::related);

    auto unrelated = predict_cosine(model, make_msg("q2", "e9", "umbra", {}, 100, "q"),
                                    vocab, prep, 1);
    CHECK(unrelated.chosen == Label::unrelated);
    CHECK(unrelated.score_unrelated == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a message with no vocabulary terms falls back to a tie") {
    Preprocessor prep;
    Dataset ds = orthogonal_corpus();
    auto vocab = vocab_of(ds, prep);
    auto model = train_cosine(ds, vocab, prep, 1, ExecMode::serial);
    auto p = predict_cosine(model, make_msg("q1", "e9", "nothing known", {}, 100, "q"),
                            vocab, prep, 1);
    CHECK(p.score_related == doctest::Approx(0.5));
    CHECK(p.chosen == Label::related);
}

TEST_CASE("cosine confidences ignore uniform term-count scaling") {
    Preprocessor prep;
    Dataset ds = orthogonal_corpus();
    auto vocab = vocab_of(ds, prep);
    auto model = train_cosine(ds, vocab, prep, 1, ExecMode::serial);
    auto once = predict_cosine(model, make_msg("q1", "e9", "rocket umbra", {}, 100, "q"),
                               vocab, prep, 1);
    auto twice = predict_cosine(
        model, make_msg("q2", "e9", "rocket umbra rocket umbra", {}, 100, "q"),
        vocab, prep, 1);
    CHECK(once.score_related == doctest::Approx(twice.score_related).epsilon(1e-12));
}

TEST_CASE("cosine training needs both classes") {
    Preprocessor prep;
    Dataset ds;
    ds.add(make_msg("r1", "e1", "alpha beta", Label::related));
    auto vocab = vocab_for({"alpha", "beta"});
    CHECK_THROWS_AS(train_cosine(ds, vocab, prep, 1, ExecMode::serial), DataError);
}

TEST_CASE("cosine model serialization keeps the bags") {
    Preprocessor prep;
    Dataset ds = orthogonal_corpus();
    auto vocab = vocab_of(ds, prep);
    auto model = train_cosine(ds, vocab, prep, 1, ExecMode::serial);
    std::string text = model.to_json("beef");
    std::string hash;
    auto back = CosineModel::from_json(text, &hash);
    CHECK(hash == "beef");
    CHECK(back.to_json("beef") == text);
    CHECK(back.bag_related.weights == model.bag_related.weights);
}

TEST_CASE("jaccard similarity on sorted token sets") {
    std::vector<std::string> abc = {"a", "b", "c"};
    std::vector<std::string> bcd = {"b", "c", "d"};
    CHECK(jaccard(abc, bcd) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(jaccard(abc, abc) == doctest::Approx(1.0));
    CHECK(jaccard(abc, {}) == doctest::Approx(0.0));
    CHECK(jaccard({}, {}) == doctest::Approx(0.0));
    CHECK(jaccard(abc, {"x", "y"}) == doctest::Approx(0.0));
}

TEST_CASE("knn weighted vote matches the hand-computed neighbors") {
    // neighbor similarities to {a,b,c}: e1 0.6 (R), e2 0.4 (R), e3 0.5 (U)
    KnnIndex index;
    index.k = 3;
    index.entries = {
        {"e1", {"a", "b", "c", "y1", "y2"}, Label::related},
        {"e2", {"a", "b", "w1", "w2"}, Label::related},
        {"e3", {"a", "b", "c", "z1", "z2", "z3"}, Label::unrelated},
    };
    auto vocab = vocab_for({"a", "b", "c", "y1", "y2", "w1", "w2", "z1", "z2", "z3"});
    Preprocessor prep;
    auto p = predict_knn(index, make_msg("q1", "e9", "a b c", {}, 100, "q"),
                         vocab, prep, 1);
    CHECK(p.score_related == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
    CHECK(p.score_unrelated == doctest::Approx(0.5 / 1.5).epsilon(1e-12));
    CHECK(p.chosen == Label::related);
}

TEST_CASE("knn neighbor ties at equal similarity break by ascending id") {
    KnnIndex index;
    index.k = 3;
    index.entries = {
        {"n4", {"a", "x4"}, Label::unrelated},
        {"n1", {"a", "x1"}, Label::related},
        {"n3", {"a", "x3"}, Label::unrelated},
        {"n2", {"a", "x2"}, Label::related},
    };
    auto vocab = vocab_for({"a", "x1", "x2", "x3", "x4"});
    Preprocessor prep;
    // all four neighbors sit at Jaccard 1/2; the K=3 cut keeps n1, n2, n3
    auto p = predict_knn(index, make_msg("q1", "e9", "a", {}, 100, "q"), vocab, prep, 1);
    CHECK(p.score_related == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(p.chosen == Label::related);
}

TEST_CASE("knn with no overlapping neighbor falls back to a tie") {
    KnnIndex index;
    index.k = 2;
    index.entries = {{"n1", {"p", "q"}, Label::unrelated}};
    auto vocab = vocab_for({"a", "p", "q"});
    Preprocessor prep;
    auto p = predict_knn(index, make_msg("q1", "e9", "a", {}, 100, "q"), vocab, prep, 1);
    CHECK(p.score_related == doctest::Approx(0.5));
    CHECK(p.chosen == Label::related);
}

TEST_CASE("knn token sets are sorted unique vocabulary terms") {
    auto vocab = vocab_for({"beta", "alfa", "META:ENT:e1"});
    Preprocessor prep;
    auto msg = make_msg("m1", "e1", "beta alfa beta zzz", {}, 100, "nobody");
    auto tokens = knn_token_set(msg, vocab, prep, 1);
    CHECK(tokens == std::vector<std::string>{"META:ENT:e1", "alfa", "beta"});
}

TEST_CASE("knn index building skips unlabeled messages and validates k") {
    Dataset ds;
    ds.add(make_msg("m1", "e1", "alpha beta", Label::related));
    ds.add(make_msg("m2", "e1", "alpha gamma", Label::unrelated));
    ds.add(make_msg("m3", "e1", "beta gamma"));
    auto vocab = vocab_for({"alpha", "beta", "gamma"});
    Preprocessor prep;
    auto index = build_knn_index(ds, vocab, prep, 1, 5, ExecMode::serial);
    CHECK(index.entries.size() == 2);
    CHECK(index.entries[0].id == "m1");
    CHECK(index.k == 5);

    CHECK_THROWS_AS(build_knn_index(ds, vocab, prep, 1, 0, ExecMode::serial), UsageError);
    Dataset unlabeled;
    unlabeled.add(make_msg("m1", "e1", "alpha"));
    CHECK_THROWS_AS(build_knn_index(unlabeled, vocab, prep, 1, 3, ExecMode::serial),
                    DataError);
}

TEST_CASE("knn index serialization round-trips") {
    KnnIndex index;
    index.k = 7;
    index.entries = {{"m1", {"a", "b"}, Label::related},
                     {"m2", {"c"}, Label::unrelated}};
    std::string text = index.to_jsonl("f00d");
    std::string hash;
    auto back = KnnIndex::from_jsonl(text, &hash);
    CHECK(hash == "f00d");
    CHECK(back.k == 7);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[1].tokens == std::vector<std::string>{"c"});
    CHECK(back.to_jsonl("f00d") == text);
}

TEST_CASE("document-centric features count sigils and tokens") {
    Preprocessor prep;
    EntityStream stream;
    auto msg = make_msg("m1", "auto-jaguar", "Nice ride @dealer #Jaguar #XJCoupe", {},
                        345600, "ann");
    auto f = extract_kba_features(msg, jaguar_profile(), stream, prep);
    CHECK(f[kHashtagCount] == doctest::Approx(2.0));
    CHECK(f[kMentionCount] == doctest::Approx(1.0));
    CHECK(f[kUrlCount] == doctest::Approx(0.0));
    // kba tokens: nice ride dealer jaguar xj coupe
    CHECK(f[kTokenCount] == doctest::Approx(6.0));
    CHECK(f[kUppercaseFraction] > 0.0);
    CHECK(f[kUppercaseFraction] < 1.0);
}

TEST_CASE("entity name matching counts runs over unfiltered tokens") {
    Preprocessor prep({"jaguar"}, {});  // stoplist must not hide the name
    EntityStream stream;
    auto msg = make_msg("m1", "auto-jaguar", "jaguar beats jag and JaguarCars jag",
                        {}, 345600, "ann");
    auto f = extract_kba_features(msg, jaguar_profile(), stream, prep);
    CHECK(f[kCanonicalNameTf] == doctest::Approx(1.0));
    CHECK(f[kAliasTf] == doctest::Approx(3.0));       // jag x2 + jaguarcars
    CHECK(f[kAliasMatchCount] == doctest::Approx(2.0));
    CHECK(f[kFirstMentionPosition] == doctest::Approx(0.0));
}

TEST_CASE("a missing mention pushes first position to one") {
    Preprocessor prep;
    EntityStream stream;
    auto msg = make_msg("m1", "auto-jaguar", "totally different topic", {}, 345600, "x");
    auto f = extract_kba_features(msg, jaguar_profile(), stream, prep);
    CHECK(f[kCanonicalNameTf] == doctest::Approx(0.0));
    CHECK(f[kFirstMentionPosition] == doctest::Approx(1.0));
}

TEST_CASE("multi-word names must appear as a contiguous run") {
    EntityProfile p;
    p.entity_id = "bank-santander";
    p.canonical_name = "Banco Santander";
    p.category = "banking";
    Preprocessor prep;
    EntityStream stream;
    auto hit = extract_kba_features(
        make_msg("m1", "bank-santander", "banco santander reports", {}, 345600, "x"),
        p, stream, prep);
    CHECK(hit[kCanonicalNameTf] == doctest::Approx(1.0));
    auto split = extract_kba_features(
        make_msg("m2", "bank-santander", "banco grande santander", {}, 345600, "x"),
        p, stream, prep);
    CHECK(split[kCanonicalNameTf] == doctest::Approx(0.0));
}

TEST_CASE("a message equal to the profile text scores full similarity") {
    auto profile = jaguar_profile();
    Preprocessor prep;
    EntityStream stream;
    auto msg = make_msg("m1", "auto-jaguar", profile.profile_text, {}, 345600, "x");
    auto f = extract_kba_features(msg, profile, stream, prep);
    CHECK(f[kProfileJaccard] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f[kProfileCosine] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f[kProfileTokenOverlap] == doctest::Approx(4.0));
}

TEST_CASE("homepage tokens widen only the overlap count") {
    auto profile = jaguar_profile();
    Preprocessor prep;
    EntityStream stream;
    auto msg = make_msg("m1", "auto-jaguar", "luxury xj zzz", {}, 345600, "x");
    auto f = extract_kba_features(msg, profile, stream, prep);
    CHECK(f[kProfileTokenOverlap] == doctest::Approx(2.0));  // luxury + xj
    CHECK(f[kProfileJaccard] < 0.5);
}

TEST_CASE("clock features scale hour and weekday into the unit interval") {
    Preprocessor prep;
    EntityStream stream;
    auto profile = jaguar_profile();
    // 345600 = day 4 at 00:00, a Monday
    auto monday = extract_kba_features(
        make_msg("m1", "auto-jaguar", "text", {}, 345600, "x"), profile, stream, prep);
    CHECK(monday[kHourOfDay] == doctest::Approx(0.0));
    CHECK(monday[kDayOfWeek] == doctest::Approx(0.0));
    // day 0 at 23:00, a Thursday
    auto thursday = extract_kba_features(
        make_msg("m2", "auto-jaguar", "text", {}, 82800, "x"), profile, stream, prep);
    CHECK(thursday[kHourOfDay] == doctest::Approx(1.0));
    CHECK(thursday[kDayOfWeek] == doctest::Approx(0.5));
}

TEST_CASE("burst ratio compares the last day's window to the stream mean") {
    Dataset ds;
    for (int i = 0; i < 11; ++i)
        ds.add(make_msg("m" + std::to_string(i), "e1", "x", Label::related,
                        1000000 + static_cast<std::int64_t>(i) * 86400));
    auto stream = EntityStream::from_dataset(ds);
    // window holds one message; the mean is 11 over 10 days
    CHECK(stream.burst_ratio("e1", 1000000 + 10 * 86400) ==
          doctest::Approx(1.0 / 1.1).epsilon(1e-12));
    CHECK(stream.burst_ratio("unknown", 1000000) == doctest::Approx(0.0));

    Dataset spike;
    for (int i = 0; i < 10; ++i)
        spike.add(make_msg("s" + std::to_string(i), "e1", "x", Label::related, 5000));
    auto spikestream = EntityStream::from_dataset(spike);
    CHECK(spikestream.burst_ratio("e1", 5000) == doctest::Approx(1.0));
}

TEST_CASE("one forest per category separates name-bearing messages") {
    std::map<std::string, EntityProfile> profiles;
    struct Spec { const char* ent; const char* name; const char* cat; };
    for (auto [ent, name, cat] : {Spec{"auto-a", "Veloz", "automotive"},
                                  Spec{"bank-b", "Lucre", "banking"},
                                  Spec{"univ-c", "Atheneum", "universities"},
                                  Spec{"band-d", "Chord", "music"}}) {
        EntityProfile p;
        p.entity_id = ent;
        p.canonical_name = name;
        p.category = cat;
        p.profile_text = std::string(name) + " official site";
        profiles[ent] = p;
    }

    Dataset train;
    int id = 0;
    for (const auto& [ent, p] : profiles) {
        std::string name = p.canonical_name;
        for (int i = 0; i < 8; ++i) {
            ++id;
            train.add(make_msg("r" + std::to_string(id), ent,
                               name + " news update " + std::to_string(i),
                               Label::related, 345600 + id * 3600));
            ++id;
            train.add(make_msg("u" + std::to_string(id), ent,
                               "random chatter " + std::to_string(i),
                               Label::unrelated, 345600 + id * 3600));
        }
    }

    Preprocessor prep;
    auto stream = EntityStream::from_dataset(train);
    ForestParams params;
    params.n_trees = 25;
    params.seed = 91;
    auto model = train_kba(train, profiles, stream, prep, params, ExecMode::serial);
    CHECK(model.forests.size() == 4);
    for (const char* cat : {"automotive", "banking", "universities", "music"})
        CHECK(model.forests.count(cat) == 1);

    for (const Message& m : train.messages()) {
        auto p = predict_kba(model, m, profiles.at(m.entity_id), stream, prep);
        CHECK(p.chosen == *m.gold_label);
    }

    auto again = train_kba(train, profiles, stream, prep, params, ExecMode::serial);
    CHECK(again.to_json("x") == model.to_json("x"));

    std::string hash;
    auto back = KbaModel::from_json(model.to_json("77"), &hash);
    CHECK(hash == "77");
    CHECK(back.to_json("77") == model.to_json("77"));
}

TEST_CASE("a category with one-sided labels cannot train") {
    std::map<std::string, EntityProfile> profiles;
    EntityProfile p = jaguar_profile();
    profiles[p.entity_id] = p;
    Dataset train;
    train.add(make_msg("m1", p.entity_id, "jaguar one", Label::related, 345600));
    train.add(make_msg("m2", p.entity_id, "jaguar two", Label::related, 345700));
    Preprocessor prep;
    auto stream = EntityStream::from_dataset(train);
    ForestParams params;
    params.n_trees = 3;
    params.seed = 1;
    CHECK_THROWS_AS(train_kba(train, profiles, stream, prep, params, ExecMode::serial),
                    DataError);
}

TEST_CASE("predictions for entities without profiles are refused") {
    std::map<std::string, EntityProfile> profiles;
    EntityProfile p = jaguar_profile();
    profiles[p.entity_id] = p;
    Dataset train;
    for (int i = 0; i < 4; ++i) {
        train.add(make_msg("r" + std::to_string(i), p.entity_id, "jaguar road",
                           Label::related, 345600 + i));
        train.add(make_msg("u" + std::to_string(i), p.entity_id, "other stuff",
                           Label::unrelated, 345600 + i));
    }
    Preprocessor prep;
    auto stream = EntityStream::from_dataset(train);
    ForestParams params;
    params.n_trees = 3;
    params.seed = 1;
    auto model = train_kba(train, profiles, stream, prep, params, ExecMode::serial);

    Dataset input;
    input.add(make_msg("q1", "mystery-entity", "jaguar", {}, 345600));
    CHECK_THROWS_AS(predict_kba_batch(model, input, profiles, stream, prep,
                                      ExecMode::serial),
                    DataError);
}

TEST_CASE("batch prediction agrees with the single-message path") {
    Preprocessor prep;
    Dataset ds = orthogonal_corpus();
    auto vocab = vocab_of(ds, prep);
    auto model = train_cosine(ds, vocab, prep, 1, ExecMode::serial);
    auto index = build_knn_index(ds, vocab, prep, 1, 2, ExecMode::serial);

    Dataset input;
    input.add(make_msg("q1", "e1", "rocket umbra", {}, 100, "q"));
    input.add(make_msg("q2", "e1", "urchin", {}, 101, "q"));

    auto cos_run = predict_cosine_batch(model, input, vocab, prep, 1, ExecMode::serial);
    auto knn_run = predict_knn_batch(index, input, vocab, prep, 1, ExecMode::serial);
    CHECK(cos_run.system() == "cosine");
    CHECK(knn_run.system() == "knn");
    REQUIRE(cos_run.size() == 2);
    REQUIRE(knn_run.size() == 2);
    for (const Message& m : input.messages()) {
        auto single_cos = predict_cosine(model, m, vocab, prep, 1);
        CHECK(cos_run.find(m.id)->score_related ==
              doctest::Approx(single_cos.score_related).epsilon(1e-15));
        auto single_knn = predict_knn(index, m, vocab, prep, 1);
        CHECK(knn_run.find(m.id)->score_related ==
              doctest::Approx(single_knn.score_related).epsilon(1e-15));
    }
}

TEST_CASE("every emitted prediction is normalized") {
    Preprocessor prep;
    Dataset ds = orthogonal_corpus();
    auto vocab = vocab_of(ds, prep);
    auto model = train_cosine(ds, vocab, prep, 1, ExecMode::serial);
    Dataset input;
    const char* texts[] = {"rocket", "umbra rover", "urchin urchin", "none", ""};
    int i = 0;
    for (const char* t : texts) {
        if (std::string(t).empty()) continue;
        input.add(make_msg("q" + std::to_string(i++), "e1", t, {}, 100, "q"));
    }
    auto run = predict_cosine_batch(model, input, vocab, prep, 1, ExecMode::serial);
    for (const Prediction& p : run.predictions()) {
        CHECK(p.score_related + p.score_unrelated == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(p.score_related >= 0.0);
        CHECK(p.score_unrelated >= 0.0);
        CHECK(p.chosen == (p.score_related >= p.score_unrelated ? Label::related
                                                                : Label::unrelated));
    }
}

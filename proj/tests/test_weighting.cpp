#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "entifilt/errors.hpp"
#include "entifilt/rng.hpp"
#include "entifilt/weighting.hpp"
#include "test_util.hpp"

using namespace entifilt;
using testutil::make_msg;

namespace {

// Four labeled messages, same author, no stoplist. Term profile:
//   zug  : df 2, tf 3 related / 1 unrelated -> gini 0.625, idf ln 2
//   pure : df 1, related only               -> gini 1.0
//   even : df 2, tf 1 / 1                   -> gini 0.5,   idf ln 2
Dataset toy_corpus() {
    Dataset ds;
    ds.add(make_msg("r1", "e1", "zug zug zug", Label::related));
    ds.add(make_msg("r2", "e1", "pure even", Label::related));
    ds.add(make_msg("u1", "e1", "zug", Label::unrelated));
    ds.add(make_msg("u2", "e1", "even", Label::unrelated));
    return ds;
}

Dataset random_corpus(std::uint64_t seed, std::size_t n_msgs) {
    Rng rng(seed);
    Dataset ds;
    for (std::size_t i = 0; i < n_msgs; ++i) {
        std::string text;
        std::size_t len = 1 + rng.index(8);
        for (std::size_t k = 0; k < len; ++k) {
            if (!text.empty()) text += ' ';
            text += "w" + std::to_string(rng.index(30));
        }
        ds.add(make_msg("m" + std::to_string(i), "e" + std::to_string(rng.index(3)),
                        text, rng.chance(0.5) ? Label::related : Label::unrelated));
    }
    return ds;
}

}  // namespace

TEST_CASE("term statistics match the hand-computed toy corpus") {
    Preprocessor prep;
    auto stats = compute_term_stats(toy_corpus(), prep, 1, ExecMode::serial);

    REQUIRE(stats.count("zug") == 1);
    const TermStats& zug = stats["zug"];
    CHECK(zug.df == 2);
    CHECK(zug.tf_related == 3);
    CHECK(zug.tf_unrelated == 1);
    CHECK(zug.gini == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(std::abs(zug.idf - std::log(2.0)) < 1e-12);

    CHECK(stats["pure"].gini == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats["even"].gini == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(stats["even"].idf - std::log(2.0)) < 1e-12);

    // appears in all four messages -> idf 0 -> zero weight everywhere
    REQUIRE(stats.count("META:USER:someone") == 1);
    CHECK(stats["META:USER:someone"].idf == doctest::Approx(0.0));
    CHECK(term_weight(3, stats["META:USER:someone"]) == doctest::Approx(0.0));
}

TEST_CASE("term weight is tf times idf times gini") {
    TermStats s;
    s.df = 2;
    s.tf_related = 3;
    s.tf_unrelated = 1;
    s.gini = 0.625;
    s.idf = std::log(2.0);
    CHECK(term_weight(2, s) == doctest::Approx(0.8664).epsilon(1e-4));
    CHECK(std::abs(term_weight(2, s) - 2.0 * std::log(2.0) * 0.625) < 1e-12);
    CHECK(term_weight(0, s) == doctest::Approx(0.0));
}

TEST_CASE("unlabeled messages do not enter the statistics") {
    Dataset ds;
    ds.add(make_msg("r1", "e1", "topic word", Label::related));
    ds.add(make_msg("u1", "e1", "other word", Label::unrelated));
    ds.add(make_msg("x1", "e1", "topic topic topic"));
    Preprocessor prep;
    auto stats = compute_term_stats(ds, prep, 1, ExecMode::serial);
    CHECK(stats["topic"].df == 1);
    CHECK(stats["topic"].tf_related == 1);
    CHECK(std::abs(stats["topic"].idf - std::log(2.0)) < 1e-12);
}

TEST_CASE("single-class training data is refused") {
    Dataset ds;
    ds.add(make_msg("r1", "e1", "alpha", Label::related));
    ds.add(make_msg("r2", "e1", "beta", Label::related));
    Preprocessor prep;
    CHECK_THROWS_AS(compute_term_stats(ds, prep, 1, ExecMode::serial), DataError);
    Dataset empty;
    CHECK_THROWS_AS(compute_term_stats(empty, prep, 1, ExecMode::serial), DataError);
}

TEST_CASE("class probabilities stay normalized on random corpora") {
    Preprocessor prep;
    for (std::uint64_t seed : {3ULL, 17ULL, 91ULL}) {
        Dataset ds = random_corpus(seed, 60);
        auto stats = compute_term_stats(ds, prep, 2, ExecMode::serial);
        std::int64_t n_labeled = 0;
        for (const Message& m : ds.messages())
            if (m.gold_label) ++n_labeled;
        for (const auto& [term, s] : stats) {
            CHECK(s.df >= 1);
            CHECK(s.df <= n_labeled);
            CHECK(s.tf_related + s.tf_unrelated >= 1);
            double p = static_cast<double>(s.tf_related) /
                       static_cast<double>(s.tf_related + s.tf_unrelated);
            CHECK(s.gini == doctest::Approx(p * p + (1 - p) * (1 - p)).epsilon(1e-12));
            CHECK(s.gini >= 0.5 - 1e-12);
            CHECK(s.gini <= 1.0 + 1e-12);
            CHECK(s.idf >= -1e-12);
        }
    }
}

TEST_CASE("vocabulary selection orders by gini with ties on the term") {
    TermStatsMap stats;
    auto mk = [](double gini, std::int64_t df) {
        TermStats s;
        s.df = df;
        s.tf_related = 1;
        s.tf_unrelated = 1;
        s.gini = gini;
        s.idf = 0.1;
        return s;
    };
    stats["a"] = mk(0.8, 3);
    stats["b"] = mk(0.8, 3);
    stats["c"] = mk(0.9, 3);

    auto all = select_vocabulary(stats, 10, 1, 100, 0);
    CHECK(all.terms() == std::vector<std::string>{"c", "a", "b"});

    auto top2 = select_vocabulary(stats, 10, 1, 2, 0);
    CHECK(top2.terms() == std::vector<std::string>{"c", "a"});

    auto top1 = select_vocabulary(stats, 10, 1, 1, 0);
    CHECK(top1.terms() == std::vector<std::string>{"c"});
}

TEST_CASE("min_df prunes rare terms and metadata bypasses the cap") {
    TermStatsMap stats;
    TermStats rare;
    rare.df = 1;
    rare.gini = 1.0;
    rare.idf = 2.0;
    rare.tf_related = 1;
    TermStats common = rare;
    common.df = 5;
    common.gini = 0.7;
    TermStats meta = common;
    meta.gini = 0.55;
    stats["rare"] = rare;
    stats["common"] = common;
    stats["META:ENT:e1"] = meta;

    auto vocab = select_vocabulary(stats, 10, 2, 1, 0);
    CHECK_FALSE(vocab.contains("rare"));
    CHECK(vocab.contains("common"));
    CHECK(vocab.contains("META:ENT:e1"));  // kept beyond top_k = 1
    CHECK(vocab.size() == 2);
}

TEST_CASE("vocabulary serialization round-trips") {
    Preprocessor prep;
    auto stats = compute_term_stats(toy_corpus(), prep, 2, ExecMode::serial);
    auto vocab = select_vocabulary(stats, 4, 1, 1000, 0xABCDEF);
    std::string text = vocab.to_jsonl();
    auto back = Vocabulary::from_jsonl(text);
    CHECK(back.terms() == vocab.terms());
    CHECK(back.train_messages() == vocab.train_messages());
    CHECK(back.prep_hash() == vocab.prep_hash());
    CHECK(back.to_jsonl() == text);
    REQUIRE(back.find("zug") != nullptr);
    CHECK(back.find("zug")->gini == vocab.find("zug")->gini);

    testutil::TempDir dir;
    vocab.save(dir.file("vocab.jsonl"));
    auto loaded = Vocabulary::load(dir.file("vocab.jsonl"));
    CHECK(loaded.to_jsonl() == text);
}

TEST_CASE("cosine similarity matches the closed form") {
    WeightedVector a, b;
    a.weights = {{"x", 1.0}, {"y", 2.0}};
    b.weights = {{"x", 2.0}, {"y", 1.0}, {"z", 0.0}};
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    WeightedVector empty;
    CHECK(cosine_similarity(a, empty) == doctest::Approx(0.0));
    CHECK(cosine_similarity(empty, empty) == doctest::Approx(0.0));
}

TEST_CASE("vectorize weighs vocabulary terms and skips the rest") {
    Preprocessor prep;
    auto stats = compute_term_stats(toy_corpus(), prep, 1, ExecMode::serial);
    auto vocab = select_vocabulary(stats, 4, 1, 1000, 0);

    auto msg = make_msg("q1", "e1", "zug zug novelword");
    auto vec = vectorize(msg, vocab, prep, 1);
    REQUIRE(vec.weights.count("zug") == 1);
    CHECK(vec.weights.count("novelword") == 0);
    CHECK(vec.weights["zug"] == doctest::Approx(2.0 * std::log(2.0) * 0.625).epsilon(1e-12));

    // metadata enters with tf 1 regardless of the text
    auto meta_msg = make_msg("q2", "e1", "zug", {}, 100, "someone");
    auto meta_vec = vectorize(meta_msg, vocab, prep, 1);
    CHECK(meta_vec.weights.count("META:USER:someone") == 0);  // idf 0 -> weight 0

    auto oov = make_msg("q3", "e9", "nothing matches here", {}, 100, "nobody", "fr");
    CHECK(vectorize(oov, vocab, prep, 1).empty());
}

TEST_CASE("scaling every term count scales the vector and keeps cosine fixed") {
    Preprocessor prep;
    auto stats = compute_term_stats(toy_corpus(), prep, 1, ExecMode::serial);
    auto vocab = select_vocabulary(stats, 4, 1, 1000, 0);

    auto once = vectorize(make_msg("q1", "e9", "zug even", {}, 100, "x"), vocab, prep, 1);
    auto thrice = vectorize(
        make_msg("q2", "e9", "zug even zug even zug even", {}, 100, "x"), vocab, prep, 1);
    REQUIRE_FALSE(once.empty());
    for (const auto& [term, w] : once.weights)
        CHECK(thrice.weights.at(term) == doctest::Approx(3.0 * w).epsilon(1e-12));

    WeightedVector probe;
    probe.weights = {{"zug", 0.5}, {"even", 1.5}};
    CHECK(cosine_similarity(once, probe) ==
          doctest::Approx(cosine_similarity(thrice, probe)).epsilon(1e-12));
}

TEST_CASE("weighted vector algebra behaves") {
    WeightedVector v;
    v.weights = {{"x", 3.0}, {"y", 4.0}};
    CHECK(v.norm() == doctest::Approx(5.0).epsilon(1e-12));
    WeightedVector w;
    w.weights = {{"y", 2.0}, {"z", 7.0}};
    CHECK(v.dot(w) == doctest::Approx(8.0).epsilon(1e-12));
    v.add(w);
    CHECK(v.weights.at("z") == doctest::Approx(7.0));
    CHECK(v.weights.at("y") == doctest::Approx(6.0));
    v.scale(0.5);
    CHECK(v.weights.at("x") == doctest::Approx(1.5));
}

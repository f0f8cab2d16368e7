#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "entifilt/classifiers.hpp"
#include "entifilt/rng.hpp"
#include "entifilt/eval.hpp"
#include "entifilt/forest.hpp"
#include "entifilt/merge.hpp"
#include "entifilt/parallel.hpp"
#include "entifilt/synth.hpp"
#include "entifilt/weighting.hpp"

using namespace entifilt;

namespace {

// Small but realistic workload shared by the serial/parallel comparisons.
struct Workload {
    SynthCorpus corpus;
    Preprocessor prep;
    Vocabulary vocab;
    Dataset eval_input;  // dev + test together

    Workload() {
        SynthParams params;
        params.seed = 23;
        params.per_entity = 150;
        corpus = generate_synth(params);
        std::set<std::string> ids;
        for (const auto& [id, _] : corpus.profiles) ids.insert(id);
        prep = Preprocessor({"the", "and", "que"}, ids);
        auto stats = compute_term_stats(corpus.train, prep, 2, ExecMode::serial);
        vocab = select_vocabulary(stats, static_cast<std::int64_t>(corpus.train.size()),
                                  2, 50000, prep.config_hash(PrepMode::cosine_knn, 2));
        for (const Message& m : corpus.dev.messages()) eval_input.add(m);
        for (const Message& m : corpus.test.messages()) eval_input.add(m);
    }
};

const Workload& workload() {
    static Workload w;
    return w;
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once") {
    set_num_threads(4);
    for (ExecMode mode : {ExecMode::serial, ExecMode::parallel}) {
        std::vector<int> hits(10000, 0);
        parallel_for(hits.size(), mode, [&](std::size_t i) { ++hits[i]; });
        CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 10000);
        CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
        CHECK(*std::max_element(hits.begin(), hits.end()) == 1);
    }
    CHECK(max_threads() >= 1);
}

TEST_CASE("synthetic corpus generation is seed-stable") {
    SynthParams params;
    params.seed = 23;
    params.per_entity = 150;
    auto again = generate_synth(params);
    const auto& w = workload();
    CHECK(dataset_to_jsonl(again.train) == dataset_to_jsonl(w.corpus.train));
    CHECK(dataset_to_jsonl(again.dev) == dataset_to_jsonl(w.corpus.dev));
    CHECK(dataset_to_jsonl(again.test) == dataset_to_jsonl(w.corpus.test));
    CHECK(profiles_to_jsonl(again.profiles) == profiles_to_jsonl(w.corpus.profiles));
    CHECK(again.train.size() + again.dev.size() + again.test.size() == 4 * 150);
    CHECK(again.profiles.size() == 4);

    params.seed = 24;
    auto other = generate_synth(params);
    CHECK(dataset_to_jsonl(other.train) != dataset_to_jsonl(w.corpus.train));
}

TEST_CASE("term statistics are identical in both execution modes") {
    const auto& w = workload();
    set_num_threads(4);
    auto serial = compute_term_stats(w.corpus.train, w.prep, 2, ExecMode::serial);
    auto parallel = compute_term_stats(w.corpus.train, w.prep, 2, ExecMode::parallel);
    REQUIRE(serial.size() == parallel.size());
    for (const auto& [term, s] : serial) {
        const TermStats& p = parallel.at(term);
        CHECK(s.df == p.df);
        CHECK(s.tf_related == p.tf_related);
        CHECK(s.tf_unrelated == p.tf_unrelated);
        CHECK(s.gini == p.gini);
        CHECK(s.idf == p.idf);
    }
}

TEST_CASE("vectorization is identical in both execution modes") {
    const auto& w = workload();
    set_num_threads(4);
    auto serial = vectorize_batch(w.corpus.train, w.vocab, w.prep, 2, ExecMode::serial);
    auto parallel = vectorize_batch(w.corpus.train, w.vocab, w.prep, 2, ExecMode::parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
        CHECK(serial[i].weights == parallel[i].weights);
}

TEST_CASE("cosine training and prediction are identical in both modes") {
    const auto& w = workload();
    set_num_threads(4);
    auto ms = train_cosine(w.corpus.train, w.vocab, w.prep, 2, ExecMode::serial);
    auto mp = train_cosine(w.corpus.train, w.vocab, w.prep, 2, ExecMode::parallel);
    CHECK(ms.to_json("h") == mp.to_json("h"));

    auto rs = predict_cosine_batch(ms, w.eval_input, w.vocab, w.prep, 2, ExecMode::serial);
    auto rp = predict_cosine_batch(ms, w.eval_input, w.vocab, w.prep, 2, ExecMode::parallel);
    CHECK(rs.to_jsonl("h") == rp.to_jsonl("h"));
}

TEST_CASE("knn indexing and prediction are identical in both modes") {
    const auto& w = workload();
    set_num_threads(4);
    auto is = build_knn_index(w.corpus.train, w.vocab, w.prep, 2, 5, ExecMode::serial);
    auto ip = build_knn_index(w.corpus.train, w.vocab, w.prep, 2, 5, ExecMode::parallel);
    CHECK(is.to_jsonl("h") == ip.to_jsonl("h"));

    auto rs = predict_knn_batch(is, w.eval_input, w.vocab, w.prep, 2, ExecMode::serial);
    auto rp = predict_knn_batch(is, w.eval_input, w.vocab, w.prep, 2, ExecMode::parallel);
    CHECK(rs.to_jsonl("h") == rp.to_jsonl("h"));
}

TEST_CASE("forest fits are identical in both modes") {
    FeatureMatrix x;
    x.rows = 300;
    x.cols = 6;
    x.values.resize(x.rows * x.cols);
    Rng rng(5);
    std::vector<Label> y(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t c = 0; c < x.cols; ++c) x.values[i * x.cols + c] = rng.unit();
        y[i] = x.at(i, 0) + x.at(i, 3) > 1.0 ? Label::related : Label::unrelated;
    }
    ForestParams params;
    params.n_trees = 40;
    params.seed = 17;
    set_num_threads(4);
    auto fs = fit_forest(x, y, params, ExecMode::serial);
    auto fp = fit_forest(x, y, params, ExecMode::parallel);
    CHECK(fs.to_json() == fp.to_json());

    auto ps = predict_forest_batch(fs, x, ExecMode::serial);
    auto pp = predict_forest_batch(fs, x, ExecMode::parallel);
    CHECK(ps == pp);
}

TEST_CASE("kba training and prediction are identical in both modes") {
    const auto& w = workload();
    set_num_threads(4);
    auto stream = EntityStream::from_dataset(w.corpus.train);
    ForestParams params;
    params.n_trees = 20;
    params.seed = 3;
    auto ms = train_kba(w.corpus.train, w.corpus.profiles, stream, w.prep, params,
                        ExecMode::serial);
    auto mp = train_kba(w.corpus.train, w.corpus.profiles, stream, w.prep, params,
                        ExecMode::parallel);
    CHECK(ms.to_json("h") == mp.to_json("h"));

    auto es = EntityStream::from_dataset(w.eval_input);
    auto rs = predict_kba_batch(ms, w.eval_input, w.corpus.profiles, es, w.prep,
                                ExecMode::serial);
    auto rp = predict_kba_batch(ms, w.eval_input, w.corpus.profiles, es, w.prep,
                                ExecMode::parallel);
    CHECK(rs.to_jsonl("h") == rp.to_jsonl("h"));
}

TEST_CASE("evaluation and fusion are identical in both modes") {
    const auto& w = workload();
    set_num_threads(4);
    auto model = train_cosine(w.corpus.train, w.vocab, w.prep, 2, ExecMode::serial);
    auto index = build_knn_index(w.corpus.train, w.vocab, w.prep, 2, 5, ExecMode::serial);
    auto a = predict_cosine_batch(model, w.eval_input, w.vocab, w.prep, 2,
                                  ExecMode::serial);
    auto b = predict_knn_batch(index, w.eval_input, w.vocab, w.prep, 2, ExecMode::serial);

    auto es = evaluate_run(a, w.corpus.test, 11, 1000, ExecMode::serial);
    auto ep = evaluate_run(a, w.corpus.test, 11, 1000, ExecMode::parallel);
    CHECK(report_to_json(es) == report_to_json(ep));

    for (Combiner c : {Combiner::lc, Combiner::electre, Combiner::promethee}) {
        auto fs = fuse_runs({a, b}, c, {}, "", ExecMode::serial);
        auto fp = fuse_runs({a, b}, c, {}, "", ExecMode::parallel);
        CHECK(fs.to_jsonl("h") == fp.to_jsonl("h"));
    }

    auto ns = strategy_naive({a, b}, w.corpus.dev, Combiner::lc, 0.05, {},
                             ExecMode::serial);
    auto np = strategy_naive({a, b}, w.corpus.dev, Combiner::lc, 0.05, {},
                             ExecMode::parallel);
    CHECK(ns.to_jsonl("h") == np.to_jsonl("h"));

    auto ms = strategy_mpms({a, b}, Combiner::lc, Combiner::lc, {}, ExecMode::serial);
    auto mp = strategy_mpms({a, b}, Combiner::lc, Combiner::lc, {}, ExecMode::parallel);
    CHECK(ms.to_jsonl("h") == mp.to_jsonl("h"));

    auto os = strategy_otb({a, b}, w.corpus.dev, ExecMode::serial);
    auto op = strategy_otb({a, b}, w.corpus.dev, ExecMode::parallel);
    CHECK(os.to_jsonl("h") == op.to_jsonl("h"));
}

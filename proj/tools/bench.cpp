#include <chrono>
#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "entifilt/classifiers.hpp"
#include "entifilt/eval.hpp"
#include "entifilt/forest.hpp"
#include "entifilt/parallel.hpp"
#include "entifilt/synth.hpp"
#include "entifilt/weighting.hpp"

namespace ef = entifilt;

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double time_ms(F&& f) {
    auto t0 = Clock::now();
    f();
    auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* kernel, double serial_ms, double parallel_ms) {
    std::printf("%-22s  %10.1f  %10.1f  %7.2fx\n", kernel, serial_ms, parallel_ms,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs parallel kernel timings"};
    std::size_t per_entity = 1500;
    std::uint64_t seed = 7;
    app.add_option("--per-entity", per_entity, "messages per entity");
    app.add_option("--seed", seed, "corpus seed");
    CLI11_PARSE(app, argc, argv);

    ef::SynthParams sp;
    sp.seed = seed;
    sp.per_entity = per_entity;
    ef::SynthCorpus corpus = ef::generate_synth(sp);
    ef::Preprocessor prep;
    const int n_max = 2;

    std::printf("%zu train / %zu test messages, %d thread(s)\n\n", corpus.train.size(),
                corpus.test.size(), ef::max_threads());
    std::printf("%-22s  %10s  %10s  %8s\n", "kernel", "serial ms", "parallel ms",
                "speedup");

    ef::TermStatsMap stats;
    double s = time_ms([&] {
        stats = ef::compute_term_stats(corpus.train, prep, n_max, ef::ExecMode::serial);
    });
    double p = time_ms([&] {
        stats = ef::compute_term_stats(corpus.train, prep, n_max, ef::ExecMode::parallel);
    });
    report("term statistics", s, p);

    ef::Vocabulary vocab = ef::select_vocabulary(
        stats, static_cast<std::int64_t>(corpus.train.size()), 2, 50000, 0);

    s = time_ms([&] {
        ef::vectorize_batch(corpus.test, vocab, prep, n_max, ef::ExecMode::serial);
    });
    p = time_ms([&] {
        ef::vectorize_batch(corpus.test, vocab, prep, n_max, ef::ExecMode::parallel);
    });
    report("vectorize", s, p);

    ef::KnnIndex index =
        ef::build_knn_index(corpus.train, vocab, prep, n_max, 5, ef::ExecMode::parallel);
    ef::SystemRun knn_run;
    s = time_ms([&] {
        knn_run = ef::predict_knn_batch(index, corpus.test, vocab, prep, n_max,
                                        ef::ExecMode::serial);
    });
    p = time_ms([&] {
        knn_run = ef::predict_knn_batch(index, corpus.test, vocab, prep, n_max,
                                        ef::ExecMode::parallel);
    });
    report("knn predict", s, p);

    ef::EntityStream stream = ef::EntityStream::from_dataset(corpus.train);
    ef::ForestParams fp;
    fp.n_trees = 100;
    fp.seed = seed;
    ef::KbaModel kba;
    s = time_ms([&] {
        kba = ef::train_kba(corpus.train, corpus.profiles, stream, prep, fp,
                            ef::ExecMode::serial);
    });
    p = time_ms([&] {
        kba = ef::train_kba(corpus.train, corpus.profiles, stream, prep, fp,
                            ef::ExecMode::parallel);
    });
    report("forest fit", s, p);

    ef::EntityStream test_stream = ef::EntityStream::from_dataset(corpus.test);
    s = time_ms([&] {
        ef::predict_kba_batch(kba, corpus.test, corpus.profiles, test_stream, prep,
                              ef::ExecMode::serial);
    });
    p = time_ms([&] {
        ef::predict_kba_batch(kba, corpus.test, corpus.profiles, test_stream, prep,
                              ef::ExecMode::parallel);
    });
    report("kba predict", s, p);

    s = time_ms([&] { ef::evaluate_run(knn_run, corpus.test, 0, 0, ef::ExecMode::serial); });
    p = time_ms([&] {
        ef::evaluate_run(knn_run, corpus.test, 0, 0, ef::ExecMode::parallel);
    });
    report("evaluate", s, p);
    return 0;
}

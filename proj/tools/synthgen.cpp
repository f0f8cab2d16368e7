#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "entifilt/corpus.hpp"
#include "entifilt/errors.hpp"
#include "entifilt/synth.hpp"

namespace ef = entifilt;

int main(int argc, char** argv) {
    CLI::App app{"generate an ambiguous-name corpus for pipeline experiments"};
    std::string out_dir = "synth";
    std::uint64_t seed = 1;
    std::size_t per_entity = 2000;
    double noise = 0.3;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--per-entity", per_entity, "messages per entity");
    app.add_option("--noise", noise, "train label noise fraction");
    CLI11_PARSE(app, argc, argv);

    try {
        ef::SynthParams params;
        params.seed = seed;
        params.per_entity = per_entity;
        params.label_noise = noise;
        ef::SynthCorpus corpus = ef::generate_synth(params);

        std::filesystem::create_directories(out_dir);
        auto at = [&](const char* name) {
            return (std::filesystem::path(out_dir) / name).string();
        };
        ef::save_dataset(corpus.train, at("train.jsonl"));
        ef::save_dataset(corpus.dev, at("dev.jsonl"));
        ef::save_dataset(corpus.test, at("test.jsonl"));
        ef::save_profiles(corpus.profiles, at("profiles.jsonl"));
        std::cout << "wrote " << corpus.train.size() << "/" << corpus.dev.size() << "/"
                  << corpus.test.size() << " train/dev/test messages to " << out_dir
                  << "\n";
        return 0;
    } catch (const ef::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entifilt/textprep.hpp"

namespace entifilt {

// Flat pipeline settings; file keys and CLI flags share these names.
struct PipelineConfig {
    std::string train;
    std::string dev;
    std::string test;
    std::string profiles;
    std::string model_dir = "models";
    std::vector<std::string> stoplists;

    int n_max = 2;
    std::int64_t min_df = 2;
    std::int64_t top_k = 50000;

    int knn_k = 5;
    int n_trees = 100;
    int max_features = 0;  // 0 -> ceil(sqrt(n_features))
    int min_leaf = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;  // the seed must be given explicitly

    std::string combiner = "lc";
    double c_star = 2.0 / 3.0;
    double veto = 0.5;
    double delta = 0.05;

    int threads = 0;  // 0 keeps the runtime default
    bool serial = false;
};

// key=value per line; '#' starts a comment. Unknown keys are fatal.
PipelineConfig load_config_file(const std::string& path);
void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value);

// Everything that changes trained artifacts or predictions, folded into one
// fingerprint; prediction refuses models whose recorded hash differs.
std::string pipeline_hash(const PipelineConfig& cfg, const Preprocessor& prep);

// Stoplist union plus the profile entity ids to drop from token streams.
Preprocessor build_preprocessor(const PipelineConfig& cfg,
                                const std::vector<std::string>& entity_ids);

}  // namespace entifilt

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "entifilt/corpus.hpp"

namespace entifilt {

// Generated ambiguous-name corpus: four entities (one per category) whose
// names also carry several unrelated senses. Related messages share one
// coherent topic vocabulary; unrelated messages scatter over three senses,
// so bag-level models face a harder class than instance-level ones.
struct SynthParams {
    std::uint64_t seed = 1;
    std::size_t per_entity = 2000;
    double train_frac = 0.5;  // remainder splits into dev_frac / test
    double dev_frac = 0.2;
    double label_noise = 0.3;  // applied to train gold labels only
};

struct SynthCorpus {
    Dataset train;  // noisy labels
    Dataset dev;    // clean labels
    Dataset test;   // clean labels
    std::map<std::string, EntityProfile> profiles;
};

SynthCorpus generate_synth(const SynthParams& params);

}  // namespace entifilt

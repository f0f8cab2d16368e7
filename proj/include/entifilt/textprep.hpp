#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "entifilt/corpus.hpp"

namespace entifilt {

enum class PrepMode { cosine_knn, kba };

const char* prep_mode_name(PrepMode m);

// One lowercase word per line, '#' starts a comment.
std::set<std::string> load_stoplist(const std::string& path);

// Camel-case and letter/digit boundaries; output is lowercased. Single-case
// tags come back whole.
std::vector<std::string> split_hashtag(const std::string& tag);

// Contiguous n-grams for 1 <= n <= n_max joined with '_', unigrams first.
// META: tokens are passed through untouched and never enter a joined n-gram.
// n_max must be in [1,4].
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n_max);

// META:USER:<author>, META:ENT:<entity_id>, META:LANG:<language>.
std::vector<std::string> metadata_tokens(const Message& msg);
// The KNN view keeps only the author and entity tokens.
std::vector<std::string> metadata_tokens_knn(const Message& msg);

bool is_metadata_token(const std::string& token);

std::string to_lower_utf8(const std::string& s);

// Sigil/URL counts over the raw text, before any cleaning; feeds the
// document-centric features.
struct RawCounts {
    int hashtags = 0;
    int mentions = 0;
    int urls = 0;
    long codepoints = 0;
    long uppercase = 0;
};
RawCounts scan_raw(const std::string& text);

class Preprocessor {
public:
    Preprocessor() = default;
    Preprocessor(std::set<std::string> stoplist, std::set<std::string> dropped_ids);

    // Tokenizes and cleans one message text: URLs out, punctuation and
    // symbols act as separators, leading '#'/'@' sigils stripped (kba mode
    // additionally splits hashtags), everything lowercased, stoplist words
    // and bare entity-id strings removed.
    std::vector<std::string> normalize(const std::string& text, PrepMode mode) const;

    // Lowercased punctuation-separated tokens with no filtering at all; the
    // KBA features use this view for name matching.
    static std::vector<std::string> plain_tokens(const std::string& text);

    const std::set<std::string>& stoplist() const { return stoplist_; }

    // Fingerprint of everything that changes tokenization output.
    std::uint64_t config_hash(PrepMode mode, int n_max) const;

private:
    std::set<std::string> stoplist_;
    std::set<std::string> dropped_ids_;
};

// The full term pipeline for the weighted representations: normalize in
// cosine_knn mode, expand n-grams, append the metadata tokens.
std::vector<std::string> message_terms(const Message& msg, const Preprocessor& prep,
                                       int n_max);

}  // namespace entifilt

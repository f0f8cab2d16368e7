#include "entifilt/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "entifilt/errors.hpp"
#include "entifilt/io.hpp"

namespace entifilt {

const char* prep_mode_name(PrepMode m) {
    return m == PrepMode::cosine_knn ? "cosine_knn" : "kba";
}

namespace {

constexpr std::uint32_t kReplacement = 0xFFFD;

// Decodes the codepoint starting at byte i and advances i past it. Malformed
// bytes decode one at a time to U+FFFD so no input can stall the scan.
std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char c = byte(i);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int len = 0;
    std::uint32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        len = 2;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        len = 3;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        len = 4;
        cp = c & 0x07;
    } else {
        ++i;
        return kReplacement;
    }
    if (i + len > s.size()) {
        ++i;
        return kReplacement;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char cc = byte(i + k);
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return kReplacement;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += len;
    return cp;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_space_cp(std::uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
           cp == '\v' || cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200A) ||
           cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
           cp == 0x3000;
}

// Approximation of Unicode categories P and S over the blocks that show up
// in short social-media text: ASCII punctuation, Latin-1 punctuation and
// signs, general punctuation, currency, arrows/math/dingbats, CJK
// punctuation, fullwidth forms and the emoji planes.
bool is_punct_cp(std::uint32_t cp) {
    if (cp < 0x80)
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    if (cp >= 0xA1 && cp <= 0xBF)
        return !(cp == 0xAA || cp == 0xB2 || cp == 0xB3 || cp == 0xB5 ||
                 cp == 0xB9 || cp == 0xBA);
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp >= 0x2000 && cp <= 0x206F) return !is_space_cp(cp);
    if (cp >= 0x20A0 && cp <= 0x20CF) return true;   // currency
    if (cp >= 0x2100 && cp <= 0x2BFF) return true;   // letterlike..misc symbols
    if (cp >= 0x2E00 && cp <= 0x2E7F) return true;
    if (cp >= 0x3001 && cp <= 0x303F) return true;   // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE6F) return true;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth punctuation
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return true; // emoji & friends
    return false;
}

bool is_digit_cp(std::uint32_t cp) { return cp >= '0' && cp <= '9'; }

std::uint32_t lower_cp(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp >= 0x100 && cp <= 0x177) {
        if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
        if (cp >= 0x14A) return (cp % 2 == 0) ? cp + 1 : cp;
        if (cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    return cp;
}

bool is_upper_cp(std::uint32_t cp) { return lower_cp(cp) != cp; }

bool is_letter_cp(std::uint32_t cp) {
    return !is_space_cp(cp) && !is_punct_cp(cp) && !is_digit_cp(cp);
}

bool starts_with_ci(const std::string& s, std::size_t pos, const char* prefix) {
    for (std::size_t k = 0; prefix[k]; ++k) {
        if (pos + k >= s.size()) return false;
        char c = s[pos + k];
        if (c >= 'A' && c <= 'Z') c += 32;
        if (c != prefix[k]) return false;
    }
    return true;
}

bool looks_like_url(const std::string& raw) {
    for (std::size_t k = 0; k < raw.size(); ++k)
        if (starts_with_ci(raw, k, "http://") || starts_with_ci(raw, k, "https://"))
            return true;
    // www. after any leading sigils or brackets
    std::size_t k = 0;
    while (k < raw.size()) {
        std::size_t at = k;
        std::uint32_t cp = decode_utf8(raw, k);
        if (cp == '#' || cp == '@' || is_punct_cp(cp)) continue;
        return starts_with_ci(raw, at, "www.");
    }
    return false;
}

}  // namespace

std::string to_lower_utf8(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) append_utf8(out, lower_cp(decode_utf8(s, i)));
    return out;
}

std::set<std::string> load_stoplist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stoplist: " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r\n");
        words.insert(to_lower_utf8(line.substr(b, e - b + 1)));
    }
    return words;
}

std::vector<std::string> split_hashtag(const std::string& tag) {
    std::vector<std::uint32_t> cps;
    std::size_t i = 0;
    while (i < tag.size()) cps.push_back(decode_utf8(tag, i));

    std::vector<std::string> out;
    std::string cur;
    for (std::size_t j = 0; j < cps.size(); ++j) {
        bool boundary = false;
        if (j > 0) {
            std::uint32_t prev = cps[j - 1], cp = cps[j];
            bool prev_alpha = is_letter_cp(prev), cur_alpha = is_letter_cp(cp);
            if (prev_alpha && cur_alpha) {
                if (!is_upper_cp(prev) && is_upper_cp(cp)) boundary = true;
                // ABCWord -> ABC Word
                if (is_upper_cp(prev) && is_upper_cp(cp) && j + 1 < cps.size() &&
                    is_letter_cp(cps[j + 1]) && !is_upper_cp(cps[j + 1]))
                    boundary = true;
            }
            if (prev_alpha && is_digit_cp(cp)) boundary = true;
            if (is_digit_cp(prev) && cur_alpha) boundary = true;
        }
        if (boundary && !cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
        append_utf8(cur, lower_cp(cps[j]));
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n_max) {
    if (n_max < 1 || n_max > 4)
        throw UsageError("n_max must be in [1,4], got " + std::to_string(n_max));

    std::vector<std::string> words, metas;
    for (const std::string& t : tokens)
        (is_metadata_token(t) ? metas : words).push_back(t);

    std::vector<std::string> out;
    for (int n = 1; n <= n_max; ++n) {
        if (words.size() < static_cast<std::size_t>(n)) break;
        for (std::size_t i = 0; i + n <= words.size(); ++i) {
            std::string gram = words[i];
            for (int k = 1; k < n; ++k) {
                gram += '_';
                gram += words[i + k];
            }
            out.push_back(std::move(gram));
        }
    }
    out.insert(out.end(), metas.begin(), metas.end());
    return out;
}

namespace {

std::string sanitize_meta_payload(const std::string& s) {
    std::string lowered = to_lower_utf8(s);
    std::string out;
    std::size_t i = 0;
    while (i < lowered.size()) {
        std::size_t at = i;
        std::uint32_t cp = decode_utf8(lowered, i);
        if (is_space_cp(cp) || cp == '#' || cp == '@') continue;
        out.append(lowered, at, i - at);
    }
    return out;
}

}  // namespace

std::vector<std::string> metadata_tokens(const Message& msg) {
    return {"META:USER:" + sanitize_meta_payload(msg.author),
            "META:ENT:" + sanitize_meta_payload(msg.entity_id),
            "META:LANG:" + sanitize_meta_payload(msg.language)};
}

std::vector<std::string> metadata_tokens_knn(const Message& msg) {
    return {"META:USER:" + sanitize_meta_payload(msg.author),
            "META:ENT:" + sanitize_meta_payload(msg.entity_id)};
}

bool is_metadata_token(const std::string& token) {
    return token.rfind("META:", 0) == 0;
}

RawCounts scan_raw(const std::string& text) {
    RawCounts counts;
    std::size_t i = 0;
    bool at_token_start = true;
    while (i < text.size()) {
        std::size_t at = i;
        std::uint32_t cp = decode_utf8(text, i);
        if (is_space_cp(cp)) {
            at_token_start = true;
            continue;
        }
        ++counts.codepoints;
        if (is_upper_cp(cp)) ++counts.uppercase;
        if (at_token_start) {
            if (cp == '#')
                ++counts.hashtags;
            else if (cp == '@')
                ++counts.mentions;
            else if (starts_with_ci(text, at, "http://") ||
                     starts_with_ci(text, at, "https://") ||
                     starts_with_ci(text, at, "www."))
                ++counts.urls;
        }
        at_token_start = false;
    }
    return counts;
}

Preprocessor::Preprocessor(std::set<std::string> stoplist,
                           std::set<std::string> dropped_ids)
    : stoplist_(std::move(stoplist)) {
    for (const std::string& id : dropped_ids)
        dropped_ids_.insert(to_lower_utf8(id));
}

std::vector<std::string> Preprocessor::normalize(const std::string& text,
                                                 PrepMode mode) const {
    std::vector<std::string> out;

    std::size_t i = 0;
    while (i < text.size()) {
        // next whitespace-delimited raw token
        std::size_t start = i;
        std::uint32_t cp = decode_utf8(text, i);
        if (is_space_cp(cp)) continue;
        std::size_t end = i;
        while (end < text.size()) {
            std::size_t next = end;
            if (is_space_cp(decode_utf8(text, next))) break;
            end = next;
        }
        std::string raw = text.substr(start, end - start);
        i = end;

        if (looks_like_url(raw)) continue;

        // strip leading sigils; remember hashtag-ness for kba splitting
        bool hashtag = false;
        std::size_t p = 0;
        while (p < raw.size()) {
            std::size_t q = p;
            std::uint32_t c = decode_utf8(raw, q);
            if (c == '#') {
                hashtag = true;
                p = q;
            } else if (c == '@') {
                p = q;
            } else {
                break;
            }
        }

        // split the rest into case-preserving pieces on punctuation
        std::vector<std::string> pieces;
        std::string cur;
        while (p < raw.size()) {
            std::size_t at = p;
            std::uint32_t c = decode_utf8(raw, p);
            if (is_punct_cp(c) || c == '#' || c == '@' || c == kReplacement) {
                if (!cur.empty()) {
                    pieces.push_back(cur);
                    cur.clear();
                }
            } else {
                cur.append(raw, at, p - at);
            }
        }
        if (!cur.empty()) pieces.push_back(cur);

        for (const std::string& piece : pieces) {
            std::vector<std::string> words;
            if (mode == PrepMode::kba && hashtag)
                words = split_hashtag(piece);
            else
                words.push_back(to_lower_utf8(piece));
            for (std::string& w : words) {
                if (w.empty()) continue;
                if (stoplist_.count(w)) continue;
                if (dropped_ids_.count(w)) continue;
                out.push_back(std::move(w));
            }
        }
    }
    return out;
}

std::vector<std::string> Preprocessor::plain_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::size_t i = 0;
    while (i <= text.size()) {
        std::uint32_t cp = 0;
        bool sep = true;
        if (i < text.size()) {
            cp = decode_utf8(text, i);
            sep = is_space_cp(cp) || is_punct_cp(cp) || cp == '#' || cp == '@' ||
                  cp == kReplacement;
        } else {
            ++i;
        }
        if (sep) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            append_utf8(cur, lower_cp(cp));
        }
    }
    return out;
}

std::uint64_t Preprocessor::config_hash(PrepMode mode, int n_max) const {
    std::ostringstream ss;
    ss << "mode=" << prep_mode_name(mode) << "\nn_max=" << n_max << "\nstop=";
    for (const std::string& w : stoplist_) ss << w << ',';
    ss << "\nids=";
    for (const std::string& w : dropped_ids_) ss << w << ',';
    return fnv1a64(ss.str());
}

std::vector<std::string> message_terms(const Message& msg, const Preprocessor& prep,
                                       int n_max) {
    std::vector<std::string> tokens = prep.normalize(msg.text, PrepMode::cosine_knn);
    std::vector<std::string> terms = ngrams(tokens, n_max);
    for (std::string& t : metadata_tokens(msg)) terms.push_back(std::move(t));
    return terms;
}

}  // namespace entifilt

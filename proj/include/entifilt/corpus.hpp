#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace entifilt {

enum class Label { related, unrelated };

inline const char* label_name(Label l) {
    return l == Label::related ? "RELATED" : "UNRELATED";
}

// Only the exact strings "RELATED"/"UNRELATED" are accepted; anything else is
// annotation drift and gets rejected at ingest.
std::optional<Label> parse_label(const std::string& s);

struct Message {
    std::string id;
    std::string entity_id;
    std::string author;
    std::string language;       // 2-letter code from the metadata
    std::int64_t timestamp = 0; // UTC epoch seconds, > 0
    std::string text;
    std::optional<Label> gold_label;
};

struct EntityProfile {
    std::string entity_id;
    std::string canonical_name;
    std::vector<std::string> aliases;
    std::string category; // automotive | banking | universities | music
    std::string profile_text;
    std::vector<std::string> homepage_tokens;
};

bool valid_category(const std::string& category);

enum class DatasetRole { train, dev, test };

// Immutable once loaded; safe to share across threads for reading.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(DatasetRole role) : role_(role) {}

    // Rejects duplicate ids.
    void add(Message m);

    const std::vector<Message>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }
    bool empty() const { return messages_.empty(); }

    const Message& at(std::size_t i) const { return messages_[i]; }
    const Message* find(const std::string& id) const;

    // Entity ids in sorted order with the indices of their messages.
    const std::map<std::string, std::vector<std::size_t>>& by_entity() const {
        return by_entity_;
    }

    DatasetRole role() const { return role_; }
    void set_role(DatasetRole r) { role_ = r; }

private:
    std::vector<Message> messages_;
    std::map<std::string, std::vector<std::size_t>> by_entity_;
    std::map<std::string, std::size_t> by_id_;
    DatasetRole role_ = DatasetRole::train;
};

enum class CorpusFormat { jsonl, tsv };

struct LoadReport {
    std::size_t loaded = 0;
    std::size_t rejected = 0;
    // (line number, reason), capped to the first 50 rejects.
    std::vector<std::pair<std::size_t, std::string>> rejects;
};

// Throws DataError if the file is unreadable or the reject count signals a
// wrong format (more than 10% of records, once past a handful of lines).
Dataset load_dataset(const std::string& path, CorpusFormat format,
                     LoadReport* report = nullptr,
                     DatasetRole role = DatasetRole::train);

// Canonical JSONL with fixed field order; load/save round-trips bit-exactly.
void save_dataset(const Dataset& dataset, const std::string& path);
std::string dataset_to_jsonl(const Dataset& dataset);

std::map<std::string, EntityProfile> load_profiles(const std::string& path);
std::string profiles_to_jsonl(const std::map<std::string, EntityProfile>& profiles);
void save_profiles(const std::map<std::string, EntityProfile>& profiles,
                   const std::string& path);

// Stratified by (entity_id, gold_label); strata smaller than 2 go wholly to
// train. Deterministic in (dataset, dev_fraction, seed). Throws UsageError on
// a dev_fraction outside (0,1) and DataError when unlabeled messages exist.
std::pair<Dataset, Dataset> split_train_dev(const Dataset& dataset,
                                            double dev_fraction,
                                            std::uint64_t seed);

struct EntityCounts {
    std::size_t total = 0;
    std::size_t related = 0;
    std::size_t unrelated = 0;
    std::size_t unlabeled = 0;
};

std::map<std::string, EntityCounts> dataset_stats(const Dataset& dataset);

}  // namespace entifilt

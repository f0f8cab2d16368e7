#include "entifilt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "entifilt/errors.hpp"
#include "entifilt/io.hpp"
#include "entifilt/rng.hpp"

namespace entifilt {

using nlohmann::ordered_json;

std::optional<Label> parse_label(const std::string& s) {
    if (s == "RELATED") return Label::related;
    if (s == "UNRELATED") return Label::unrelated;
    return std::nullopt;
}

bool valid_category(const std::string& category) {
    return category == "automotive" || category == "banking" ||
           category == "universities" || category == "music";
}

void Dataset::add(Message m) {
    if (by_id_.count(m.id))
        throw DataError("duplicate message id: " + m.id);
    by_id_.emplace(m.id, messages_.size());
    by_entity_[m.entity_id].push_back(messages_.size());
    messages_.push_back(std::move(m));
}

const Message* Dataset::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &messages_[it->second];
}

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Returns an error string, or empty and fills out.
std::string parse_json_record(const std::string& line, Message& out) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return "not a JSON object";
    auto str = [&](const char* key, std::string& dst) -> bool {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) return false;
        dst = it->get<std::string>();
        return true;
    };
    if (!str("id", out.id) || out.id.empty()) return "missing id";
    if (!str("entity_id", out.entity_id) || out.entity_id.empty())
        return "missing entity_id";
    if (!str("text", out.text)) return "missing text";
    str("author", out.author);
    str("language", out.language);
    if (auto it = j.find("timestamp"); it != j.end() && it->is_number())
        out.timestamp = it->get<std::int64_t>();
    else
        return "missing timestamp";
    if (auto it = j.find("gold_label"); it != j.end()) {
        if (!it->is_string()) return "gold_label not a string";
        auto l = parse_label(it->get<std::string>());
        if (!l) return "unknown gold_label \"" + it->get<std::string>() + "\"";
        out.gold_label = l;
    }
    return "";
}

// Columns: id, entity_id, author, language, timestamp, text[, gold_label]
std::string parse_tsv_record(const std::string& line, Message& out) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    if (cols.size() < 6 || cols.size() > 7) return "expected 6 or 7 columns";
    out.id = cols[0];
    out.entity_id = cols[1];
    out.author = cols[2];
    out.language = cols[3];
    try {
        out.timestamp = std::stoll(cols[4]);
    } catch (const std::exception&) {
        return "bad timestamp \"" + cols[4] + "\"";
    }
    out.text = cols[5];
    if (out.id.empty()) return "missing id";
    if (out.entity_id.empty()) return "missing entity_id";
    if (cols.size() == 7 && !cols[6].empty()) {
        auto l = parse_label(cols[6]);
        if (!l) return "unknown gold_label \"" + cols[6] + "\"";
        out.gold_label = l;
    }
    return "";
}

}  // namespace

Dataset load_dataset(const std::string& path, CorpusFormat format,
                     LoadReport* report, DatasetRole role) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    Dataset ds(role);
    LoadReport local;
    LoadReport& rep = report ? *report : local;

    std::string line;
    std::size_t lineno = 0;
    auto reject = [&](std::size_t ln, const std::string& why) {
        ++rep.rejected;
        if (rep.rejects.size() < 50) rep.rejects.emplace_back(ln, why);
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        Message m;
        std::string err = format == CorpusFormat::jsonl
                              ? parse_json_record(line, m)
                              : parse_tsv_record(line, m);
        if (err.empty()) {
            if (m.timestamp <= 0)
                err = "timestamp must be > 0";
            else if (trimmed(m.text).empty())
                err = "empty text";
            else if (ds.find(m.id))
                err = "duplicate id \"" + m.id + "\"";
        }
        if (!err.empty()) {
            reject(lineno, err);
            continue;
        }
        ds.add(std::move(m));
        ++rep.loaded;
    }

    // A high reject rate means the wrong format was selected. Tiny files get
    // an absolute allowance so a single bad line in a 4-line fixture is a
    // reject, not a fatal.
    std::size_t total = rep.loaded + rep.rejected;
    if (total > 0 && rep.rejected > std::max<std::size_t>(5, total / 10)) {
        std::ostringstream msg;
        msg << path << ": " << rep.rejected << " of " << total
            << " records rejected; wrong format?";
        if (!rep.rejects.empty())
            msg << " (line " << rep.rejects[0].first << ": "
                << rep.rejects[0].second << ")";
        throw DataError(msg.str());
    }
    return ds;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::string out;
    for (const Message& m : dataset.messages()) {
        ordered_json j;
        j["id"] = m.id;
        j["entity_id"] = m.entity_id;
        j["author"] = m.author;
        j["language"] = m.language;
        j["timestamp"] = m.timestamp;
        j["text"] = m.text;
        if (m.gold_label) j["gold_label"] = label_name(*m.gold_label);
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    atomic_write(path, dataset_to_jsonl(dataset));
}

std::map<std::string, EntityProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profiles file: " + path);
    std::map<std::string, EntityProfile> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": not a JSON object");
        EntityProfile p;
        p.entity_id = j.value("entity_id", "");
        p.canonical_name = j.value("canonical_name", "");
        p.category = j.value("category", "");
        p.profile_text = j.value("profile_text", "");
        if (j.contains("aliases"))
            p.aliases = j["aliases"].get<std::vector<std::string>>();
        if (j.contains("homepage_tokens"))
            p.homepage_tokens = j["homepage_tokens"].get<std::vector<std::string>>();
        if (p.entity_id.empty())
            throw DataError(path + ":" + std::to_string(lineno) + ": missing entity_id");
        if (p.canonical_name.empty())
            throw DataError(path + ":" + std::to_string(lineno) + ": missing canonical_name");
        if (!valid_category(p.category))
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": unknown category \"" + p.category + "\"");
        out[p.entity_id] = std::move(p);
    }
    return out;
}

std::string profiles_to_jsonl(const std::map<std::string, EntityProfile>& profiles) {
    std::string out;
    for (const auto& [_, p] : profiles) {
        ordered_json j;
        j["entity_id"] = p.entity_id;
        j["canonical_name"] = p.canonical_name;
        j["aliases"] = p.aliases;
        j["category"] = p.category;
        j["profile_text"] = p.profile_text;
        j["homepage_tokens"] = p.homepage_tokens;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

void save_profiles(const std::map<std::string, EntityProfile>& profiles,
                   const std::string& path) {
    atomic_write(path, profiles_to_jsonl(profiles));
}

std::pair<Dataset, Dataset> split_train_dev(const Dataset& dataset,
                                            double dev_fraction,
                                            std::uint64_t seed) {
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
        throw UsageError("dev_fraction must be in (0,1)");
    for (const Message& m : dataset.messages())
        if (!m.gold_label)
            throw DataError("split requires gold labels; message " + m.id +
                            " is unlabeled");

    // Strata keyed by (entity_id, label), visited in sorted order so the
    // result depends only on (data, fraction, seed).
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Message& m = dataset.at(i);
        strata[{m.entity_id, static_cast<int>(*m.gold_label)}].push_back(i);
    }

    std::vector<bool> to_dev(dataset.size(), false);
    std::uint64_t stratum_idx = 0;
    for (auto& [key, indices] : strata) {
        ++stratum_idx;
        if (indices.size() < 2) continue;  // whole stratum stays in train
        std::sort(indices.begin(), indices.end(),
                  [&](std::size_t a, std::size_t b) {
                      return dataset.at(a).id < dataset.at(b).id;
                  });
        Rng rng(mix_seed(seed, stratum_idx, 0x5914ULL));
        rng.shuffle(indices);
        auto n_dev = static_cast<std::size_t>(
            std::llround(dev_fraction * static_cast<double>(indices.size())));
        n_dev = std::min(n_dev, indices.size() - 1);
        for (std::size_t k = 0; k < n_dev; ++k) to_dev[indices[k]] = true;
    }

    Dataset train(DatasetRole::train), dev(DatasetRole::dev);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (to_dev[i])
            dev.add(dataset.at(i));
        else
            train.add(dataset.at(i));
    }
    return {std::move(train), std::move(dev)};
}

std::map<std::string, EntityCounts> dataset_stats(const Dataset& dataset) {
    std::map<std::string, EntityCounts> out;
    for (const Message& m : dataset.messages()) {
        EntityCounts& c = out[m.entity_id];
        ++c.total;
        if (!m.gold_label)
            ++c.unlabeled;
        else if (*m.gold_label == Label::related)
            ++c.related;
        else
            ++c.unrelated;
    }
    return out;
}

}  // namespace entifilt

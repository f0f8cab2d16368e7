#include "entifilt/config.hpp"

#include <cstdlib>
#include <sstream>

#include "entifilt/errors.hpp"
#include "entifilt/io.hpp"

namespace entifilt {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " needs an integer, got '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " needs a number, got '" + value + "'");
    }
}

bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw UsageError("config key " + key + " needs a boolean, got '" + value + "'");
}

}  // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "train") cfg.train = value;
    else if (key == "dev") cfg.dev = value;
    else if (key == "test") cfg.test = value;
    else if (key == "profiles") cfg.profiles = value;
    else if (key == "model_dir") cfg.model_dir = value;
    else if (key == "stoplists") cfg.stoplists = split_csv(value);
    else if (key == "n_max") cfg.n_max = static_cast<int>(parse_int(key, value));
    else if (key == "min_df") cfg.min_df = parse_int(key, value);
    else if (key == "top_k") cfg.top_k = parse_int(key, value);
    else if (key == "knn_k") cfg.knn_k = static_cast<int>(parse_int(key, value));
    else if (key == "n_trees") cfg.n_trees = static_cast<int>(parse_int(key, value));
    else if (key == "max_features") cfg.max_features = static_cast<int>(parse_int(key, value));
    else if (key == "min_leaf") cfg.min_leaf = static_cast<int>(parse_int(key, value));
    else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        cfg.seed_set = true;
    } else if (key == "combiner") {
        if (value != "lc" && value != "electre" && value != "promethee")
            throw UsageError("combiner must be lc, electre or promethee");
        cfg.combiner = value;
    } else if (key == "c_star") {
        cfg.c_star = parse_real(key, value);
        if (cfg.c_star <= 0.5 || cfg.c_star > 1.0)
            throw UsageError("c_star must lie in (0.5, 1]");
    } else if (key == "veto") {
        cfg.veto = parse_real(key, value);
        if (cfg.veto <= 0.0 || cfg.veto > 1.0)
            throw UsageError("veto must lie in (0, 1]");
    } else if (key == "delta") {
        cfg.delta = parse_real(key, value);
        if (cfg.delta < 0.0 || cfg.delta > 1.0)
            throw UsageError("delta must lie in [0, 1]");
    } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "serial") {
        cfg.serial = parse_flag(key, value);
    } else {
        throw UsageError("unknown config key '" + key + "'");
    }
}

PipelineConfig load_config_file(const std::string& path) {
    PipelineConfig cfg;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) +
                             ": expected key=value");
        apply_config_entry(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

std::string pipeline_hash(const PipelineConfig& cfg, const Preprocessor& prep) {
    std::ostringstream canon;
    canon << "n_max=" << cfg.n_max << ";min_df=" << cfg.min_df << ";top_k=" << cfg.top_k
          << ";knn_k=" << cfg.knn_k << ";n_trees=" << cfg.n_trees
          << ";max_features=" << cfg.max_features << ";min_leaf=" << cfg.min_leaf
          << ";seed=" << cfg.seed
          << ";prep=" << hash_hex(prep.config_hash(PrepMode::cosine_knn, cfg.n_max))
          << ";prep_kba=" << hash_hex(prep.config_hash(PrepMode::kba, cfg.n_max));
    return hash_hex(fnv1a64(canon.str()));
}

Preprocessor build_preprocessor(const PipelineConfig& cfg,
                                const std::vector<std::string>& entity_ids) {
    std::set<std::string> stop;
    for (const std::string& path : cfg.stoplists) {
        std::set<std::string> one = load_stoplist(path);
        stop.insert(one.begin(), one.end());
    }
    std::set<std::string> dropped;
    for (const std::string& id : entity_ids) dropped.insert(to_lower_utf8(id));
    return Preprocessor(std::move(stop), std::move(dropped));
}

}  // namespace entifilt

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "entifilt/classifiers.hpp"
#include "entifilt/config.hpp"
#include "entifilt/corpus.hpp"
#include "entifilt/errors.hpp"
#include "entifilt/eval.hpp"
#include "entifilt/io.hpp"
#include "entifilt/merge.hpp"
#include "entifilt/parallel.hpp"
#include "entifilt/weighting.hpp"

namespace ef = entifilt;
using nlohmann::ordered_json;

namespace {

struct CommonArgs {
    std::string config_path;
    // Flag overrides in the order given; applied on top of the config file.
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value configuration file");
    static const std::vector<std::string> keys = {
        "train",    "dev",     "test",         "profiles", "model_dir",
        "stoplists", "n_max",  "min_df",       "top_k",    "knn_k",
        "n_trees",  "max_features", "min_leaf", "seed",    "combiner",
        "c_star",   "veto",    "delta",        "threads",  "serial"};
    for (const std::string& key : keys)
        cmd->add_option_function<std::string>(
            "--" + key,
            [&args, key](const std::string& v) { args.overrides.emplace_back(key, v); },
            "config override");
}

ef::PipelineConfig resolve_config(const CommonArgs& args) {
    ef::PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = ef::load_config_file(args.config_path);
    for (const auto& [k, v] : args.overrides) ef::apply_config_entry(cfg, k, v);
    if (cfg.threads > 0) ef::set_num_threads(cfg.threads);
    return cfg;
}

ef::ExecMode exec_mode(const ef::PipelineConfig& cfg) {
    return cfg.serial ? ef::ExecMode::serial : ef::ExecMode::parallel;
}

ef::CorpusFormat format_of(const std::string& path) {
    return path.size() >= 4 && path.substr(path.size() - 4) == ".tsv"
               ? ef::CorpusFormat::tsv
               : ef::CorpusFormat::jsonl;
}

ef::Dataset load_data(const std::string& path, ef::DatasetRole role) {
    if (path.empty()) throw ef::UsageError("no dataset path given");
    return ef::load_dataset(path, format_of(path), nullptr, role);
}

void require_seed(const ef::PipelineConfig& cfg) {
    if (!cfg.seed_set) throw ef::UsageError("seed must be set explicitly");
}

std::vector<std::string> profile_ids(const std::map<std::string, ef::EntityProfile>& ps) {
    std::vector<std::string> ids;
    for (const auto& [id, _] : ps) ids.push_back(id);
    return ids;
}

std::string model_path(const ef::PipelineConfig& cfg, const char* name) {
    return (std::filesystem::path(cfg.model_dir) / name).string();
}

// ---- train ----

int cmd_train(const CommonArgs& args, const std::string& system) {
    ef::PipelineConfig cfg = resolve_config(args);
    require_seed(cfg);
    ef::ExecMode mode = exec_mode(cfg);
    bool want_cosine = system == "cosine" || system == "all";
    bool want_knn = system == "knn" || system == "all";
    bool want_kba = system == "kba" || system == "all";

    std::map<std::string, ef::EntityProfile> profiles;
    if (!cfg.profiles.empty()) profiles = ef::load_profiles(cfg.profiles);
    if (want_kba && profiles.empty())
        throw ef::UsageError("kba training needs a profiles file (set profiles=...)");

    ef::Dataset train = load_data(cfg.train, ef::DatasetRole::train);
    ef::Preprocessor prep = ef::build_preprocessor(cfg, profile_ids(profiles));
    std::string hash = ef::pipeline_hash(cfg, prep);
    std::filesystem::create_directories(cfg.model_dir);

    std::int64_t labeled = 0;
    for (const ef::Message& m : train.messages())
        if (m.gold_label) ++labeled;

    ef::TermStatsMap stats = ef::compute_term_stats(train, prep, cfg.n_max, mode);
    ef::Vocabulary vocab = ef::select_vocabulary(
        stats, labeled, cfg.min_df, static_cast<std::size_t>(cfg.top_k),
        prep.config_hash(ef::PrepMode::cosine_knn, cfg.n_max));
    vocab.save(model_path(cfg, "vocabulary.jsonl"));

    ordered_json manifest;
    manifest["type"] = "manifest";
    manifest["config_hash"] = hash;
    manifest["seed"] = cfg.seed;
    manifest["vocabulary"] = "vocabulary.jsonl";
    ordered_json systems = ordered_json::array();

    if (want_cosine) {
        ef::CosineModel m = ef::train_cosine(train, vocab, prep, cfg.n_max, mode);
        ef::atomic_write(model_path(cfg, "cosine.json"), m.to_json(hash));
        systems.push_back("cosine");
    }
    if (want_knn) {
        ef::KnnIndex index =
            ef::build_knn_index(train, vocab, prep, cfg.n_max, cfg.knn_k, mode);
        ef::atomic_write(model_path(cfg, "knn.jsonl"), index.to_jsonl(hash));
        systems.push_back("knn");
    }
    if (want_kba) {
        ef::EntityStream stream = ef::EntityStream::from_dataset(train);
        ef::ForestParams params{cfg.n_trees, cfg.max_features, cfg.min_leaf, cfg.seed};
        ef::KbaModel m = ef::train_kba(train, profiles, stream, prep, params, mode);
        ef::atomic_write(model_path(cfg, "kba.json"), m.to_json(hash));
        systems.push_back("kba");
    }
    manifest["systems"] = std::move(systems);
    ef::atomic_write(model_path(cfg, "manifest.json"), manifest.dump(2) + "\n");
    std::cout << "trained " << manifest["systems"].size() << " system(s) into "
              << cfg.model_dir << " (config " << hash << ")\n";
    return 0;
}

// ---- predict ----

void check_hash(const std::string& stored, const std::string& expected,
                const std::string& what) {
    if (stored != expected)
        throw ef::DataError(what + " was trained under config " + stored +
                            " but the current config hashes to " + expected);
}

int cmd_predict(const CommonArgs& args, const std::string& system,
                const std::string& input, const std::string& output) {
    ef::PipelineConfig cfg = resolve_config(args);
    require_seed(cfg);
    ef::ExecMode mode = exec_mode(cfg);

    std::map<std::string, ef::EntityProfile> profiles;
    if (!cfg.profiles.empty()) profiles = ef::load_profiles(cfg.profiles);
    if (system == "kba" && profiles.empty())
        throw ef::UsageError("kba prediction needs a profiles file (set profiles=...)");

    ef::Dataset data = load_data(input, ef::DatasetRole::test);
    ef::Preprocessor prep = ef::build_preprocessor(cfg, profile_ids(profiles));
    std::string hash = ef::pipeline_hash(cfg, prep);

    ef::SystemRun run;
    if (system == "cosine") {
        std::string stored;
        ef::CosineModel m =
            ef::CosineModel::from_json(ef::read_file(model_path(cfg, "cosine.json")), &stored);
        check_hash(stored, hash, "cosine model");
        ef::Vocabulary vocab = ef::Vocabulary::load(model_path(cfg, "vocabulary.jsonl"));
        run = ef::predict_cosine_batch(m, data, vocab, prep, cfg.n_max, mode);
    } else if (system == "knn") {
        std::string stored;
        ef::KnnIndex index =
            ef::KnnIndex::from_jsonl(ef::read_file(model_path(cfg, "knn.jsonl")), &stored);
        check_hash(stored, hash, "knn index");
        ef::Vocabulary vocab = ef::Vocabulary::load(model_path(cfg, "vocabulary.jsonl"));
        run = ef::predict_knn_batch(index, data, vocab, prep, cfg.n_max, mode);
    } else if (system == "kba") {
        std::string stored;
        ef::KbaModel m =
            ef::KbaModel::from_json(ef::read_file(model_path(cfg, "kba.json")), &stored);
        check_hash(stored, hash, "kba model");
        ef::EntityStream stream = ef::EntityStream::from_dataset(data);
        run = ef::predict_kba_batch(m, data, profiles, stream, prep, mode);
    } else {
        throw ef::UsageError("unknown system '" + system + "'");
    }
    run.save(output, hash);
    std::cout << "wrote " << run.size() << " prediction(s) to " << output << "\n";
    return 0;
}

// ---- merge ----

int cmd_merge(const CommonArgs& args, const std::vector<std::string>& run_paths,
              const std::string& strategy, const std::string& output) {
    ef::PipelineConfig cfg = resolve_config(args);
    ef::ExecMode mode = exec_mode(cfg);
    if (run_paths.empty()) throw ef::UsageError("merge needs at least one run file");

    std::vector<ef::SystemRun> runs;
    runs.reserve(run_paths.size());
    for (const std::string& p : run_paths) runs.push_back(ef::SystemRun::load(p));

    ef::ElectreParams ep{cfg.c_star, cfg.veto};
    auto dev = [&]() {
        if (cfg.dev.empty())
            throw ef::UsageError("strategy '" + strategy + "' needs dev=... for selection");
        return load_data(cfg.dev, ef::DatasetRole::dev);
    };

    ef::SystemRun merged;
    if (strategy == "lc" || strategy == "electre" || strategy == "promethee") {
        merged = ef::fuse_runs(runs, *ef::parse_combiner(strategy), ep, strategy, mode);
    } else if (strategy == "naive-lc") {
        merged = ef::strategy_naive(runs, dev(), ef::Combiner::lc, cfg.delta, ep, mode);
    } else if (strategy == "naive-electre") {
        merged = ef::strategy_naive(runs, dev(), ef::Combiner::electre, cfg.delta, ep, mode);
    } else if (strategy == "mpms") {
        merged = ef::strategy_mpms(runs, ef::Combiner::lc, ef::Combiner::lc, ep, mode);
    } else if (strategy == "otb") {
        merged = ef::strategy_otb(runs, dev(), mode);
    } else {
        throw ef::UsageError(
            "unknown strategy '" + strategy +
            "' (expected naive-lc, naive-electre, mpms, otb, lc, electre, promethee)");
    }
    merged.header_extras["strategy"] = strategy;
    merged.save(output);
    std::cout << "merged " << runs.size() << " run(s) with " << strategy << " into "
              << output << "\n";
    return 0;
}

// ---- evaluate ----

int cmd_evaluate(const CommonArgs& args, const std::vector<std::string>& run_paths,
                 const std::string& gold_path, const std::string& json_path,
                 bool micro, int n_boot) {
    ef::PipelineConfig cfg = resolve_config(args);
    ef::ExecMode mode = exec_mode(cfg);
    if (run_paths.empty()) throw ef::UsageError("evaluate needs at least one run file");
    ef::Dataset gold = load_data(gold_path.empty() ? cfg.test : gold_path,
                                 ef::DatasetRole::test);

    struct Row {
        std::string system;
        ef::EvalReport report;
    };
    std::vector<Row> rows;
    for (const std::string& p : run_paths) {
        ef::SystemRun run = ef::SystemRun::load(p);
        rows.push_back({run.system(), ef::evaluate_run(run, gold, cfg.seed, n_boot, mode)});
    }
    // Table-style listing: best F first.
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.report.f_measure.value_or(-1.0) > b.report.f_measure.value_or(-1.0);
    });

    if (rows.size() == 1) {
        std::cout << ef::report_to_text(rows[0].report, micro);
    } else {
        auto fmt = [](const std::optional<double>& v) {
            if (!v) return std::string("-");
            char buf[16];
            std::snprintf(buf, sizeof buf, "%.3f", *v);
            return std::string(buf);
        };
        std::size_t width = 6;
        for (const Row& r : rows) width = std::max(width, r.system.size());
        std::printf("%-*s  %11s  %11s  %11s  %11s\n", static_cast<int>(width), "System",
                    "Accuracy", "Reliability", "Sensitivity", "F-Measure");
        for (const Row& r : rows)
            std::printf("%-*s  %11s  %11s  %11s  %11s\n", static_cast<int>(width),
                        r.system.c_str(), fmt(r.report.accuracy).c_str(),
                        fmt(r.report.reliability).c_str(), fmt(r.report.sensitivity).c_str(),
                        fmt(r.report.f_measure).c_str());
    }
    if (!json_path.empty()) {
        if (rows.size() == 1) {
            ef::atomic_write(json_path, ef::report_to_json(rows[0].report));
        } else {
            std::string out = "[\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                ordered_json entry;
                entry["system"] = rows[i].system;
                entry["report"] = ordered_json::parse(ef::report_to_json(rows[i].report));
                out += entry.dump(2);
                out += i + 1 < rows.size() ? ",\n" : "\n";
            }
            out += "]\n";
            ef::atomic_write(json_path, out);
        }
    }
    return 0;
}

// ---- stats ----

int cmd_stats(const std::string& input) {
    ef::Dataset data = load_data(input, ef::DatasetRole::train);
    auto stats = ef::dataset_stats(data);
    std::size_t width = 6;
    for (const auto& [id, _] : stats) width = std::max(width, id.size());
    std::printf("%-*s  %8s  %8s  %10s  %10s\n", static_cast<int>(width), "Entity", "Total",
                "Related", "Unrelated", "Unlabeled");
    ef::EntityCounts all;
    for (const auto& [id, c] : stats) {
        std::printf("%-*s  %8zu  %8zu  %10zu  %10zu\n", static_cast<int>(width), id.c_str(),
                    c.total, c.related, c.unrelated, c.unlabeled);
        all.total += c.total;
        all.related += c.related;
        all.unrelated += c.unrelated;
        all.unlabeled += c.unlabeled;
    }
    std::printf("%-*s  %8zu  %8zu  %10zu  %10zu\n", static_cast<int>(width), "ALL", all.total,
                all.related, all.unrelated, all.unlabeled);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entity filtering pipeline: train, predict, merge, evaluate"};
    app.require_subcommand(1);

    CommonArgs train_args;
    std::string train_system = "all";
    CLI::App* train = app.add_subcommand("train", "fit models and write artifacts");
    add_config_flags(train, train_args);
    train->add_option("--system", train_system, "cosine, knn, kba or all")
        ->check(CLI::IsMember({"cosine", "knn", "kba", "all"}));

    CommonArgs predict_args;
    std::string predict_system, predict_input, predict_output;
    CLI::App* predict = app.add_subcommand("predict", "score messages with one system");
    add_config_flags(predict, predict_args);
    predict->add_option("--system", predict_system, "cosine, knn or kba")
        ->required()
        ->check(CLI::IsMember({"cosine", "knn", "kba"}));
    predict->add_option("--input", predict_input, "dataset to score")->required();
    predict->add_option("--output", predict_output, "run file to write")->required();

    CommonArgs merge_args;
    std::vector<std::string> merge_runs;
    std::string merge_strategy, merge_output;
    CLI::App* merge = app.add_subcommand("merge", "fuse run files into one");
    add_config_flags(merge, merge_args);
    merge->add_option("--run", merge_runs, "input run file (repeatable)")->required();
    merge->add_option("--strategy", merge_strategy,
                      "naive-lc, naive-electre, mpms, otb, lc, electre, promethee")
        ->required();
    merge->add_option("--output", merge_output, "merged run file")->required();

    CommonArgs eval_args;
    std::vector<std::string> eval_runs;
    std::string eval_gold, eval_json;
    bool eval_micro = false;
    int eval_boot = 1000;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score runs against gold labels");
    add_config_flags(evaluate, eval_args);
    evaluate->add_option("--run", eval_runs, "run file (repeatable)")->required();
    evaluate->add_option("--gold", eval_gold, "gold dataset (defaults to test=...)");
    evaluate->add_option("--json", eval_json, "also write a JSON report here");
    evaluate->add_flag("--micro", eval_micro, "include pooled metrics");
    evaluate->add_option("--bootstrap", eval_boot, "F bootstrap replicates (0 skips)");

    std::string stats_input;
    CLI::App* stats = app.add_subcommand("stats", "per-entity label counts");
    stats->add_option("--input", stats_input, "dataset file")->required();

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(train_args, train_system);
        if (*predict)
            return cmd_predict(predict_args, predict_system, predict_input, predict_output);
        if (*merge) return cmd_merge(merge_args, merge_runs, merge_strategy, merge_output);
        if (*evaluate)
            return cmd_evaluate(eval_args, eval_runs, eval_gold, eval_json, eval_micro,
                                eval_boot);
        if (*stats) return cmd_stats(stats_input);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ef::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ef::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ef::InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}

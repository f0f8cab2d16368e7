#include "entifilt/merge.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "entifilt/errors.hpp"
#include "entifilt/eval.hpp"

namespace entifilt {

const char* combiner_name(Combiner c) {
    switch (c) {
        case Combiner::lc: return "lc";
        case Combiner::electre: return "electre";
        case Combiner::promethee: return "promethee";
    }
    return "lc";
}

std::optional<Combiner> parse_combiner(const std::string& s) {
    if (s == "lc") return Combiner::lc;
    if (s == "electre") return Combiner::electre;
    if (s == "promethee") return Combiner::promethee;
    return std::nullopt;
}

Label linear_combination(const ScoreMatrix& m) {
    double sum_related = 0.0, sum_unrelated = 0.0;
    for (const auto& [r, u] : m.rows) {
        sum_related += r;
        sum_unrelated += u;
    }
    return sum_related >= sum_unrelated ? Label::related : Label::unrelated;
}

double concordance(const ScoreMatrix& m, Label l, Label l2) {
    int wins = 0;
    for (std::size_t j = 0; j < m.rows.size(); ++j)
        if (m.score(j, l) > m.score(j, l2)) ++wins;
    return static_cast<double>(wins) / static_cast<double>(m.rows.size());
}

bool over_ranks(const ScoreMatrix& m, Label l, Label l2, const ElectreParams& params) {
    if (concordance(m, l, l2) < params.concordance_threshold) return false;
    for (std::size_t j = 0; j < m.rows.size(); ++j) {
        double margin = m.score(j, l2) - m.score(j, l);
        if (margin > params.veto) return false;
    }
    return true;
}

Label electre_select(const ScoreMatrix& m, const ElectreParams& params) {
    bool r_over_u = over_ranks(m, Label::related, Label::unrelated, params);
    bool u_over_r = over_ranks(m, Label::unrelated, Label::related, params);
    if (r_over_u && !u_over_r) return Label::related;
    if (u_over_r && !r_over_u) return Label::unrelated;
    // Kernel is empty or holds both labels; Eq. 1 decides instead.
    return linear_combination(m);
}

double promethee_net(const ScoreMatrix& m, Label l) {
    Label other = l == Label::related ? Label::unrelated : Label::related;
    return concordance(m, l, other) - concordance(m, other, l);
}

Label promethee_select(const ScoreMatrix& m) {
    return promethee_net(m, Label::related) >= promethee_net(m, Label::unrelated)
               ? Label::related
               : Label::unrelated;
}

namespace {

void check_aligned(const std::vector<SystemRun>& runs) {
    if (runs.empty()) throw UsageError("no runs to merge");
    const SystemRun& first = runs[0];
    for (std::size_t r = 1; r < runs.size(); ++r) {
        std::vector<std::string> only_first, only_other;
        for (const Prediction& p : first.predictions())
            if (!runs[r].find(p.message_id)) only_first.push_back(p.message_id);
        for (const Prediction& p : runs[r].predictions())
            if (!first.find(p.message_id)) only_other.push_back(p.message_id);
        if (only_first.empty() && only_other.empty()) continue;
        std::ostringstream msg;
        msg << "runs " << first.system() << " and " << runs[r].system()
            << " cover different messages;";
        auto list = [&](const char* side, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            msg << " only in " << side << ":";
            for (std::size_t i = 0; i < ids.size() && i < 10; ++i) msg << ' ' << ids[i];
            if (ids.size() > 10) msg << " (+" << ids.size() - 10 << " more)";
        };
        list(first.system().c_str(), only_first);
        list(runs[r].system().c_str(), only_other);
        throw DataError(msg.str());
    }
}

std::string joined_names(const std::vector<SystemRun>& runs) {
    std::string out;
    for (const SystemRun& r : runs) {
        if (!out.empty()) out.push_back(',');
        out += r.system();
    }
    return out;
}

double dev_f(const SystemRun& run, const Dataset& dev, ExecMode mode) {
    return evaluate_run(run, dev, 0, 0, mode).f_measure.value_or(0.0);
}

}  // namespace

SystemRun fuse_runs(const std::vector<SystemRun>& runs, Combiner combiner,
                    const ElectreParams& params, const std::string& name,
                    ExecMode mode) {
    check_aligned(runs);
    const auto& order = runs[0].predictions();
    std::vector<Prediction> slots(order.size());
    parallel_for(order.size(), mode, [&](std::size_t i) {
        const std::string& id = order[i].message_id;
        ScoreMatrix m;
        m.rows.reserve(runs.size());
        for (const SystemRun& run : runs) {
            const Prediction* p = run.find(id);
            m.rows.emplace_back(p->score_related, p->score_unrelated);
        }
        if (combiner == Combiner::lc) {
            double sr = 0.0, su = 0.0;
            for (const auto& [r, u] : m.rows) {
                sr += r;
                su += u;
            }
            slots[i] = make_prediction(id, sr, su);
        } else {
            Label chosen = combiner == Combiner::electre ? electre_select(m, params)
                                                         : promethee_select(m);
            slots[i] = make_prediction(id, chosen == Label::related ? 1.0 : 0.0,
                                       chosen == Label::related ? 0.0 : 1.0);
        }
    });

    SystemRun merged(name.empty() ? std::string(combiner_name(combiner)) : name);
    for (Prediction& p : slots) merged.add(std::move(p));
    merged.header_extras["combiner"] = combiner_name(combiner);
    merged.header_extras["inputs"] = joined_names(runs);
    if (combiner == Combiner::electre) {
        merged.header_extras["c_star"] = std::to_string(params.concordance_threshold);
        merged.header_extras["veto"] = std::to_string(params.veto);
    }
    return merged;
}

SystemRun strategy_naive(const std::vector<SystemRun>& runs, const Dataset& dev,
                         Combiner combiner, double delta,
                         const ElectreParams& params, ExecMode mode) {
    if (runs.size() < 2) throw UsageError("naive strategy needs at least 2 runs");
    if (combiner == Combiner::promethee)
        throw UsageError("naive strategy fuses with lc or electre");

    std::vector<double> fs(runs.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        fs[i] = dev_f(runs[i], dev, mode);
        if (fs[i] > fs[best]) best = i;
    }
    std::vector<SystemRun> kept;
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (fs[i] >= fs[best] - delta) kept.push_back(runs[i]);

    std::string name = std::string("naive-") + combiner_name(combiner);
    if (kept.size() < 2) {
        SystemRun out = runs[best];
        out.header_extras["strategy"] = name;
        out.header_extras["kept"] = out.system();
        return out;
    }
    SystemRun out = fuse_runs(kept, combiner, params, name, mode);
    out.header_extras["strategy"] = name;
    out.header_extras["kept"] = joined_names(kept);
    out.header_extras["delta"] = std::to_string(delta);
    return out;
}

SystemRun strategy_mpms(const std::vector<SystemRun>& runs, Combiner pass1,
                        Combiner pass2, const ElectreParams& params, ExecMode mode) {
    if (runs.size() < 2) throw UsageError("mpms needs at least 2 runs");
    std::vector<SystemRun> pairs;
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            std::string name = runs[i].system() + "+" + runs[j].system();
            pairs.push_back(fuse_runs({runs[i], runs[j]}, pass1, params, name, mode));
        }
    SystemRun out = pairs.size() == 1
                        ? std::move(pairs[0])
                        : fuse_runs(pairs, pass2, params, "mpms", mode);
    out.set_system("mpms");
    out.header_extras["strategy"] = "mpms";
    out.header_extras["inputs"] = joined_names(runs);
    out.header_extras["pass1"] = combiner_name(pass1);
    out.header_extras["pass2"] = combiner_name(pass2);
    return out;
}

SystemRun strategy_otb(const std::vector<SystemRun>& runs, const Dataset& dev,
                       ExecMode mode) {
    if (runs.size() < 2) throw UsageError("otb needs at least 2 runs");
    std::vector<EvalReport> reports;
    reports.reserve(runs.size());
    for (const SystemRun& run : runs) reports.push_back(evaluate_run(run, dev, 0, 0, mode));

    auto best_by = [&](auto&& measure) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < runs.size(); ++i)
            if (measure(reports[i]) > measure(reports[best])) best = i;
        return best;
    };
    std::size_t by_acc = best_by([](const EvalReport& r) { return r.accuracy; });
    std::size_t by_rel =
        best_by([](const EvalReport& r) { return r.reliability.value_or(0.0); });
    std::size_t by_sen =
        best_by([](const EvalReport& r) { return r.sensitivity.value_or(0.0); });

    std::vector<std::size_t> picks;
    for (std::size_t i : {by_acc, by_rel, by_sen})
        if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
    std::sort(picks.begin(), picks.end());

    if (picks.size() == 1) {
        SystemRun out = runs[picks[0]];
        out.header_extras["strategy"] = "otb";
        out.header_extras["kept"] = out.system();
        return out;
    }
    std::vector<SystemRun> selected;
    for (std::size_t i : picks) selected.push_back(runs[i]);
    SystemRun out = fuse_runs(selected, Combiner::lc, {}, "otb", mode);
    out.header_extras["strategy"] = "otb";
    out.header_extras["kept"] = joined_names(selected);
    return out;
}

}  // namespace entifilt

#include "entifilt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "entifilt/errors.hpp"
#include "entifilt/rng.hpp"

namespace entifilt {

using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kBootstrapSalt = 0xE7A1ULL;

std::int64_t pairs_of(std::int64_t n) { return n * (n - 1) / 2; }

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

}  // namespace

std::int64_t EntityEval::messages() const {
    return gold_rel_pred_rel + gold_rel_pred_unrel + gold_unrel_pred_rel +
           gold_unrel_pred_unrel;
}

std::int64_t EntityEval::correct() const {
    return gold_rel_pred_rel + gold_unrel_pred_unrel;
}

std::int64_t EntityEval::gold_pairs() const {
    return pairs_of(gold_rel_pred_rel + gold_rel_pred_unrel) +
           pairs_of(gold_unrel_pred_rel + gold_unrel_pred_unrel);
}

std::int64_t EntityEval::pred_pairs() const {
    return pairs_of(gold_rel_pred_rel + gold_unrel_pred_rel) +
           pairs_of(gold_rel_pred_unrel + gold_unrel_pred_unrel);
}

std::int64_t EntityEval::common_pairs() const {
    return pairs_of(gold_rel_pred_rel) + pairs_of(gold_rel_pred_unrel) +
           pairs_of(gold_unrel_pred_rel) + pairs_of(gold_unrel_pred_unrel);
}

double EntityEval::accuracy() const {
    std::int64_t n = messages();
    return n > 0 ? static_cast<double>(correct()) / n : 0.0;
}

std::optional<double> EntityEval::reliability() const {
    std::int64_t p = pred_pairs();
    if (p == 0) return std::nullopt;
    return static_cast<double>(common_pairs()) / p;
}

std::optional<double> EntityEval::sensitivity() const {
    std::int64_t g = gold_pairs();
    if (g == 0) return std::nullopt;
    return static_cast<double>(common_pairs()) / g;
}

std::optional<double> EntityEval::f1() const {
    auto r = reliability();
    auto s = sensitivity();
    if (!r || !s) return std::nullopt;
    return f_measure(*r, *s);
}

double f_measure(double r, double s) {
    double sum = r + s;
    return sum > 0.0 ? 2.0 * r * s / sum : 0.0;
}

EvalReport evaluate_run(const SystemRun& run, const Dataset& gold,
                        std::uint64_t seed, int n_boot, ExecMode mode) {
    if (n_boot != 0 && n_boot < 100)
        throw UsageError("bootstrap replicate count must be 0 or at least 100");

    // Coverage is checked up front: the parallel region must not throw.
    for (const Message& msg : gold.messages())
        if (msg.gold_label && !run.find(msg.id))
            throw DataError("run is missing a prediction for message " + msg.id);

    // Entity list in sorted order; each slot is filled independently.
    std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> groups;
    for (const auto& kv : gold.by_entity()) groups.push_back(&kv);

    std::vector<EntityEval> slots(groups.size());
    std::vector<char> any_labeled(groups.size(), 0);
    parallel_for(groups.size(), mode, [&](std::size_t gi) {
        EntityEval e;
        e.entity_id = groups[gi]->first;
        for (std::size_t idx : groups[gi]->second) {
            const Message& msg = gold.at(idx);
            if (!msg.gold_label) continue;
            const Prediction* p = run.find(msg.id);
            bool gold_rel = *msg.gold_label == Label::related;
            bool pred_rel = p->chosen == Label::related;
            (gold_rel ? (pred_rel ? e.gold_rel_pred_rel : e.gold_rel_pred_unrel)
                      : (pred_rel ? e.gold_unrel_pred_rel : e.gold_unrel_pred_unrel))++;
        }
        if (e.messages() > 0) any_labeled[gi] = 1;
        slots[gi] = std::move(e);
    });

    EvalReport rep;
    for (std::size_t gi = 0; gi < slots.size(); ++gi)
        if (any_labeled[gi]) rep.entities.push_back(std::move(slots[gi]));
    if (rep.entities.empty()) throw DataError("no labeled messages to evaluate");

    rep.n_entities = rep.entities.size();
    double acc_sum = 0.0, r_sum = 0.0, s_sum = 0.0, f_sum = 0.0;
    std::int64_t total = 0, total_correct = 0, g_all = 0, p_all = 0, pg_all = 0;
    std::vector<double> f_values;
    for (const EntityEval& e : rep.entities) {
        acc_sum += e.accuracy();
        total += e.messages();
        total_correct += e.correct();
        g_all += e.gold_pairs();
        p_all += e.pred_pairs();
        pg_all += e.common_pairs();
        if (auto r = e.reliability()) {
            r_sum += *r;
            ++rep.n_reliability_defined;
        }
        if (auto s = e.sensitivity()) {
            s_sum += *s;
            ++rep.n_sensitivity_defined;
        }
        if (auto f = e.f1()) {
            f_sum += *f;
            f_values.push_back(*f);
            ++rep.n_f_defined;
        }
    }
    rep.n_messages = static_cast<std::size_t>(total);
    rep.accuracy = acc_sum / static_cast<double>(rep.n_entities);
    if (rep.n_reliability_defined > 0)
        rep.reliability = r_sum / static_cast<double>(rep.n_reliability_defined);
    if (rep.n_sensitivity_defined > 0)
        rep.sensitivity = s_sum / static_cast<double>(rep.n_sensitivity_defined);
    if (rep.n_f_defined > 0) rep.f_measure = f_sum / static_cast<double>(rep.n_f_defined);

    rep.micro_accuracy = total > 0 ? static_cast<double>(total_correct) / total : 0.0;
    if (p_all > 0) rep.micro_reliability = static_cast<double>(pg_all) / p_all;
    if (g_all > 0) rep.micro_sensitivity = static_cast<double>(pg_all) / g_all;
    if (rep.micro_reliability && rep.micro_sensitivity)
        rep.micro_f = f_measure(*rep.micro_reliability, *rep.micro_sensitivity);

    double p = rep.micro_accuracy;
    rep.accuracy_ci = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(total));

    if (n_boot > 0 && f_values.size() >= 2) {
        Rng rng(mix_seed(seed, 0, kBootstrapSalt));
        std::vector<double> stats(static_cast<std::size_t>(n_boot));
        for (int b = 0; b < n_boot; ++b) {
            double sum = 0.0;
            for (std::size_t i = 0; i < f_values.size(); ++i)
                sum += f_values[rng.index(f_values.size())];
            stats[static_cast<std::size_t>(b)] = sum / static_cast<double>(f_values.size());
        }
        std::sort(stats.begin(), stats.end());
        rep.f_ci = (quantile(stats, 0.975) - quantile(stats, 0.025)) / 2.0;
    }
    return rep;
}

namespace {

ordered_json opt_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string fmt3(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

}  // namespace

std::string report_to_json(const EvalReport& rep) {
    ordered_json j;
    j["type"] = "evaluation";
    ordered_json overall;
    overall["accuracy"] = rep.accuracy;
    overall["reliability"] = opt_json(rep.reliability);
    overall["sensitivity"] = opt_json(rep.sensitivity);
    overall["f_measure"] = opt_json(rep.f_measure);
    j["overall"] = std::move(overall);
    ordered_json micro;
    micro["accuracy"] = rep.micro_accuracy;
    micro["reliability"] = opt_json(rep.micro_reliability);
    micro["sensitivity"] = opt_json(rep.micro_sensitivity);
    micro["f_measure"] = opt_json(rep.micro_f);
    j["micro"] = std::move(micro);
    ordered_json ci;
    ci["accuracy"] = rep.accuracy_ci;
    ci["f_measure"] = opt_json(rep.f_ci);
    j["confidence_intervals"] = std::move(ci);
    ordered_json counts;
    counts["messages"] = rep.n_messages;
    counts["entities"] = rep.n_entities;
    counts["reliability_defined"] = rep.n_reliability_defined;
    counts["sensitivity_defined"] = rep.n_sensitivity_defined;
    counts["f_defined"] = rep.n_f_defined;
    j["counts"] = std::move(counts);
    ordered_json table = ordered_json::array();
    for (const EntityEval& e : rep.entities) {
        ordered_json row;
        row["entity_id"] = e.entity_id;
        row["messages"] = e.messages();
        row["accuracy"] = e.accuracy();
        row["reliability"] = opt_json(e.reliability());
        row["sensitivity"] = opt_json(e.sensitivity());
        row["f_measure"] = opt_json(e.f1());
        table.push_back(std::move(row));
    }
    j["entities"] = std::move(table);
    return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& rep, bool micro) {
    std::size_t width = 6;  // "Entity"
    for (const EntityEval& e : rep.entities)
        width = std::max(width, e.entity_id.size());

    std::ostringstream out;
    auto row = [&](const std::string& name, const std::string& a, const std::string& r,
                   const std::string& s, const std::string& f) {
        out << name << std::string(width - name.size(), ' ');
        for (const std::string* col : {&a, &r, &s, &f})
            out << "  " << std::string(11 >= col->size() ? 11 - col->size() : 0, ' ')
                << *col;
        out << '\n';
    };
    row("Entity", "Accuracy", "Reliability", "Sensitivity", "F-Measure");
    for (const EntityEval& e : rep.entities)
        row(e.entity_id, fmt3(e.accuracy()), fmt3(e.reliability()),
            fmt3(e.sensitivity()), fmt3(e.f1()));
    row("ALL", fmt3(rep.accuracy), fmt3(rep.reliability), fmt3(rep.sensitivity),
        fmt3(rep.f_measure));
    if (micro)
        row("MICRO", fmt3(rep.micro_accuracy), fmt3(rep.micro_reliability),
            fmt3(rep.micro_sensitivity), fmt3(rep.micro_f));
    out << "95% CI: accuracy +/- " << fmt3(rep.accuracy_ci) << ", f_measure +/- "
        << fmt3(rep.f_ci) << '\n';
    return out.str();
}

}  // namespace entifilt

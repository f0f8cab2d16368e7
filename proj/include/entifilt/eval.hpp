#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "entifilt/classifiers.hpp"
#include "entifilt/corpus.hpp"
#include "entifilt/parallel.hpp"

namespace entifilt {

// Per-entity contingency and metrics. Relationships are unordered same-label
// message pairs within the entity; a/b/c/d split gold x predicted.
struct EntityEval {
    std::string entity_id;
    std::int64_t gold_rel_pred_rel = 0;    // a
    std::int64_t gold_rel_pred_unrel = 0;  // b
    std::int64_t gold_unrel_pred_rel = 0;  // c
    std::int64_t gold_unrel_pred_unrel = 0;  // d

    std::int64_t messages() const;
    std::int64_t correct() const;
    std::int64_t gold_pairs() const;       // |G|
    std::int64_t pred_pairs() const;       // |P|
    std::int64_t common_pairs() const;     // |P n G|

    double accuracy() const;
    std::optional<double> reliability() const;  // absent when |P| = 0
    std::optional<double> sensitivity() const;  // absent when |G| = 0
    std::optional<double> f1() const;           // needs both R and S
};

struct EvalReport {
    std::vector<EntityEval> entities;  // sorted by entity_id

    // Unweighted means over entities where the metric is defined.
    double accuracy = 0.0;
    std::optional<double> reliability;
    std::optional<double> sensitivity;
    std::optional<double> f_measure;

    // Pooled over all messages / all pairs.
    double micro_accuracy = 0.0;
    std::optional<double> micro_reliability;
    std::optional<double> micro_sensitivity;
    std::optional<double> micro_f;

    std::size_t n_messages = 0;
    std::size_t n_entities = 0;
    std::size_t n_reliability_defined = 0;
    std::size_t n_sensitivity_defined = 0;
    std::size_t n_f_defined = 0;

    // 95% half-widths: accuracy by normal approximation over messages, F by
    // entity bootstrap (absent with fewer than two defined entities).
    double accuracy_ci = 0.0;
    std::optional<double> f_ci;
};

// 2RS/(R+S), 0 at R=S=0.
double f_measure(double r, double s);

// Scores a run against the gold labels. Every labeled message must be
// covered; unlabeled messages are ignored. n_boot = 0 skips the F bootstrap;
// otherwise n_boot must be at least 100.
EvalReport evaluate_run(const SystemRun& run, const Dataset& gold,
                        std::uint64_t seed = 0, int n_boot = 1000,
                        ExecMode mode = ExecMode::parallel);

std::string report_to_json(const EvalReport& report);
// Aligned table, columns Accuracy / Reliability / Sensitivity / F-Measure.
std::string report_to_text(const EvalReport& report, bool micro = false);

}  // namespace entifilt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entifilt/classifiers.hpp"
#include "entifilt/corpus.hpp"
#include "entifilt/parallel.hpp"

namespace entifilt {

// One message's scores across the systems being fused; row j is system j's
// normalized (related, unrelated) pair.
struct ScoreMatrix {
    std::vector<std::pair<double, double>> rows;

    std::size_t systems() const { return rows.size(); }
    double score(std::size_t j, Label l) const {
        return l == Label::related ? rows[j].first : rows[j].second;
    }
};

struct ElectreParams {
    double concordance_threshold = 2.0 / 3.0;  // c*, in (0.5, 1]
    double veto = 0.5;                         // v, in (0, 1]
};

enum class Combiner { lc, electre, promethee };

const char* combiner_name(Combiner c);
std::optional<Combiner> parse_combiner(const std::string& s);

// Label with the larger column sum; ties go to RELATED.
Label linear_combination(const ScoreMatrix& m);

// Fraction of systems scoring l strictly above l2; indifference counts for
// neither direction.
double concordance(const ScoreMatrix& m, Label l, Label l2);

// l over-ranks l2 iff concordance(l, l2) >= c* and no system prefers l2 by a
// margin above the veto.
bool over_ranks(const ScoreMatrix& m, Label l, Label l2,
                const ElectreParams& params = {});

// Kernel member when the kernel is a singleton; an empty or two-member
// kernel falls back to the linear combination.
Label electre_select(const ScoreMatrix& m, const ElectreParams& params = {});

// Net flow = dominance row sum minus dominated column sum; the two labels'
// nets cancel.
double promethee_net(const ScoreMatrix& m, Label l);
Label promethee_select(const ScoreMatrix& m);

// Per-message fusion of aligned runs (identical message-id sets, checked).
// LC keeps graded confidences (normalized column sums) so its output can be
// fused again; ELECTRE and PROMETHEE emit one-hot scores.
SystemRun fuse_runs(const std::vector<SystemRun>& runs, Combiner combiner,
                    const ElectreParams& params = {},
                    const std::string& name = "",
                    ExecMode mode = ExecMode::parallel);

// Keeps the runs whose dev F-measure is within delta of the best, then fuses
// them. A selection of one returns that run unchanged. The runs must cover
// the dev gold ids (they typically cover dev and test together).
SystemRun strategy_naive(const std::vector<SystemRun>& runs, const Dataset& dev,
                         Combiner combiner, double delta = 0.05,
                         const ElectreParams& params = {},
                         ExecMode mode = ExecMode::parallel);

// Pass 1 fuses every unordered pair; pass 2 fuses the C(N,2) intermediates.
SystemRun strategy_mpms(const std::vector<SystemRun>& runs,
                        Combiner pass1 = Combiner::lc,
                        Combiner pass2 = Combiner::lc,
                        const ElectreParams& params = {},
                        ExecMode mode = ExecMode::parallel);

// Fuses the dev-best run per measure (accuracy, reliability, sensitivity),
// deduplicated, with LC; a single distinct pick returns that run unchanged.
SystemRun strategy_otb(const std::vector<SystemRun>& runs, const Dataset& dev,
                       ExecMode mode = ExecMode::parallel);

}  // namespace entifilt

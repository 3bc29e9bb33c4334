#pragma once

// Entropy-driven genetic search over grid configurations. One candidate is
// proposed per evaluation:
//   1. rank the history by score;
//   2. a Bernoulli trial weighted by (1 - H) picks re-evaluation, super-merge
//      of the top performers, or recombination;
//   3. recombination crosses two selected ancestors gene by gene;
//   4. mutation applies large resamples or small deltas, both scaled by H;
//   5. one offspring of a small in-memory batch is returned, chosen at random
//      under high entropy and closest to the best configuration under low.

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "crosstune/domain.hpp"
#include "crosstune/rng.hpp"

namespace crosstune {

struct TunerParams {
  double c_re = 0.3;
  double c_sm = 0.1;
  int top_k = 3;
  int batch = 4;
  double mut_frac = 0.5;
  double delta_frac = 0.1;
  // Extra mutation attempts for an offspring that repeats an evaluated
  // configuration.
  int dedup_retries = 4;
};

enum class ProposalKind { kBootstrap, kReevaluation, kSuperMerge, kRecombination };
enum class Branch { kReevaluate, kSuperMerge, kRecombine };

std::string_view to_string(ProposalKind kind);

struct Proposal {
  Configuration config;
  ProposalKind kind = ProposalKind::kBootstrap;
  std::vector<std::int64_t> parents;  // step indices of the records used
};

using Genome = std::vector<std::int64_t>;

// Records ordered by score descending; equal scores put the later step first.
std::vector<const StateRecord*> rank_history(std::span<const StateRecord> history);

Proposal propose(std::span<const StateRecord> history, const SearchSpace& space, double entropy,
                 const TunerParams& params, Rng& rng);

// Each parent comes from the whole ranking with probability H, otherwise
// from the top_k. The second parent is redrawn (up to |history| times) while
// it matches the first. Throws std::invalid_argument for fewer than 2 records.
std::pair<const StateRecord*, const StateRecord*> select_ancestors(
    std::span<const StateRecord> history, double entropy, int top_k, Rng& rng);

Branch branch(double entropy, double c_re, double c_sm, Rng& rng);

// Uniform gene-wise crossover. Throws ValidationError on mismatched gene sets.
Configuration crossover(const Configuration& a, const Configuration& b, Rng& rng);

// Mutates exactly max(1, round(H * dims * mut_frac)) genes (capped by the
// number of genes with more than one value). Large changes resample among the
// other grid values; small ones shift by a nonzero delta of at most
// max(1, round(H * delta_frac * (n - 1))), reflected at the bounds.
Configuration mutate(const Configuration& config, const SearchSpace& space, double entropy,
                     double mut_frac, double delta_frac, Rng& rng);
void mutate_genome(Genome& genome, const SearchSpace& space, double entropy, double mut_frac,
                   double delta_frac, Rng& rng);

// Every gene copied from a uniformly chosen record among the top_k.
Configuration super_merge(std::span<const StateRecord> history, int top_k, Rng& rng);

// Index into batch. Throws std::invalid_argument on an empty batch.
std::size_t select_offspring(std::span<const Genome> batch, const Genome& best, double entropy,
                             Rng& rng);
Configuration select_offspring(std::span<const Configuration> batch, const Configuration& best,
                               double entropy, Rng& rng);

std::int64_t l1_distance(const Genome& a, const Genome& b);

}  // namespace crosstune

#include "crosstune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace crosstune {

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::kBootstrap:
      return "bootstrap";
    case ProposalKind::kReevaluation:
      return "reevaluation";
    case ProposalKind::kSuperMerge:
      return "supermerge";
    case ProposalKind::kRecombination:
      return "recombination";
  }
  return "bootstrap";
}

std::vector<const StateRecord*> rank_history(std::span<const StateRecord> history) {
  std::vector<const StateRecord*> ranked;
  ranked.reserve(history.size());
  for (const auto& r : history) ranked.push_back(&r);
  std::stable_sort(ranked.begin(), ranked.end(), [](const StateRecord* a, const StateRecord* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->step_index > b->step_index;
  });
  return ranked;
}

namespace {

std::size_t top_count(std::size_t n, int top_k) {
  return std::min<std::size_t>(n, static_cast<std::size_t>(std::max(top_k, 1)));
}

std::pair<std::size_t, std::size_t> pick_ancestors(
    const std::vector<const StateRecord*>& ranked, double entropy, int top_k, Rng& rng) {
  const auto n = static_cast<std::int64_t>(ranked.size());
  const auto k = static_cast<std::int64_t>(top_count(ranked.size(), top_k));
  const auto draw = [&]() -> std::size_t {
    const std::int64_t hi = rng.bernoulli(entropy) ? n - 1 : k - 1;
    return static_cast<std::size_t>(rng.uniform_int(0, hi));
  };
  const std::size_t a = draw();
  std::size_t b = draw();
  for (std::int64_t attempt = 0;
       attempt < n && (b == a || ranked[b]->snapshot.config == ranked[a]->snapshot.config);
       ++attempt) {
    b = draw();
  }
  return {a, b};
}

Genome crossover_genome(const Genome& a, const Genome& b, Rng& rng) {
  Genome child(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    child[i] = rng.bernoulli(0.5) ? a[i] : b[i];
  }
  return child;
}

Genome super_merge_genome(const std::vector<Genome>& top, Rng& rng) {
  Genome child(top.front().size());
  const auto last = static_cast<std::int64_t>(top.size()) - 1;
  for (std::size_t i = 0; i < child.size(); ++i) {
    child[i] = top[static_cast<std::size_t>(rng.uniform_int(0, last))][i];
  }
  return child;
}

}  // namespace

std::pair<const StateRecord*, const StateRecord*> select_ancestors(
    std::span<const StateRecord> history, double entropy, int top_k, Rng& rng) {
  if (history.size() < 2) {
    throw std::invalid_argument("ancestor selection needs at least two records");
  }
  const auto ranked = rank_history(history);
  const auto [a, b] = pick_ancestors(ranked, entropy, top_k, rng);
  return {ranked[a], ranked[b]};
}

Branch branch(double entropy, double c_re, double c_sm, Rng& rng) {
  const double cool = 1.0 - entropy;
  const double u = rng.uniform();
  if (u < c_re * cool) return Branch::kReevaluate;
  if (u < (c_re + c_sm) * cool) return Branch::kSuperMerge;
  return Branch::kRecombine;
}

Configuration crossover(const Configuration& a, const Configuration& b, Rng& rng) {
  if (a.genes.size() != b.genes.size()) {
    throw ValidationError("crossover parents have different gene sets");
  }
  Configuration child;
  auto ib = b.genes.begin();
  for (const auto& [name, value] : a.genes) {
    if (ib->first != name) {
      throw ValidationError("crossover parents have different gene sets");
    }
    child.genes.emplace(name, rng.bernoulli(0.5) ? value : ib->second);
    ++ib;
  }
  return child;
}

void mutate_genome(Genome& genome, const SearchSpace& space, double entropy, double mut_frac,
                   double delta_frac, Rng& rng) {
  const auto& params = space.params();
  std::vector<std::size_t> mutable_genes;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (n_values(params[i]) > 1) mutable_genes.push_back(i);
  }
  if (mutable_genes.empty()) return;

  const auto dims = static_cast<double>(space.dims());
  const auto wanted = std::max<std::int64_t>(1, std::llround(entropy * dims * mut_frac));
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(wanted), mutable_genes.size());

  // Partial Fisher-Yates: the first `count` slots become the chosen genes.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i),
                        static_cast<std::int64_t>(mutable_genes.size()) - 1));
    std::swap(mutable_genes[i], mutable_genes[j]);
  }

  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t g = mutable_genes[c];
    const std::int64_t n = n_values(params[g]);
    const std::int64_t current = genome[g];
    std::int64_t next;
    if (rng.bernoulli(entropy)) {
      next = rng.uniform_int(0, n - 2);
      if (next >= current) ++next;
    } else {
      const auto reach = std::max<std::int64_t>(
          1, std::llround(entropy * delta_frac * static_cast<double>(n - 1)));
      std::int64_t delta = rng.uniform_int(1, reach);
      if (rng.bernoulli(0.5)) delta = -delta;
      next = std::clamp(current + delta, std::int64_t{0}, n - 1);
      if (next == current) next = std::clamp(current - delta, std::int64_t{0}, n - 1);
    }
    genome[g] = next;
  }
}

Configuration mutate(const Configuration& config, const SearchSpace& space, double entropy,
                     double mut_frac, double delta_frac, Rng& rng) {
  Genome genome = to_genome(config, space);
  mutate_genome(genome, space, entropy, mut_frac, delta_frac, rng);
  return from_genome(genome, space, config.epoch);
}

Configuration super_merge(std::span<const StateRecord> history, int top_k, Rng& rng) {
  if (history.empty()) {
    throw std::invalid_argument("super-merge needs at least one record");
  }
  const auto ranked = rank_history(history);
  const std::size_t k = top_count(ranked.size(), top_k);
  Configuration child;
  for (const auto& [name, value] : ranked.front()->snapshot.config.genes) {
    const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
    const auto& genes = ranked[pick]->snapshot.config.genes;
    auto it = genes.find(name);
    child.genes.emplace(name, it != genes.end() ? it->second : value);
  }
  return child;
}

std::int64_t l1_distance(const Genome& a, const Genome& b) {
  std::int64_t d = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d += std::llabs(a[i] - b[i]);
  return d;
}

std::size_t select_offspring(std::span<const Genome> batch, const Genome& best, double entropy,
                             Rng& rng) {
  if (batch.empty()) {
    throw std::invalid_argument("offspring selection needs a non-empty batch");
  }
  if (rng.bernoulli(entropy)) {
    return static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(batch.size()) - 1));
  }
  std::size_t chosen = 0;
  std::int64_t best_distance = l1_distance(batch[0], best);
  for (std::size_t i = 1; i < batch.size(); ++i) {
    const std::int64_t d = l1_distance(batch[i], best);
    if (d < best_distance) {
      best_distance = d;
      chosen = i;
    }
  }
  return chosen;
}

Configuration select_offspring(std::span<const Configuration> batch, const Configuration& best,
                               double entropy, Rng& rng) {
  if (batch.empty()) {
    throw std::invalid_argument("offspring selection needs a non-empty batch");
  }
  // Gene maps share key order, so their value sequences align.
  const auto values = [](const Configuration& c) {
    Genome g;
    g.reserve(c.genes.size());
    for (const auto& kv : c.genes) g.push_back(kv.second);
    return g;
  };
  std::vector<Genome> genomes;
  genomes.reserve(batch.size());
  for (const auto& c : batch) genomes.push_back(values(c));
  return batch[select_offspring(genomes, values(best), entropy, rng)];
}

Proposal propose(std::span<const StateRecord> history, const SearchSpace& space, double entropy,
                 const TunerParams& params, Rng& rng) {
  Proposal out;
  if (history.size() < 2) {
    Genome genome(space.dims());
    for (std::size_t i = 0; i < genome.size(); ++i) {
      genome[i] = rng.uniform_int(0, n_values(space.params()[i]) - 1);
    }
    out.config = from_genome(genome, space);
    out.kind = ProposalKind::kBootstrap;
    return out;
  }

  const auto ranked = rank_history(history);
  const Branch chosen_branch = branch(entropy, params.c_re, params.c_sm, rng);
  const std::size_t k = top_count(ranked.size(), params.top_k);

  if (chosen_branch == Branch::kReevaluate) {
    const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
    out.config = ranked[pick]->snapshot.config;
    out.config.epoch = 0;
    out.kind = ProposalKind::kReevaluation;
    out.parents = {ranked[pick]->step_index};
    return out;
  }

  std::vector<Genome> genomes;
  genomes.reserve(ranked.size());
  for (const auto* r : ranked) genomes.push_back(to_genome(r->snapshot.config, space));
  const std::set<Genome> evaluated(genomes.begin(), genomes.end());
  const std::vector<Genome> top(genomes.begin(), genomes.begin() + static_cast<std::ptrdiff_t>(k));

  const auto batch_size = static_cast<std::size_t>(std::max(params.batch, 1));
  std::vector<Genome> batch;
  std::vector<std::vector<std::int64_t>> provenance;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    Genome base;
    std::vector<std::int64_t> parents;
    if (chosen_branch == Branch::kSuperMerge) {
      base = super_merge_genome(top, rng);
      for (std::size_t t = 0; t < k; ++t) parents.push_back(ranked[t]->step_index);
    } else {
      const auto [a, b] = pick_ancestors(ranked, entropy, params.top_k, rng);
      base = crossover_genome(genomes[a], genomes[b], rng);
      parents = {ranked[a]->step_index, ranked[b]->step_index};
    }
    Genome child = base;
    mutate_genome(child, space, entropy, params.mut_frac, params.delta_frac, rng);
    for (int retry = 0; retry < params.dedup_retries && evaluated.count(child) != 0; ++retry) {
      child = base;
      mutate_genome(child, space, entropy, params.mut_frac, params.delta_frac, rng);
    }
    batch.push_back(std::move(child));
    provenance.push_back(std::move(parents));
  }

  // Offspring that repeat an evaluated configuration only compete when no
  // novel offspring exists.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (evaluated.count(batch[i]) == 0) candidates.push_back(i);
  }
  if (candidates.empty()) {
    candidates.resize(batch.size());
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  }
  std::vector<Genome> pool;
  pool.reserve(candidates.size());
  for (auto i : candidates) pool.push_back(batch[i]);
  const std::size_t pick = candidates[select_offspring(pool, genomes.front(), entropy, rng)];
  out.config = from_genome(batch[pick], space);
  out.kind = chosen_branch == Branch::kSuperMerge ? ProposalKind::kSuperMerge
                                                  : ProposalKind::kRecombination;
  out.parents = std::move(provenance[pick]);
  return out;
}

}  // namespace crosstune

#include <gtest/gtest.h>

#include <set>

#include "crosstune/json_codec.hpp"
#include "crosstune/tuner.hpp"

using namespace crosstune;

namespace {

constexpr int kDraws = 10000;

SearchSpace grid(int dims, double max_value) {
  SearchSpace space;
  for (int i = 0; i < dims; ++i) {
    space.add(ParameterSpec{"g" + std::to_string(i), "l", 0, max_value, 1, Changeability::kOnline});
  }
  return space;
}

StateRecord record(std::vector<std::int64_t> genome, const SearchSpace& space, double score,
                   std::int64_t step) {
  StateRecord r;
  r.snapshot.config = from_genome(genome, space);
  r.score = score;
  r.score_sum = score;
  r.step_index = step;
  r.updated_step = step;
  return r;
}

std::vector<StateRecord> random_history(const SearchSpace& space, std::size_t n, Rng& rng) {
  std::vector<StateRecord> history;
  for (std::size_t i = 0; i < n; ++i) {
    Genome g(space.dims());
    for (std::size_t d = 0; d < g.size(); ++d) g[d] = rng.uniform_int(0, n_values(space.params()[d]) - 1);
    history.push_back(record(g, space, rng.uniform(), static_cast<std::int64_t>(i)));
  }
  return history;
}

}  // namespace

TEST(Ranking, ScoreDescendingLaterStepFirstOnTies) {
  const auto space = grid(1, 9);
  std::vector<StateRecord> h{record({1}, space, 0.5, 0), record({2}, space, 0.9, 1),
                             record({3}, space, 0.5, 2)};
  const auto ranked = rank_history(h);
  EXPECT_EQ(ranked[0]->step_index, 1);
  EXPECT_EQ(ranked[1]->step_index, 2);
  EXPECT_EQ(ranked[2]->step_index, 0);
}

TEST(Branch, ProbabilitiesMatchEntropyScaling) {
  for (double h : {0.02, 0.35, 0.6}) {
    Rng rng(1000 + static_cast<std::uint64_t>(h * 100));
    int re = 0, sm = 0;
    for (int i = 0; i < kDraws; ++i) {
      const Branch b = branch(h, 0.3, 0.1, rng);
      re += b == Branch::kReevaluate;
      sm += b == Branch::kSuperMerge;
    }
    EXPECT_NEAR(re / double(kDraws), 0.3 * (1 - h), 0.02) << h;
    EXPECT_NEAR(sm / double(kDraws), 0.1 * (1 - h), 0.02) << h;
  }
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(branch(1.0, 0.3, 0.1, rng), Branch::kRecombine);
}

TEST(Ancestors, ZeroEntropyKeepsParentsInTopK) {
  const auto space = grid(2, 9);
  Rng rng(2);
  auto history = random_history(space, 10, rng);
  const auto ranked = rank_history(history);
  std::set<std::int64_t> top{ranked[0]->step_index, ranked[1]->step_index, ranked[2]->step_index};
  for (int i = 0; i < 2000; ++i) {
    const auto [a, b] = select_ancestors(history, 0.0, 3, rng);
    ASSERT_TRUE(top.count(a->step_index));
    ASSERT_TRUE(top.count(b->step_index));
    ASSERT_NE(a, b);
  }
  EXPECT_THROW(select_ancestors(std::span(history).first(1), 0.5, 3, rng), std::invalid_argument);
}

TEST(Ancestors, FullEntropyIsUniformOverHistory) {
  const auto space = grid(2, 9);
  Rng rng(3);
  auto history = random_history(space, 10, rng);
  std::map<std::int64_t, int> counts;
  for (int i = 0; i < kDraws; ++i) ++counts[select_ancestors(history, 1.0, 3, rng).first->step_index];
  double chi2 = 0;
  for (const auto& [step, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  EXPECT_EQ(counts.size(), 10u);
  EXPECT_LT(chi2, 27.88);  // chi-square, 9 dof, p = 0.001
}

TEST(Crossover, ClosureAndGeneSourceFrequency) {
  const auto space = grid(10, 9);
  const auto a = from_genome(Genome(10, 0), space);
  const auto b = from_genome(Genome(10, 9), space);
  Rng rng(4);
  EXPECT_EQ(crossover(a, a, rng), a);
  std::vector<int> from_a(10, 0);
  for (int i = 0; i < kDraws; ++i) {
    const auto child = crossover(a, b, rng);
    for (int g = 0; g < 10; ++g) {
      const auto v = child.genes.at("g" + std::to_string(g));
      ASSERT_TRUE(v == 0 || v == 9);
      from_a[g] += v == 0;
    }
  }
  for (int c : from_a) {
    EXPECT_GE(c / double(kDraws), 0.45);
    EXPECT_LE(c / double(kDraws), 0.55);
  }
  Configuration odd = a;
  odd.genes.erase("g0");
  EXPECT_THROW(crossover(a, odd, rng), ValidationError);
}

TEST(Mutation, CountIsExactlyEntropyScaled) {
  Rng rng(5);
  for (int dims : {1, 3, 5, 10, 17}) {
    const auto space = grid(dims, 99);
    for (double h : {0.02, 0.15, 0.35, 0.6, 1.0}) {
      const auto expected = std::max<std::int64_t>(1, std::llround(h * dims * 0.5));
      for (int i = 0; i < 500; ++i) {
        Genome g(dims, 50);
        const Genome before = g;
        mutate_genome(g, space, h, 0.5, 0.1, rng);
        std::int64_t changed = 0;
        for (int d = 0; d < dims; ++d) changed += g[d] != before[d];
        ASSERT_EQ(changed, expected) << dims << ' ' << h;
      }
    }
  }
}

TEST(Mutation, LowEntropyMovesOneStep) {
  const auto space = grid(6, 99);
  Rng rng(6);
  int single_steps = 0;
  for (int i = 0; i < kDraws; ++i) {
    Genome g(6, 0);
    g[2] = 99;
    const Genome before = g;
    mutate_genome(g, space, 0.02, 0.5, 0.1, rng);
    int changed = 0;
    for (std::size_t d = 0; d < g.size(); ++d) changed += g[d] != before[d];
    ASSERT_EQ(changed, 1);
    single_steps += l1_distance(g, before) == 1;
  }
  // Large resamples happen with probability H.
  EXPECT_NEAR(single_steps / double(kDraws), 0.98, 0.01);
}

TEST(Mutation, SingleValueSpaceIsIdentity) {
  SearchSpace space({ParameterSpec{"only", "l", 3, 3, 1, Changeability::kOnline}});
  Rng rng(7);
  const auto c = from_genome({0}, space);
  EXPECT_EQ(mutate(c, space, 1.0, 0.5, 0.1, rng), c);
}

TEST(SuperMerge, ClosureUnanimityAndDegenerateHistory) {
  const auto space = grid(5, 9);
  Rng rng(8);
  auto history = random_history(space, 12, rng);
  const auto ranked = rank_history(history);
  for (int i = 0; i < 2000; ++i) {
    const auto child = super_merge(history, 3, rng);
    for (const auto& [name, value] : child.genes) {
      bool found = false;
      for (int k = 0; k < 3; ++k) found |= ranked[k]->snapshot.config.genes.at(name) == value;
      ASSERT_TRUE(found);
    }
  }
  std::vector<StateRecord> same{record({1, 2, 3, 4, 5}, space, 0.9, 0),
                                record({1, 2, 3, 4, 5}, space, 0.8, 1),
                                record({1, 2, 3, 4, 5}, space, 0.7, 2), record({0, 0, 0, 0, 0}, space, 0.1, 3)};
  EXPECT_EQ(super_merge(same, 3, rng), same[0].snapshot.config);
  EXPECT_EQ(super_merge(std::span(history).first(1), 3, rng), history[0].snapshot.config);
}

TEST(Offspring, SelectionRules) {
  Rng rng(9);
  std::vector<Genome> one{{4, 4}};
  EXPECT_EQ(select_offspring(one, Genome{0, 0}, 0.7, rng), 0u);
  std::vector<Genome> batch{{5, 5}, {1, 1}, {0, 0}, {0, 0}};
  EXPECT_EQ(select_offspring(batch, Genome{0, 0}, 0.0, rng), 2u);
  std::vector<Genome> ties{{3, 3}, {1, 0}, {0, 1}, {9, 9}};
  EXPECT_EQ(select_offspring(ties, Genome{0, 0}, 0.0, rng), 1u);

  std::array<int, 4> counts{};
  for (int i = 0; i < kDraws; ++i) ++counts[select_offspring(batch, Genome{0, 0}, 1.0, rng)];
  for (int c : counts) {
    EXPECT_GE(c / double(kDraws), 0.22);
    EXPECT_LE(c / double(kDraws), 0.28);
  }
  EXPECT_THROW(select_offspring(std::vector<Genome>{}, Genome{}, 0.5, rng), std::invalid_argument);
}

TEST(Propose, BootstrapOnShortHistory) {
  const auto space = grid(4, 9);
  Rng rng(10);
  std::vector<StateRecord> empty;
  std::vector<std::set<std::int64_t>> seen(4);
  for (int i = 0; i < 2000; ++i) {
    const auto p = propose(empty, space, 1.0, {}, rng);
    ASSERT_EQ(p.kind, ProposalKind::kBootstrap);
    const auto g = to_genome(p.config, space);
    for (int d = 0; d < 4; ++d) seen[d].insert(g[d]);
  }
  for (const auto& s : seen) EXPECT_EQ(s.size(), 10u);
}

TEST(Propose, LowEntropyReplaysTopConfigurations) {
  const auto space = grid(4, 9);
  Rng rng(11);
  const auto history = random_history(space, 50, rng);
  const auto ranked = rank_history(history);
  int replays = 0;
  for (int i = 0; i < kDraws; ++i) {
    const auto p = propose(history, space, 0.02, {}, rng);
    if (p.kind == ProposalKind::kReevaluation) {
      ++replays;
      bool in_top = false;
      for (int k = 0; k < 3; ++k) in_top |= ranked[k]->snapshot.config == p.config;
      ASSERT_TRUE(in_top);
    }
  }
  EXPECT_NEAR(replays / double(kDraws), 0.3 * 0.98, 0.02);
}

TEST(Propose, FullEntropyRecombinesAwayFromParents) {
  const auto space = grid(6, 9);
  Rng rng(12);
  const auto history = random_history(space, 30, rng);
  std::map<std::int64_t, const StateRecord*> by_step;
  for (const auto& r : history) by_step[r.step_index] = &r;
  int recombined = 0;
  for (int i = 0; i < kDraws; ++i) {
    const auto p = propose(history, space, 1.0, {}, rng);
    recombined += p.kind == ProposalKind::kRecombination;
    ASSERT_EQ(p.parents.size(), 2u);
    for (auto step : p.parents) ASSERT_NE(by_step.at(step)->snapshot.config, p.config);
  }
  EXPECT_GE(recombined / double(kDraws), 0.999);
}

TEST(Propose, AlwaysGridValidAndDeterministic) {
  Rng meta(13);
  for (int trial = 0; trial < 3000; ++trial) {
    const int dims = static_cast<int>(meta.uniform_int(1, 8));
    const auto space = grid(dims, static_cast<double>(meta.uniform_int(0, 30)));
    const auto history = random_history(space, static_cast<std::size_t>(meta.uniform_int(0, 20)), meta);
    const double h = 0.02 + meta.uniform() * 0.98;
    const std::uint64_t seed = meta.next();
    Rng a(seed), b(seed);
    const auto pa = propose(history, space, h, {}, a);
    const auto pb = propose(history, space, h, {}, b);
    ASSERT_NO_THROW(check_configuration(pa.config, space));
    ASSERT_EQ(to_json(pa.config).dump(), to_json(pb.config).dump());
    ASSERT_EQ(pa.kind, pb.kind);
    ASSERT_EQ(pa.parents, pb.parents);
  }
}

#include "gwpi/simulator.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "gwpi/errors.hpp"

namespace gwpi {

namespace {

void add_immigrants(GenealogyForest& forest, int g, int count) {
  auto& gen = forest.generations[static_cast<std::size_t>(g)];
  for (int l = 0; l < count; ++l) {
    forest.founders.push_back({g, l});
    gen.push_back({Particle::kNoParent, static_cast<std::int32_t>(forest.founders.size() - 1)});
  }
  forest.immigrants[static_cast<std::size_t>(g)] = count;
}

void check_cap(std::uint64_t total, const SimulationOptions& options) {
  if (total > options.particle_cap) {
    throw ResourceLimit("particle count " + std::to_string(total) + " exceeds cap " +
                            std::to_string(options.particle_cap),
                        options.particle_cap);
  }
}

// Children of generation g appended to generation g + 1.
std::uint64_t branch(GenealogyForest& forest, const DiscreteLaw& offspring, int g, Rng& rng,
                     std::uint64_t total, const SimulationOptions& options) {
  const auto& parents = forest.generations[static_cast<std::size_t>(g)];
  auto& children = forest.generations[static_cast<std::size_t>(g) + 1];
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const int c = offspring.sample(rng);
    total += static_cast<std::uint64_t>(c);
    check_cap(total, options);
    for (int k = 0; k < c; ++k) {
      children.push_back({static_cast<std::int32_t>(i), parents[i].founder});
    }
  }
  return total;
}

std::size_t first_immigrant(const GenealogyForest& forest, int g) {
  return forest.size(g) - static_cast<std::size_t>(forest.immigrants[static_cast<std::size_t>(g)]);
}

std::int64_t falling2(std::int64_t m) { return m * (m - 1); }

}  // namespace

std::uint64_t GenealogyForest::total_particles() const {
  std::uint64_t t = 0;
  for (const auto& gen : generations) t += gen.size();
  return t;
}

void GenealogyForest::clear(int new_n) {
  n = new_n;
  generations.resize(static_cast<std::size_t>(new_n) + 1);
  for (auto& gen : generations) gen.clear();
  founders.clear();
  immigrants.assign(static_cast<std::size_t>(new_n) + 1, 0);
}

std::optional<std::string> GenealogyForest::check_invariants() const {
  if (generations.size() != static_cast<std::size_t>(n) + 1 ||
      immigrants.size() != static_cast<std::size_t>(n) + 1) {
    return "generation arrays do not have n + 1 entries";
  }
  for (int g = 0; g <= n; ++g) {
    const auto& gen = generations[static_cast<std::size_t>(g)];
    const std::size_t imm = static_cast<std::size_t>(immigrants[static_cast<std::size_t>(g)]);
    if (imm > gen.size()) return "more immigrants than particles at generation " + std::to_string(g);
    const std::size_t born = gen.size() - imm;
    if (g == 0 && born != 0) return "Z_0 != I_0";
    for (std::size_t i = 0; i < gen.size(); ++i) {
      const Particle& p = gen[i];
      if (p.founder < 0 || static_cast<std::size_t>(p.founder) >= founders.size()) {
        return "invalid founder index";
      }
      if (i >= born) {
        if (p.parent != Particle::kNoParent) return "immigrant with a parent";
        const FounderId& f = founders[static_cast<std::size_t>(p.founder)];
        if (f.generation != g || static_cast<std::size_t>(f.ordinal) != i - born) {
          return "immigrant founder id mismatch at generation " + std::to_string(g);
        }
      } else {
        const auto& prev = generations[static_cast<std::size_t>(g) - 1];
        if (p.parent < 0 || static_cast<std::size_t>(p.parent) >= prev.size()) {
          return "invalid parent index at generation " + std::to_string(g);
        }
        if (prev[static_cast<std::size_t>(p.parent)].founder != p.founder) {
          return "founder not inherited at generation " + std::to_string(g);
        }
        if (i > 0 && gen[i - 1].parent > p.parent) return "children not grouped by parent";
      }
    }
  }
  return std::nullopt;
}

std::string GenealogyForest::to_json() const {
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& gen : generations) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : gen) {
      const FounderId& f = founders[static_cast<std::size_t>(p.founder)];
      rows.push_back({p.parent, f.generation, f.ordinal});
    }
    gens.push_back(std::move(rows));
  }
  return nlohmann::json{{"n", n}, {"immigrants", immigrants}, {"generations", gens}}.dump();
}

std::int64_t ClanDecomposition::total() const {
  std::int64_t t = 0;
  for (auto y : clan_sizes) t += y;
  for (const auto& [id, y] : immigrant_clan_sizes) t += y;
  return t;
}

void simulate_forest_into(GenealogyForest& forest, const ModelParams& params, int n, Rng& rng,
                          const SimulationOptions& options) {
  if (n < 1) throw PreconditionError("simulate_forest requires n >= 1");
  forest.clear(n);
  add_immigrants(forest, 0, params.immigration.sample(rng));
  std::uint64_t total = forest.size(0);
  check_cap(total, options);
  for (int g = 0; g < n; ++g) {
    total = branch(forest, params.offspring, g, rng, total, options);
    const int arrivals = params.immigration.sample(rng);
    total += static_cast<std::uint64_t>(arrivals);
    check_cap(total, options);
    add_immigrants(forest, g + 1, arrivals);
  }
}

GenealogyForest simulate_forest(const ModelParams& params, int n, Rng& rng,
                                const SimulationOptions& options) {
  GenealogyForest forest;
  simulate_forest_into(forest, params, n, rng, options);
  return forest;
}

void simulate_plain_gw_into(GenealogyForest& forest, const DiscreteLaw& offspring, int n,
                            Rng& rng, const SimulationOptions& options) {
  if (n < 1) throw PreconditionError("simulate_plain_gw requires n >= 1");
  forest.clear(n);
  add_immigrants(forest, 0, 1);
  std::uint64_t total = 1;
  for (int g = 0; g < n; ++g) {
    if (forest.size(g) == 0) break;
    total = branch(forest, offspring, g, rng, total, options);
  }
}

GenealogyForest simulate_plain_gw(const DiscreteLaw& offspring, int n, Rng& rng,
                                  const SimulationOptions& options) {
  GenealogyForest forest;
  simulate_plain_gw_into(forest, offspring, n, rng, options);
  return forest;
}

std::vector<std::vector<std::int64_t>> descendant_counts(const GenealogyForest& forest) {
  std::vector<std::vector<std::int64_t>> counts(forest.generations.size());
  counts.back().assign(forest.final_size(), 1);
  for (int g = forest.n; g >= 1; --g) {
    auto& below = counts[static_cast<std::size_t>(g) - 1];
    below.assign(forest.size(g - 1), 0);
    const auto& gen = forest.generations[static_cast<std::size_t>(g)];
    const auto& here = counts[static_cast<std::size_t>(g)];
    for (std::size_t i = 0; i < gen.size(); ++i) {
      if (gen[i].parent != Particle::kNoParent) {
        below[static_cast<std::size_t>(gen[i].parent)] += here[i];
      }
    }
  }
  return counts;
}

ClanDecomposition clan_decomposition(const GenealogyForest& forest,
                                     const std::vector<std::vector<std::int64_t>>& counts, int k) {
  if (k < 0 || k >= forest.n) throw DomainError("clan_decomposition requires 0 <= k < n");
  ClanDecomposition clans;
  clans.k = k;
  clans.clan_sizes = counts[static_cast<std::size_t>(k)];
  for (int j = k + 1; j <= forest.n; ++j) {
    const auto& here = counts[static_cast<std::size_t>(j)];
    for (std::size_t i = first_immigrant(forest, j); i < forest.size(j); ++i) {
      clans.immigrant_clan_sizes[forest.founder_of(j, i)] = here[i];
    }
  }
  return clans;
}

ClanDecomposition clan_decomposition(const GenealogyForest& forest, int k) {
  if (k < 0 || k >= forest.n) throw DomainError("clan_decomposition requires 0 <= k < n");
  return clan_decomposition(forest, descendant_counts(forest), k);
}

std::pair<std::size_t, std::size_t> pair_from_index(std::uint64_t index) {
  // Pairs are ordered by their larger element j; pairs (., j) occupy
  // [j(j-1)/2, j(j+1)/2).
  auto j = static_cast<std::uint64_t>(
      std::floor((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(index))) / 2.0));
  while (j * (j - 1) / 2 > index) --j;
  while ((j + 1) * j / 2 <= index) ++j;
  return {static_cast<std::size_t>(index - j * (j - 1) / 2), static_cast<std::size_t>(j)};
}

CoalescenceTime pair_coalescence(const GenealogyForest& forest, std::size_t i, std::size_t j) {
  std::size_t a = i;
  std::size_t b = j;
  for (int g = forest.n; g >= 0; --g) {
    if (a == b) return CoalescenceTime::finite(g);
    const Particle& pa = forest.at(g, a);
    const Particle& pb = forest.at(g, b);
    if (pa.parent == Particle::kNoParent || pb.parent == Particle::kNoParent) break;
    a = static_cast<std::size_t>(pa.parent);
    b = static_cast<std::size_t>(pb.parent);
  }
  return CoalescenceTime::infinite();
}

CoalescenceTime sample_pairwise_coalescence(const GenealogyForest& forest, Rng& rng) {
  const std::uint64_t z = forest.final_size();
  if (z <= 1) throw PreconditionError("pairwise coalescence needs Z_n > 1");
  std::uniform_int_distribution<std::uint64_t> pick(0, z * (z - 1) / 2 - 1);
  const auto [i, j] = pair_from_index(pick(rng));
  return pair_coalescence(forest, i, j);
}

PairwiseRatio pairwise_ratio_sample(const ClanDecomposition& clans, std::int64_t final_size,
                                    int n) {
  PairwiseRatio out;
  out.selected = final_size > 1;
  if (!out.selected) return out;
  std::int64_t numerator = 0;
  for (auto y : clans.clan_sizes) numerator += falling2(y);
  // Generation-n immigrants are singletons; the bound j <= n - 1 is implicit.
  for (const auto& [id, y] : clans.immigrant_clan_sizes) {
    if (id.generation <= n - 1) numerator += falling2(y);
  }
  out.ratio = static_cast<double>(numerator) / static_cast<double>(falling2(final_size));
  return out;
}

PairwiseRatio pairwise_ratio_sample(const GenealogyForest& forest, int k) {
  const ClanDecomposition clans = clan_decomposition(forest, k);
  return pairwise_ratio_sample(clans, static_cast<std::int64_t>(forest.final_size()), forest.n);
}

CoalescenceTime total_coalescence(const GenealogyForest& forest) {
  if (forest.final_size() == 0) throw PreconditionError("total coalescence needs Z_n > 0");
  std::vector<std::size_t> current(forest.final_size());
  for (std::size_t i = 0; i < current.size(); ++i) current[i] = i;
  std::vector<std::size_t> next;
  for (int g = forest.n; g >= 0; --g) {
    if (current.size() == 1) return CoalescenceTime::finite(g);
    next.clear();
    for (std::size_t i : current) {
      const Particle& p = forest.at(g, i);
      // A lineage ending at an immigrant can never meet the others.
      if (p.parent == Particle::kNoParent) return CoalescenceTime::infinite();
      const auto parent = static_cast<std::size_t>(p.parent);
      if (next.empty() || next.back() != parent) next.push_back(parent);
    }
    current.swap(next);
  }
  return CoalescenceTime::infinite();
}

CoalescenceTime oldest_clan_birth(const GenealogyForest& forest,
                                  const std::vector<std::vector<std::int64_t>>& counts) {
  if (forest.final_size() == 0) return CoalescenceTime::infinite();
  for (int j = 0; j <= forest.n; ++j) {
    const auto& here = counts[static_cast<std::size_t>(j)];
    for (std::size_t i = first_immigrant(forest, j); i < forest.size(j); ++i) {
      if (here[i] > 0) return CoalescenceTime::finite(j);
    }
  }
  return CoalescenceTime::infinite();
}

CoalescenceTime oldest_clan_birth(const GenealogyForest& forest) {
  return oldest_clan_birth(forest, descendant_counts(forest));
}

std::int64_t surviving_clans(const GenealogyForest& forest,
                             const std::vector<std::vector<std::int64_t>>& counts) {
  std::int64_t clans = 0;
  for (int j = 0; j <= forest.n; ++j) {
    const auto& here = counts[static_cast<std::size_t>(j)];
    for (std::size_t i = first_immigrant(forest, j); i < forest.size(j); ++i) {
      if (here[i] > 0) ++clans;
    }
  }
  return clans;
}

std::vector<std::size_t> ancestor_set_sizes(const GenealogyForest& forest) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(forest.n) + 1, 0);
  std::vector<std::size_t> current(forest.final_size());
  for (std::size_t i = 0; i < current.size(); ++i) current[i] = i;
  std::vector<std::size_t> next;
  for (int g = forest.n; g >= 0; --g) {
    sizes[static_cast<std::size_t>(g)] = current.size();
    if (g == 0) break;
    next.clear();
    for (std::size_t i : current) {
      const Particle& p = forest.at(g, i);
      if (p.parent == Particle::kNoParent) continue;
      const auto parent = static_cast<std::size_t>(p.parent);
      if (next.empty() || next.back() != parent) next.push_back(parent);
    }
    current.swap(next);
  }
  return sizes;
}

}  // namespace gwpi

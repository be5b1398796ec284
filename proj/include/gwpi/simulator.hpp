#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwpi/distributions.hpp"
#include "gwpi/rng.hpp"

namespace gwpi {

/// Immigrant that founded a clan: arrival generation and ordinal within it.
struct FounderId {
  int generation = 0;
  int ordinal = 0;
  auto operator<=>(const FounderId&) const = default;
};

/// One particle record. Immigrants have parent == kNoParent.
struct Particle {
  static constexpr std::int32_t kNoParent = -1;
  std::int32_t parent = kNoParent;
  std::int32_t founder = 0;  ///< index into GenealogyForest::founders
};

/// Parent-indexed genealogy of one run up to generation n. Within a
/// generation, children come first (grouped by parent, in parent order),
/// followed by that generation's immigrants.
struct GenealogyForest {
  int n = 0;
  std::vector<std::vector<Particle>> generations;  ///< size n + 1
  std::vector<FounderId> founders;
  std::vector<int> immigrants;  ///< I_0 .. I_n

  std::size_t size(int g) const { return generations[static_cast<std::size_t>(g)].size(); }
  std::size_t final_size() const { return generations.back().size(); }
  const Particle& at(int g, std::size_t i) const {
    return generations[static_cast<std::size_t>(g)][i];
  }
  const FounderId& founder_of(int g, std::size_t i) const {
    return founders[static_cast<std::size_t>(at(g, i).founder)];
  }
  std::uint64_t total_particles() const;

  void clear(int new_n);
  /// Checks the structural invariants; returns a description of the first violation.
  std::optional<std::string> check_invariants() const;
  /// generations -> [[parent_index, founder_generation, founder_ordinal], ...]
  std::string to_json() const;
};

/// Generation of a most recent common ancestor, or none.
class CoalescenceTime {
 public:
  static CoalescenceTime finite(int generation) { return CoalescenceTime(generation); }
  static CoalescenceTime infinite() { return CoalescenceTime(); }

  bool is_finite() const noexcept { return generation_.has_value(); }
  int generation() const { return generation_.value(); }
  bool operator==(const CoalescenceTime&) const = default;

 private:
  CoalescenceTime() = default;
  explicit CoalescenceTime(int g) : generation_(g) {}
  std::optional<int> generation_;
};

/// Generation-n clan sizes seen from a cut generation k.
struct ClanDecomposition {
  int k = 0;
  std::vector<std::int64_t> clan_sizes;  ///< descendants of each generation-k particle
  std::map<FounderId, std::int64_t> immigrant_clan_sizes;  ///< immigrants arriving after k
  std::int64_t total() const;
};

inline constexpr std::uint64_t kDefaultParticleCap = 100'000'000;

struct SimulationOptions {
  std::uint64_t particle_cap = kDefaultParticleCap;
};

/// Forward simulation of the process with immigration for n generations.
GenealogyForest simulate_forest(const ModelParams& params, int n, Rng& rng,
                                const SimulationOptions& options = {});
/// Same, reusing the storage of `forest`.
void simulate_forest_into(GenealogyForest& forest, const ModelParams& params, int n, Rng& rng,
                          const SimulationOptions& options = {});

/// Single-ancestor Galton-Watson process (no immigration) for n generations.
GenealogyForest simulate_plain_gw(const DiscreteLaw& offspring, int n, Rng& rng,
                                  const SimulationOptions& options = {});
void simulate_plain_gw_into(GenealogyForest& forest, const DiscreteLaw& offspring, int n,
                            Rng& rng, const SimulationOptions& options = {});

/// counts[g][i] = number of generation-n descendants of particle i of generation g,
/// computed by one backward sweep over the parent arrays.
std::vector<std::vector<std::int64_t>> descendant_counts(const GenealogyForest& forest);

ClanDecomposition clan_decomposition(const GenealogyForest& forest, int k);
ClanDecomposition clan_decomposition(const GenealogyForest& forest,
                                     const std::vector<std::vector<std::int64_t>>& counts, int k);

/// Uniform unordered pair index in [0, C(z,2)) mapped to i < j.
std::pair<std::size_t, std::size_t> pair_from_index(std::uint64_t index);

/// MRCA generation of particles i and j of the final generation.
CoalescenceTime pair_coalescence(const GenealogyForest& forest, std::size_t i, std::size_t j);

/// Draws a uniform unordered pair from generation n and returns its coalescence time.
/// Throws PreconditionError when Z_n <= 1.
CoalescenceTime sample_pairwise_coalescence(const GenealogyForest& forest, Rng& rng);

struct PairwiseRatio {
  double ratio = 0.0;
  bool selected = false;
};

/// Fraction of ordered pairs of generation n sharing an ancestor at generation
/// >= k through a generation-k particle or a post-k immigrant.
PairwiseRatio pairwise_ratio_sample(const GenealogyForest& forest, int k);
PairwiseRatio pairwise_ratio_sample(const ClanDecomposition& clans, std::int64_t final_size,
                                    int n);

/// MRCA of the whole final generation, found by mapping the ancestor set of
/// generation n backward one generation at a time. Throws PreconditionError
/// when Z_n = 0.
CoalescenceTime total_coalescence(const GenealogyForest& forest);

/// Earliest immigration generation with a living generation-n descendant.
CoalescenceTime oldest_clan_birth(const GenealogyForest& forest);
CoalescenceTime oldest_clan_birth(const GenealogyForest& forest,
                                  const std::vector<std::vector<std::int64_t>>& counts);

/// Number of immigrant clans with at least one generation-n descendant.
std::int64_t surviving_clans(const GenealogyForest& forest,
                             const std::vector<std::vector<std::int64_t>>& counts);

/// Sizes of the ancestor sets of generation n, index g = generation.
std::vector<std::size_t> ancestor_set_sizes(const GenealogyForest& forest);

}  // namespace gwpi

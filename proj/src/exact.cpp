#include "gwpi/exact.hpp"

#include <cmath>
#include <cstdio>

#include "gwpi/errors.hpp"
#include "gwpi/simulator.hpp"

namespace gwpi {

SurvivalTable iterate_survival(const DiscreteLaw& offspring, int n) {
  if (n < 0) throw DomainError("iterate_survival requires n >= 0");
  SurvivalTable table;
  table.q.resize(static_cast<std::size_t>(n) + 1);
  table.q[0] = 1.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
    table.q[j + 1] = 1.0 - offspring.pgf(1.0 - table.q[j]);
  }
  return table;
}

std::vector<double> single_clan_bound_series(const ModelParams& params, int max_n) {
  const SurvivalTable survival = iterate_survival(params.offspring, max_n);
  const DiscreteLaw& b = params.immigration;
  std::vector<double> series(static_cast<std::size_t>(max_n) + 1);
  // product = prod_{k<=n} B(a_k); sum = sum_{j<=n} B'(a_j) q_j prod_{k<=n, k!=j} B(a_k)
  double product = 1.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < series.size(); ++n) {
    const double a = survival.extinct(n);
    const double pgf = b.pgf(a);
    sum = sum * pgf + b.pgf_derivative(a) * survival.q[n] * product;
    product *= pgf;
    series[n] = sum;
  }
  return series;
}

double single_clan_bound(const ModelParams& params, const SurvivalTable& survival, int n) {
  if (n < 0 || static_cast<std::size_t>(n) >= survival.q.size()) {
    throw DomainError("single_clan_bound: survival table too short");
  }
  const DiscreteLaw& b = params.immigration;
  double product = 1.0;
  double sum = 0.0;
  for (std::size_t j = 0; j <= static_cast<std::size_t>(n); ++j) {
    const double a = survival.extinct(j);
    const double pgf = b.pgf(a);
    sum = sum * pgf + b.pgf_derivative(a) * survival.q[j] * product;
    product *= pgf;
  }
  return sum;
}

double single_clan_bound(const ModelParams& params, int n) {
  if (n < 1) throw DomainError("single_clan_bound requires n >= 1");
  return single_clan_bound(params, iterate_survival(params.offspring, n), n);
}

namespace {

// Generation of the most recent common ancestor of final-generation particles
// i and j, from their full ancestor chains; -1 when there is none.
int chain_mrca(const GenealogyForest& forest, std::size_t i, std::size_t j) {
  std::vector<std::int64_t> chain_i(static_cast<std::size_t>(forest.n) + 1, -1);
  std::vector<std::int64_t> chain_j(chain_i.size(), -1);
  auto fill = [&](std::vector<std::int64_t>& chain, std::size_t start) {
    std::int64_t idx = static_cast<std::int64_t>(start);
    for (int g = forest.n; g >= 0 && idx >= 0; --g) {
      chain[static_cast<std::size_t>(g)] = idx;
      idx = forest.at(g, static_cast<std::size_t>(idx)).parent;
    }
  };
  fill(chain_i, i);
  fill(chain_j, j);
  for (int g = forest.n; g >= 0; --g) {
    const auto a = chain_i[static_cast<std::size_t>(g)];
    if (a >= 0 && a == chain_j[static_cast<std::size_t>(g)]) return g;
  }
  return -1;
}

class Enumerator {
 public:
  Enumerator(const ModelParams& params, int n, std::uint64_t cap)
      : params_(params), n_(n), cap_(cap) {
    table_.n = n;
    table_.pairwise_window_ratio.assign(static_cast<std::size_t>(n), 0.0);
    table_.pairwise_window_direct.assign(static_cast<std::size_t>(n), 0.0);
    table_.total_coalescence_cdf.assign(static_cast<std::size_t>(n) + 1, 0.0);
    table_.oldest_clan_tail.assign(static_cast<std::size_t>(n) + 1, 0.0);
    forest_.clear(n);
  }

  ExactTable run() {
    const auto imm = params_.immigration.pmf();
    for (std::size_t b = 0; b < imm.size(); ++b) {
      if (imm[b] <= 0.0) continue;
      push_immigrants(0, static_cast<int>(b));
      visit_generation(0, imm[b]);
      pop_immigrants(0, static_cast<int>(b));
    }
    finish();
    return std::move(table_);
  }

 private:
  const ModelParams& params_;
  int n_;
  std::uint64_t cap_;
  GenealogyForest forest_;
  ExactTable table_;

  void push_immigrants(int g, int count) {
    auto& gen = forest_.generations[static_cast<std::size_t>(g)];
    for (int l = 0; l < count; ++l) {
      forest_.founders.push_back({g, l});
      gen.push_back({Particle::kNoParent, static_cast<std::int32_t>(forest_.founders.size() - 1)});
    }
    forest_.immigrants[static_cast<std::size_t>(g)] = count;
  }

  void pop_immigrants(int g, int count) {
    auto& gen = forest_.generations[static_cast<std::size_t>(g)];
    gen.resize(gen.size() - static_cast<std::size_t>(count));
    forest_.founders.resize(forest_.founders.size() - static_cast<std::size_t>(count));
    forest_.immigrants[static_cast<std::size_t>(g)] = 0;
  }

  // Immigration count of generation g + 1 first, then each particle's offspring.
  void visit_generation(int g, double prob) {
    const auto imm = params_.immigration.pmf();
    for (std::size_t b = 0; b < imm.size(); ++b) {
      if (imm[b] <= 0.0) continue;
      visit_particle(g, 0, static_cast<int>(b), prob * imm[b]);
    }
  }

  void visit_particle(int g, std::size_t i, int arrivals, double prob) {
    if (i == forest_.size(g)) {
      push_immigrants(g + 1, arrivals);
      if (g + 1 == n_) {
        leaf(prob);
      } else {
        visit_generation(g + 1, prob);
      }
      pop_immigrants(g + 1, arrivals);
      return;
    }
    const auto off = params_.offspring.pmf();
    auto& children = forest_.generations[static_cast<std::size_t>(g) + 1];
    const Particle parent = forest_.at(g, i);
    for (std::size_t c = 0; c < off.size(); ++c) {
      if (off[c] <= 0.0) continue;
      for (std::size_t k = 0; k < c; ++k) {
        children.push_back({static_cast<std::int32_t>(i), parent.founder});
      }
      visit_particle(g, i + 1, arrivals, prob * off[c]);
      children.resize(children.size() - c);
    }
  }

  void leaf(double prob) {
    if (++table_.histories > cap_) {
      throw ExplosionError("enumeration exceeded the history cap of " + std::to_string(cap_),
                           cap_);
    }
    table_.total_probability += prob;
    const auto z = static_cast<std::int64_t>(forest_.final_size());
    table_.final_size_pmf[z] += prob;
    const auto counts = descendant_counts(forest_);

    if (z > 1) {
      table_.p_more_than_one += prob;
      for (int k = 0; k < n_; ++k) {
        const auto clans = clan_decomposition(forest_, counts, k);
        table_.pairwise_window_ratio[static_cast<std::size_t>(k)] +=
            prob * pairwise_ratio_sample(clans, z, n_).ratio;
      }
      const double pairs = static_cast<double>(z) * static_cast<double>(z - 1) / 2.0;
      std::vector<std::int64_t> at_least(static_cast<std::size_t>(n_), 0);
      std::int64_t finite = 0;
      for (std::size_t j = 1; j < static_cast<std::size_t>(z); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
          const int g = chain_mrca(forest_, i, j);
          if (g < 0) continue;
          ++finite;
          for (int k = 0; k <= std::min(g, n_ - 1); ++k) ++at_least[static_cast<std::size_t>(k)];
        }
      }
      for (int k = 0; k < n_; ++k) {
        table_.pairwise_window_direct[static_cast<std::size_t>(k)] +=
            prob * static_cast<double>(at_least[static_cast<std::size_t>(k)]) / pairs;
      }
      table_.pairwise_finite += prob * static_cast<double>(finite) / pairs;
    }

    if (z > 0) {
      table_.p_positive += prob;
      const CoalescenceTime a = total_coalescence(forest_);
      if (a.is_finite()) {
        for (int g = a.generation(); g <= n_; ++g) {
          table_.total_coalescence_cdf[static_cast<std::size_t>(g)] += prob;
        }
        table_.total_finite += prob;
      }
      if (surviving_clans(forest_, counts) == 1) table_.single_clan += prob;
    }

    const CoalescenceTime tau = oldest_clan_birth(forest_, counts);
    const int limit = tau.is_finite() ? tau.generation() : n_ + 1;
    for (int k = 0; k < limit && k <= n_; ++k) table_.oldest_clan_tail[static_cast<std::size_t>(k)] += prob;
  }

  void finish() {
    auto normalize = [](std::vector<double>& v, double by) {
      for (double& x : v) x = by > 0.0 ? x / by : 0.0;
    };
    normalize(table_.pairwise_window_ratio, table_.p_more_than_one);
    normalize(table_.pairwise_window_direct, table_.p_more_than_one);
    normalize(table_.total_coalescence_cdf, table_.p_positive);
    if (table_.p_more_than_one > 0.0) table_.pairwise_finite /= table_.p_more_than_one;
    if (table_.p_positive > 0.0) table_.total_finite /= table_.p_positive;
  }
};

}  // namespace

ExactTable enumerate_tiny(const ModelParams& params, int n, std::uint64_t history_cap) {
  if (n < 1) throw DomainError("enumerate_tiny requires n >= 1");
  return Enumerator(params, n, history_cap).run();
}

double exact_pairwise_prob(const ExactTable& table, int k) {
  if (k < 0 || k >= table.n) throw DomainError("exact_pairwise_prob requires 0 <= k < n");
  const double ratio = table.pairwise_window_ratio[static_cast<std::size_t>(k)];
  const double direct = table.pairwise_window_direct[static_cast<std::size_t>(k)];
  if (std::abs(ratio - direct) > 1e-12) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "clan-ratio %.17g and pair-walk %.17g disagree at k=%d", ratio,
                  direct, k);
    throw Error(buf);
  }
  return ratio;
}

double exact_pairwise_prob(const ModelParams& params, int n, int k, std::uint64_t history_cap) {
  return exact_pairwise_prob(enumerate_tiny(params, n, history_cap), k);
}

std::map<std::string, double> ExactTable::targets() const {
  std::map<std::string, double> out;
  for (const auto& [z, p] : final_size_pmf) out["P(Z_n=" + std::to_string(z) + ")"] = p;
  for (std::size_t k = 0; k < pairwise_window_ratio.size(); ++k) {
    out["P(" + std::to_string(k) + "<=X_n<n|Z_n>1)"] = pairwise_window_ratio[k];
  }
  out["P(X_n<inf|Z_n>1)"] = pairwise_finite;
  for (std::size_t g = 0; g < total_coalescence_cdf.size(); ++g) {
    out["P(A_n<=" + std::to_string(g) + "|Z_n>0)"] = total_coalescence_cdf[g];
  }
  out["P(A_n<inf|Z_n>0)"] = total_finite;
  for (std::size_t k = 0; k < oldest_clan_tail.size(); ++k) {
    out["P(tau_n>" + std::to_string(k) + ")"] = oldest_clan_tail[k];
  }
  out["P(single surviving clan)"] = single_clan;
  return out;
}

nlohmann::json golden_json(const ModelParams& params, const ExactTable& table) {
  nlohmann::json targets = nlohmann::json::object();
  for (const auto& [name, value] : table.targets()) targets[name] = value;
  return {
      {"params",
       {{"offspring", std::vector<double>(params.offspring.pmf().begin(), params.offspring.pmf().end())},
        {"immigration",
         std::vector<double>(params.immigration.pmf().begin(), params.immigration.pmf().end())}}},
      {"n", table.n},
      {"histories", table.histories},
      {"targets", targets}};
}

}  // namespace gwpi

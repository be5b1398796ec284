#include "gwpi/harness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "gwpi/errors.hpp"
#include "gwpi/exact.hpp"
#include "gwpi/parallel.hpp"
#include "gwpi/simulator.hpp"

namespace gwpi {

namespace {

constexpr std::size_t kReplicatesPerBlock = 64;
constexpr std::size_t kBaselineReplicatesPerBlock = 1024;
constexpr int kNotSelected = -2;
constexpr int kInfinite = -1;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string with_u(const std::string& name, double u) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "[u=%g]", u);
  return name + buf;
}

bool same_u(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) < 1e-12;
}

const Target& find_target(const std::vector<Target>& targets, const std::string& name, double u) {
  for (const auto& t : targets) {
    if (t.name == name && same_u(t.u, u)) return t;
  }
  throw Error("no target " + name);
}

int encode(const CoalescenceTime& t) { return t.is_finite() ? t.generation() : kInfinite; }

void check_run_options(const RunOptions& options) {
  if (options.n < 1) throw PreconditionError("n must be >= 1");
  if (options.replicates < 100) throw PreconditionError("replicates must be >= 100");
  for (double u : options.u_grid) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("u grid values must lie in (0,1)");
  }
}

struct Block {
  std::vector<std::int64_t> final_size;
  std::vector<int> pair;   // coalescence generation of the sampled pair
  std::vector<int> total;  // total coalescence generation
  std::vector<int> oldest;
  std::vector<char> single;
  std::vector<double> ratios;  // per replicate: one per u, then k = 0
};

}  // namespace

int cut_generation(double u, int n) {
  const int k = static_cast<int>(std::lround(u * static_cast<double>(n)));
  return std::clamp(k, 0, n - 1);
}

const Target& FiniteNResult::target(const std::string& name, double u) const {
  return find_target(targets, name, u);
}

const Target& BaselineResult::target(const std::string& name, double u) const {
  return find_target(targets, name, u);
}

FiniteNResult run_finite_n(const ModelParams& params, const RunOptions& options) {
  check_run_options(options);
  const int n = options.n;
  const std::size_t nu = options.u_grid.size();
  std::vector<int> cuts;
  for (double u : options.u_grid) cuts.push_back(cut_generation(u, n));
  cuts.push_back(0);
  const std::size_t width = cuts.size();

  const std::size_t blocks = (options.replicates + kReplicatesPerBlock - 1) / kReplicatesPerBlock;
  SimulationOptions sim;
  sim.particle_cap = options.particle_cap;
  auto results = parallel_map<Block>(blocks, options.threads, [&](std::size_t b) {
    Block block;
    GenealogyForest forest;
    const std::uint64_t begin = b * kReplicatesPerBlock;
    const std::uint64_t end = std::min<std::uint64_t>(options.replicates, begin + kReplicatesPerBlock);
    for (std::uint64_t r = begin; r < end; ++r) {
      Rng rng = stream_rng(options.seed, r);
      simulate_forest_into(forest, params, n, rng, sim);
      const auto z = static_cast<std::int64_t>(forest.final_size());
      const auto counts = descendant_counts(forest);
      block.final_size.push_back(z);
      for (int k : cuts) {
        block.ratios.push_back(
            pairwise_ratio_sample(clan_decomposition(forest, counts, k), z, n).ratio);
      }
      block.pair.push_back(z > 1 ? encode(sample_pairwise_coalescence(forest, rng)) : kNotSelected);
      block.total.push_back(z > 0 ? encode(total_coalescence(forest)) : kNotSelected);
      block.oldest.push_back(encode(oldest_clan_birth(forest, counts)));
      block.single.push_back(surviving_clans(forest, counts) == 1 ? 1 : 0);
    }
    return block;
  });

  std::vector<RatioAccumulator> window_ratio(nu), window_pair(nu), oldest_tail(nu);
  RatioAccumulator finite_ratio, finite_pair, total_finite, single, positive, more, scaled;
  FiniteNResult result;
  result.options = options;
  result.scaled_sizes.reserve(options.replicates);
  for (const Block& block : results) {
    for (std::size_t i = 0; i < block.final_size.size(); ++i) {
      const std::int64_t z = block.final_size[i];
      const bool two = z > 1;
      const double* ratios = &block.ratios[i * width];
      const int x = block.pair[i];
      for (std::size_t q = 0; q < nu; ++q) {
        window_ratio[q].add(ratios[q], two);
        window_pair[q].add(x >= cuts[q] ? 1.0 : 0.0, two);
        const int tau = block.oldest[i];
        oldest_tail[q].add(tau == kInfinite || tau > cuts[q] ? 1.0 : 0.0);
      }
      finite_ratio.add(ratios[nu], two);
      finite_pair.add(x >= 0 ? 1.0 : 0.0, two);
      total_finite.add(block.total[i] >= 0 ? 1.0 : 0.0, z > 0);
      single.add(block.single[i] ? 1.0 : 0.0);
      positive.add(z > 0 ? 1.0 : 0.0);
      more.add(two ? 1.0 : 0.0);
      const double s = static_cast<double>(z) / static_cast<double>(n);
      scaled.add(s);
      result.scaled_sizes.push_back(s);
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t q = 0; q < nu; ++q) {
    const double u = options.u_grid[q];
    result.targets.push_back({"window_ratio", u, cuts[q], window_ratio[q].estimate()});
    result.targets.push_back({"window_pair", u, cuts[q], window_pair[q].estimate()});
    result.targets.push_back({"oldest_clan_tail", u, cuts[q], oldest_tail[q].estimate()});
  }
  result.targets.push_back({"finite_ratio", nan, 0, finite_ratio.estimate()});
  result.targets.push_back({"finite_pair", nan, 0, finite_pair.estimate()});
  result.targets.push_back({"total_finite", nan, -1, total_finite.estimate()});
  result.targets.push_back({"single_clan", nan, -1, single.estimate()});
  result.targets.push_back({"positive", nan, -1, positive.estimate()});
  result.targets.push_back({"more_than_one", nan, -1, more.estimate()});
  result.targets.push_back({"scaled_size", nan, -1, scaled.estimate()});

  result.ks_gamma = ks_distance(result.scaled_sizes,
                                [&](double t) { return gamma_limit_cdf(t, params); });
  result.single_clan_bound = single_clan_bound(params, n);

  for (std::size_t q = 0; q < nu; ++q) {
    const double u = options.u_grid[q];
    result.verdicts.push_back(compare(window_ratio[q].estimate(), window_pair[q].estimate(), 0.0,
                                      with_u("estimators_agree", u)));
    result.verdicts.push_back(compare(oldest_tail[q].estimate(), limit_tau(u, params.gamma),
                                      options.slack, with_u("oldest_clan_tail_vs_limit", u)));
  }
  result.verdicts.push_back(
      compare(finite_ratio.estimate(), finite_pair.estimate(), 0.0, "estimators_agree[finite]"));
  {
    const auto e = total_finite.estimate();
    Verdict v;
    v.name = "total_finite_below_single_clan_bound";
    v.empirical = e.value;
    v.empirical_stderr = e.std_error;
    v.reference = result.single_clan_bound;
    v.allowance = 3.0 * e.std_error;
    v.pass = e.value <= result.single_clan_bound + v.allowance;
    result.verdicts.push_back(v);
  }
  result.verdicts.push_back(
      compare(single.estimate(), result.single_clan_bound, 0.0, "single_clan_vs_exact"));
  result.verdicts.push_back(at_most(result.ks_gamma, 0.05, "ks_gamma_limit"));
  return result;
}

BaselineResult run_plain_gw(const DiscreteLaw& offspring, const RunOptions& options) {
  check_run_options(options);
  validate_critical_offspring(offspring);
  const int n = options.n;
  const std::size_t nu = options.u_grid.size();
  std::vector<int> cuts;
  for (double u : options.u_grid) cuts.push_back(cut_generation(u, n));

  struct Partial {
    std::vector<RatioAccumulator> ratio, pair, tail;
    RatioAccumulator survival;
  };
  SimulationOptions sim;
  sim.particle_cap = options.particle_cap;
  const std::size_t blocks =
      (options.replicates + kBaselineReplicatesPerBlock - 1) / kBaselineReplicatesPerBlock;
  auto partials = parallel_map<Partial>(blocks, options.threads, [&](std::size_t b) {
    Partial p;
    p.ratio.resize(nu);
    p.pair.resize(nu);
    p.tail.resize(nu);
    GenealogyForest forest;
    const std::uint64_t begin = b * kBaselineReplicatesPerBlock;
    const std::uint64_t end =
        std::min<std::uint64_t>(options.replicates, begin + kBaselineReplicatesPerBlock);
    for (std::uint64_t r = begin; r < end; ++r) {
      Rng rng = stream_rng(options.seed, r);
      simulate_plain_gw_into(forest, offspring, n, rng, sim);
      const auto y = static_cast<std::int64_t>(forest.final_size());
      p.survival.add(y > 0 ? 1.0 : 0.0);
      if (y == 0) {
        for (std::size_t q = 0; q < nu; ++q) {
          p.ratio[q].add(0.0, false);
          p.pair[q].add(0.0, false);
          p.tail[q].add(0.0, false);
        }
        continue;
      }
      const auto counts = descendant_counts(forest);
      const int a = total_coalescence(forest).generation();
      const int x = y > 1 ? encode(sample_pairwise_coalescence(forest, rng)) : kNotSelected;
      for (std::size_t q = 0; q < nu; ++q) {
        const double ratio =
            y > 1 ? pairwise_ratio_sample(clan_decomposition(forest, counts, cuts[q]), y, n).ratio
                  : 0.0;
        p.ratio[q].add(ratio, y > 1);
        p.pair[q].add(x >= cuts[q] ? 1.0 : 0.0, y > 1);
        p.tail[q].add(a > cuts[q] ? 1.0 : 0.0);
      }
    }
    return p;
  });

  Partial total;
  total.ratio.resize(nu);
  total.pair.resize(nu);
  total.tail.resize(nu);
  for (const auto& p : partials) {
    for (std::size_t q = 0; q < nu; ++q) {
      total.ratio[q].merge(p.ratio[q]);
      total.pair[q].merge(p.pair[q]);
      total.tail[q].merge(p.tail[q]);
    }
    total.survival.merge(p.survival);
  }
  BaselineResult result;
  result.options = options;
  for (std::size_t q = 0; q < nu; ++q) {
    const double u = options.u_grid[q];
    result.targets.push_back({"pairwise_ratio", u, cuts[q], total.ratio[q].estimate()});
    result.targets.push_back({"pairwise_pair", u, cuts[q], total.pair[q].estimate()});
    result.targets.push_back({"total_tail", u, cuts[q], total.tail[q].estimate()});
  }
  result.targets.push_back(
      {"survival", std::numeric_limits<double>::quiet_NaN(), -1, total.survival.estimate()});
  return result;
}

LimitTable run_limits(const ModelParams& params, const std::vector<double>& u_grid,
                      const MonteCarloOptions& options) {
  LimitTable table;
  table.epsilon = options.epsilon;
  for (double u : u_grid) {
    table.rows.push_back({u, limit_pairwise(u, params, options), limit_tau(u, params.gamma)});
  }
  table.pairwise_finite = limit_pairwise_finite(params, options);

  const ImmigrationMeasureSampler full(params.gamma, params.sigma2, options.epsilon);
  const ImmigrationMeasureSampler half(params.gamma, params.sigma2, options.epsilon / 2.0);
  table.sum_bias_bound = full.sum_bias_bound();
  RatioAccumulator shift, phi_shift;
  Rng rng = stream_rng(options.seed, 0xe951104ULL);
  for (std::uint64_t i = 0; i < options.draws; ++i) {
    const PointMeasure fine = half.sample(rng);
    const PointMeasure coarse = fine.restricted_above(options.epsilon);
    shift.add(fine.sum() - coarse.sum());
    if (!coarse.empty()) {
      const double a = fine.sum_squares() / (fine.sum() * fine.sum());
      const double b = coarse.sum_squares() / (coarse.sum() * coarse.sum());
      phi_shift.add(a - b);
    }
  }
  table.half_epsilon_shift = shift.estimate().value;
  table.half_epsilon_shift_stderr = shift.estimate().std_error;
  table.half_epsilon_phi_shift = phi_shift.estimate().value;
  return table;
}

nlohmann::json params_json(const ModelParams& params) {
  return {{"offspring", std::vector<double>(params.offspring.pmf().begin(), params.offspring.pmf().end())},
          {"immigration",
           std::vector<double>(params.immigration.pmf().begin(), params.immigration.pmf().end())},
          {"m", params.m},
          {"sigma2", params.sigma2},
          {"beta", params.beta},
          {"gamma", params.gamma},
          {"hash", params.hash()}};
}

nlohmann::json estimate_json(const EstimateWithCI& e) {
  return {{"value", e.value},
          {"stderr", e.std_error},
          {"n_effective", e.n_effective},
          {"conditioning_rate", e.conditioning_rate}};
}

nlohmann::json verdict_json(const Verdict& v) {
  return {{"name", v.name},
          {"verdict", v.pass ? "PASS" : "FAIL"},
          {"empirical", v.empirical},
          {"empirical_stderr", v.empirical_stderr},
          {"reference", v.reference},
          {"reference_stderr", v.reference_stderr},
          {"slack", v.slack},
          {"allowance", v.allowance}};
}

namespace {

nlohmann::json target_json(const Target& t) {
  nlohmann::json j = estimate_json(t.estimate);
  j["name"] = t.name;
  j["u"] = std::isnan(t.u) ? nlohmann::json(nullptr) : nlohmann::json(t.u);
  j["k"] = t.k;
  return j;
}

nlohmann::json limit_estimate_json(const LimitEstimate& e) {
  return {{"estimate", e.estimate.value},
          {"stderr", e.estimate.std_error},
          {"draws", e.draws},
          {"epsilon", e.epsilon},
          {"bias_bound", e.bias_bound},
          {"resample_count", e.resample_count}};
}

EstimateWithCI estimate_from(const nlohmann::json& j, const char* value_key) {
  EstimateWithCI e;
  e.value = j.at(value_key).get<double>();
  e.std_error = j.at("stderr").get<double>();
  return e;
}

}  // namespace

nlohmann::json report_json(const ExperimentConfig& config, const ModelParams& params,
                           const FiniteNResult& result) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : result.targets) targets.push_back(target_json(t));
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : result.verdicts) verdicts.push_back(verdict_json(v));
  nlohmann::json tau_limits = nlohmann::json::array();
  for (double u : result.options.u_grid) {
    tau_limits.push_back({{"u", u}, {"value", limit_tau(u, params.gamma)}});
  }
  return {{"version", kReportVersion},
          {"seed", result.options.seed},
          {"config", config.to_json()},
          {"params", params_json(params)},
          {"n", result.options.n},
          {"replicates", result.options.replicates},
          {"k_rule", "k = round(u n), clamped to [0, n-1]"},
          {"targets", targets},
          {"references",
           {{"oldest_clan_tail_limit", tau_limits},
            {"single_clan_bound", result.single_clan_bound},
            {"gamma_limit_mean", params.gamma * params.sigma2 / 2.0},
            {"ks_gamma", result.ks_gamma}}},
          {"verdicts", verdicts}};
}

std::string report_csv(const ModelParams& params, const FiniteNResult& result) {
  std::ostringstream out;
  out << "u,k,window_ratio,window_ratio_stderr,window_pair,window_pair_stderr,"
         "oldest_clan_tail,oldest_clan_tail_stderr,oldest_clan_tail_limit,verdict\n";
  for (double u : result.options.u_grid) {
    const auto& r = result.target("window_ratio", u);
    const auto& p = result.target("window_pair", u);
    const auto& t = result.target("oldest_clan_tail", u);
    const double lim = limit_tau(u, params.gamma);
    const Verdict v = compare(t.estimate, lim, result.options.slack);
    out << fmt(u) << ',' << r.k << ',' << fmt(r.estimate.value) << ',' << fmt(r.estimate.std_error)
        << ',' << fmt(p.estimate.value) << ',' << fmt(p.estimate.std_error) << ','
        << fmt(t.estimate.value) << ',' << fmt(t.estimate.std_error) << ',' << fmt(lim) << ','
        << (v.pass ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

nlohmann::json baseline_json(const BaselineResult& result, const ModelParams& params) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : result.targets) targets.push_back(target_json(t));
  return {{"version", kReportVersion},
          {"seed", result.options.seed},
          {"n", result.options.n},
          {"replicates", result.options.replicates},
          {"offspring", params_json(params)["offspring"]},
          {"targets", targets}};
}

nlohmann::json limits_json(const ExperimentConfig& config, const ModelParams& params,
                           const LimitTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"u", row.u}, {"pairwise", limit_estimate_json(row.pairwise)}, {"tau", row.tau}});
  }
  return {{"version", kReportVersion},
          {"seed", config.seed},
          {"config", config.to_json()},
          {"params", params_json(params)},
          {"rows", rows},
          {"pairwise_finite", limit_estimate_json(table.pairwise_finite)},
          {"truncation",
           {{"epsilon", table.epsilon},
            {"sum_bias_bound", table.sum_bias_bound},
            {"half_epsilon_sum_shift", table.half_epsilon_shift},
            {"half_epsilon_sum_shift_stderr", table.half_epsilon_shift_stderr},
            {"half_epsilon_phi_shift", table.half_epsilon_phi_shift}}}};
}

std::string limits_csv(const LimitTable& table) {
  std::ostringstream out;
  out << "u,limit_pairwise,limit_pairwise_stderr,limit_tau\n";
  for (const auto& row : table.rows) {
    out << fmt(row.u) << ',' << fmt(row.pairwise.estimate.value) << ','
        << fmt(row.pairwise.estimate.std_error) << ',' << fmt(row.tau) << '\n';
  }
  out << "finite," << fmt(table.pairwise_finite.estimate.value) << ','
      << fmt(table.pairwise_finite.estimate.std_error) << ",\n";
  return out.str();
}

bool Comparison::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

Comparison compare_report_to_limits(const nlohmann::json& report, const nlohmann::json& limits,
                                    double slack) {
  try {
    const auto rh = report.at("params").at("hash").get<std::string>();
    const auto lh = limits.at("params").at("hash").get<std::string>();
    if (rh != lh) {
      throw SchemaError("params hash mismatch: report " + rh + " vs limits " + lh);
    }
    Comparison c;
    auto report_target = [&](const std::string& name, const nlohmann::json& u) -> const nlohmann::json& {
      for (const auto& t : report.at("targets")) {
        if (t.at("name") != name) continue;
        if (u.is_null() ? t.at("u").is_null()
                        : (!t.at("u").is_null() && same_u(t.at("u").get<double>(), u.get<double>()))) {
          return t;
        }
      }
      throw SchemaError("report has no target " + name);
    };
    for (const auto& t : report.at("targets")) {
      if (t.at("name") != "window_ratio") continue;
      const double u = t.at("u").get<double>();
      const nlohmann::json* row = nullptr;
      for (const auto& r : limits.at("rows")) {
        if (same_u(r.at("u").get<double>(), u)) row = &r;
      }
      if (row == nullptr) throw SchemaError("limit table has no row for u=" + fmt(u));
      c.verdicts.push_back(compare(estimate_from(t, "value"),
                                   estimate_from(row->at("pairwise"), "estimate"), slack,
                                   with_u("pairwise_window", u)));
      const auto& tail = report_target("oldest_clan_tail", t.at("u"));
      c.verdicts.push_back(compare(estimate_from(tail, "value"), row->at("tau").get<double>(), slack,
                                   with_u("oldest_clan_tail", u)));
    }
    const auto& finite = report_target("finite_ratio", nlohmann::json(nullptr));
    c.verdicts.push_back(compare(estimate_from(finite, "value"),
                                 estimate_from(limits.at("pairwise_finite"), "estimate"), slack,
                                 "pairwise_finite"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed report or limit table: ") + e.what());
  }
}

nlohmann::json comparison_json(const Comparison& c, double slack) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : c.verdicts) verdicts.push_back(verdict_json(v));
  return {{"version", kReportVersion},
          {"slack", slack},
          {"all_pass", c.all_pass()},
          {"verdicts", verdicts}};
}

std::string comparison_csv(const Comparison& c) {
  std::ostringstream out;
  out << "name,estimate,stderr,limit,limit_stderr,allowance,verdict\n";
  for (const auto& v : c.verdicts) {
    out << v.name << ',' << fmt(v.empirical) << ',' << fmt(v.empirical_stderr) << ','
        << fmt(v.reference) << ',' << fmt(v.reference_stderr) << ',' << fmt(v.allowance) << ','
        << (v.pass ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

}  // namespace gwpi

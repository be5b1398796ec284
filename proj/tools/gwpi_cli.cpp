// gwpi: simulate critical branching processes with immigration and compare
// their coalescence statistics against exact values and limit laws.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gwpi/config.hpp"
#include "gwpi/errors.hpp"
#include "gwpi/exact.hpp"
#include "gwpi/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompareFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

struct CommonFlags {
  std::string config_path;
  gwpi::ConfigOverrides overrides;
  std::uint64_t seed = 0;
  int n = 0;
  std::uint64_t replicates = 0;
  std::vector<double> u;
  double epsilon = 0.0;
  double slack = 0.0;
  std::string out;
  int threads = 0;
  std::uint64_t baseline_replicates = 0;
  int survival_n = 100;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "experiment config (JSON)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--n", f.n, "final generation");
  cmd->add_option("--replicates", f.replicates, "replicates per run");
  cmd->add_option("--u", f.u, "u grid values in (0,1)")->delimiter(',');
  cmd->add_option("--epsilon", f.epsilon, "immigration-measure truncation");
  cmd->add_option("--slack", f.slack, "additive allowance for asymptotic comparisons");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads");
}

gwpi::ExperimentConfig resolve(CLI::App* cmd, CommonFlags& f) {
  auto& o = f.overrides;
  if (cmd->count("--seed")) o.seed = f.seed;
  if (cmd->count("--n")) o.n = f.n;
  if (cmd->count("--replicates")) o.replicates = f.replicates;
  if (cmd->count("--u")) o.u_grid = f.u;
  if (cmd->count("--epsilon")) o.epsilon = f.epsilon;
  if (cmd->count("--slack")) o.slack = f.slack;
  if (cmd->count("--out")) o.output_dir = f.out;
  if (cmd->count("--threads")) o.threads = f.threads;
  gwpi::ExperimentConfig config;
  bool seed_in_file = false;
  if (!f.config_path.empty()) {
    config = gwpi::load_config(f.config_path);
    std::ifstream in(f.config_path);
    std::stringstream text;
    text << in.rdbuf();
    seed_in_file = nlohmann::json::parse(text.str()).contains("seed");
  }
  return gwpi::finalize_config(config, o, seed_in_file);
}

gwpi::ModelParams params_of(const gwpi::ExperimentConfig& config) {
  try {
    return gwpi::validate_model(config.offspring, config.immigration);
  } catch (const gwpi::ModelError& e) {
    throw gwpi::ConfigError(std::string("model validation failed (") + e.check() + "): " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gwpi::ConfigError("cannot write " + path.string());
  out << content;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gwpi::SchemaError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw gwpi::SchemaError(path + ": " + e.what());
  }
}

gwpi::RunOptions run_options(const gwpi::ExperimentConfig& config, int n) {
  gwpi::RunOptions o;
  o.n = n;
  o.replicates = config.replicates;
  o.u_grid = config.u_grid;
  o.seed = config.seed;
  o.threads = config.threads;
  o.slack = config.slack;
  o.particle_cap = config.particle_cap;
  return o;
}

int cmd_simulate(CLI::App* cmd, CommonFlags& f) {
  const auto config = resolve(cmd, f);
  const auto params = params_of(config);
  const auto start = std::chrono::steady_clock::now();
  const auto result = gwpi::run_finite_n(params, run_options(config, config.n));
  const std::filesystem::path dir = config.output_dir;
  write_file(dir / "report.json", dump(gwpi::report_json(config, params, result)));
  write_file(dir / "report.csv", gwpi::report_csv(params, result));
  if (f.baseline_replicates > 0) {
    auto o = run_options(config, config.n);
    o.replicates = f.baseline_replicates;
    const auto baseline = gwpi::run_plain_gw(params.offspring, o);
    write_file(dir / "baseline.json", dump(gwpi::baseline_json(baseline, params)));
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "timing.json", dump({{"wall_clock_seconds", seconds}}));
  std::size_t failed = 0;
  for (const auto& v : result.verdicts) failed += v.pass ? 0 : 1;
  std::cout << "wrote " << (dir / "report.json").string() << " (" << result.verdicts.size()
            << " internal checks, " << failed << " failed, " << seconds << " s)\n";
  return kExitOk;
}

int cmd_limit(CLI::App* cmd, CommonFlags& f, std::uint64_t draws_flag) {
  auto config = resolve(cmd, f);
  if (cmd->count("--draws")) config.mc_draws = draws_flag;
  const auto params = params_of(config);
  gwpi::MonteCarloOptions mc;
  mc.draws = config.mc_draws;
  mc.epsilon = config.epsilon;
  mc.seed = config.seed;
  mc.threads = config.threads;
  const auto table = gwpi::run_limits(params, config.u_grid, mc);
  const std::filesystem::path dir = config.output_dir;
  write_file(dir / "limits.json", dump(gwpi::limits_json(config, params, table)));
  write_file(dir / "limits.csv", gwpi::limits_csv(table));
  std::cout << gwpi::limits_csv(table);
  return kExitOk;
}

int cmd_exact(CLI::App* cmd, CommonFlags& f) {
  auto config = resolve(cmd, f);
  if (!cmd->count("--n")) config.n = 2;
  const auto params = params_of(config);
  const auto table = gwpi::enumerate_tiny(params, config.n, config.history_cap);
  for (int k = 0; k < config.n; ++k) gwpi::exact_pairwise_prob(table, k);
  nlohmann::json golden = gwpi::golden_json(params, table);
  const auto survival = gwpi::iterate_survival(params.offspring, f.survival_n);
  golden["survival"] = survival.q;
  golden["single_clan_bound"] = gwpi::single_clan_bound_series(params, f.survival_n);
  const std::filesystem::path dir = config.output_dir;
  write_file(dir / "golden.json", dump(golden));
  std::cout << dump(golden["targets"]);
  return kExitOk;
}

int cmd_compare(CLI::App* cmd, CommonFlags& f, const std::string& report_path,
                const std::string& limits_path) {
  const auto config = resolve(cmd, f);
  const auto comparison = gwpi::compare_report_to_limits(read_json(report_path),
                                                         read_json(limits_path), config.slack);
  const std::filesystem::path dir = config.output_dir;
  write_file(dir / "comparison.json", dump(gwpi::comparison_json(comparison, config.slack)));
  write_file(dir / "comparison.csv", gwpi::comparison_csv(comparison));
  for (const auto& v : comparison.verdicts) {
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << "  estimate=" << v.empirical
              << " limit=" << v.reference << " allowance=" << v.allowance << '\n';
  }
  return comparison.all_pass() ? kExitOk : kExitCompareFailed;
}

int cmd_sweep(CLI::App* cmd, CommonFlags& f) {
  const auto config = resolve(cmd, f);
  const auto params = params_of(config);
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "n,finite_ratio,finite_ratio_stderr,total_finite,total_finite_stderr,"
         "single_clan_bound,ks_gamma\n";
  for (int n : config.n_grid) {
    const auto result = gwpi::run_finite_n(params, run_options(config, n));
    const auto& fin = result.target("finite_ratio").estimate;
    const auto& tot = result.target("total_finite").estimate;
    csv << n << ',' << nlohmann::json(fin.value).dump() << ',' << nlohmann::json(fin.std_error).dump()
        << ',' << nlohmann::json(tot.value).dump() << ',' << nlohmann::json(tot.std_error).dump()
        << ',' << nlohmann::json(result.single_clan_bound).dump() << ','
        << nlohmann::json(result.ks_gamma).dump() << '\n';
    auto report = gwpi::report_json(config, params, result);
    rows.push_back({{"n", n},
                    {"targets", report["targets"]},
                    {"references", report["references"]},
                    {"verdicts", report["verdicts"]}});
  }
  const std::filesystem::path dir = config.output_dir;
  write_file(dir / "sweep.json", dump({{"version", gwpi::kReportVersion},
                                       {"seed", config.seed},
                                       {"config", config.to_json()},
                                       {"params", gwpi::params_json(params)},
                                       {"rows", rows}}));
  write_file(dir / "sweep.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coalescence statistics for critical Galton-Watson processes with immigration"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* simulate = app.add_subcommand("simulate", "finite-n Monte Carlo report");
  add_common(simulate, flags);
  simulate->add_option("--baseline-replicates", flags.baseline_replicates,
                       "also run the single-ancestor baseline with this many replicates");

  std::uint64_t draws = 0;
  auto* limit = app.add_subcommand("limit", "Monte Carlo table of the limit laws");
  add_common(limit, flags);
  limit->add_option("--draws", draws, "Monte Carlo draws per limit value");

  auto* exact = app.add_subcommand("exact", "exhaustive enumeration golden values");
  add_common(exact, flags);
  exact->add_option("--survival-n", flags.survival_n, "length of the survival table");

  std::string report_path;
  std::string limits_path;
  auto* compare = app.add_subcommand("compare", "join a report with a limit table");
  add_common(compare, flags);
  compare->add_option("--report", report_path, "report.json from simulate")->required();
  compare->add_option("--limits", limits_path, "limits.json from limit")->required();

  auto* sweep = app.add_subcommand("sweep", "n-grid scaling study");
  add_common(sweep, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(simulate, flags);
    if (*limit) return cmd_limit(limit, flags, draws);
    if (*exact) return cmd_exact(exact, flags);
    if (*compare) return cmd_compare(compare, flags, report_path, limits_path);
    if (*sweep) return cmd_sweep(sweep, flags);
  } catch (const gwpi::ResourceLimit& e) {
    std::cerr << "resource error (cap " << e.cap() << "): " << e.what() << '\n';
    return kExitResource;
  } catch (const gwpi::ExplosionError& e) {
    std::cerr << "resource error (history cap " << e.cap() << "): " << e.what() << '\n';
    return kExitResource;
  } catch (const gwpi::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gwpi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gwpi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

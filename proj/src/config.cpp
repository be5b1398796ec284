#include "gwpi/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "gwpi/errors.hpp"

namespace gwpi {

namespace {

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

template <typename T>
void read_field(const nlohmann::json& doc, const char* field, T& out) {
  if (!doc.contains(field)) return;
  try {
    out = doc.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + field + "': " + e.what());
  }
}

const std::set<std::string> kKnownFields = {
    "offspring", "immigration", "n",           "replicates",  "u_grid",  "n_grid",
    "seed",      "epsilon",     "slack",       "mc_draws",    "threads", "output_dir",
    "particle_cap", "history_cap"};

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  return {{"offspring", offspring},       {"immigration", immigration},
          {"n", n},                       {"replicates", replicates},
          {"u_grid", u_grid},             {"n_grid", n_grid},
          {"seed", seed},                 {"epsilon", epsilon},
          {"slack", slack},               {"mc_draws", mc_draws},
          {"particle_cap", particle_cap}, {"history_cap", history_cap}};
}

ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON at " + line_column(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownFields.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ExperimentConfig c;
  read_field(doc, "offspring", c.offspring);
  read_field(doc, "immigration", c.immigration);
  read_field(doc, "n", c.n);
  read_field(doc, "replicates", c.replicates);
  read_field(doc, "u_grid", c.u_grid);
  read_field(doc, "n_grid", c.n_grid);
  read_field(doc, "seed", c.seed);
  read_field(doc, "epsilon", c.epsilon);
  read_field(doc, "slack", c.slack);
  read_field(doc, "mc_draws", c.mc_draws);
  read_field(doc, "threads", c.threads);
  read_field(doc, "output_dir", c.output_dir);
  read_field(doc, "particle_cap", c.particle_cap);
  read_field(doc, "history_cap", c.history_cap);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

ExperimentConfig finalize_config(ExperimentConfig c, const ConfigOverrides& o, bool seed_in_file) {
  if (o.seed) {
    c.seed = *o.seed;
  } else if (!seed_in_file) {
    if (const char* env = std::getenv(kSeedEnvironmentVariable); env != nullptr && *env != '\0') {
      try {
        c.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string(kSeedEnvironmentVariable) + " is not an unsigned integer");
      }
    }
  }
  if (o.n) c.n = *o.n;
  if (o.replicates) c.replicates = *o.replicates;
  if (o.u_grid) c.u_grid = *o.u_grid;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.slack) c.slack = *o.slack;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.threads) c.threads = *o.threads;

  if (c.n < 1) throw ConfigError("field 'n': must be >= 1");
  if (c.replicates < 100) throw ConfigError("field 'replicates': must be >= 100");
  if (c.u_grid.empty()) throw ConfigError("field 'u_grid': must not be empty");
  for (double u : c.u_grid) {
    if (!(u > 0.0 && u < 1.0)) throw ConfigError("field 'u_grid': values must lie in (0,1)");
  }
  for (int n : c.n_grid) {
    if (n < 1) throw ConfigError("field 'n_grid': values must be >= 1");
  }
  if (!(c.epsilon > 0.0)) throw ConfigError("field 'epsilon': must be > 0");
  if (!(c.slack >= 0.0)) throw ConfigError("field 'slack': must be >= 0");
  if (c.mc_draws < 1) throw ConfigError("field 'mc_draws': must be >= 1");
  if (c.threads < 1) throw ConfigError("field 'threads': must be >= 1");
  return c;
}

}  // namespace gwpi

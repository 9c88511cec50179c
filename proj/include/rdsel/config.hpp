#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/trainer.hpp"

namespace rdsel {

// Experiment configuration as a flat `key = value` text file. `#` starts
// a comment, blank lines and cosmetic `[section]` headers are allowed,
// unknown keys are rejected with their line number. Keys not present
// fall back to defaults and are reported in `defaulted`.

struct ParsedConfig {
  ExperimentConfig config;
  std::vector<std::string> defaulted;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double_or_throw(const std::string& key, const std::string& value,
                                    std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ParseError("config line " + std::to_string(line) + ": " + key +
                     " expects a number, got '" + value + "'");
  return v;
}

inline std::uint64_t parse_u64_or_throw(const std::string& key, const std::string& value,
                                        std::size_t line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ParseError("config line " + std::to_string(line) + ": " + key +
                     " expects a nonnegative integer, got '" + value + "'");
  return v;
}

inline bool parse_bool_or_throw(const std::string& key, const std::string& value,
                                std::size_t line) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("config line " + std::to_string(line) + ": " + key +
                   " expects true|false, got '" + value + "'");
}

}  // namespace detail

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "dataset",        "csv_path",       "angles",         "n_per_domain",
      "noise_sd",       "f_hidden",       "f_out",          "i_hidden",
      "di_dim",         "s_hidden",       "ds_dim",         "t_hidden",
      "p_hidden",       "feature_rate",   "mine_rate",      "policy_rate",
      "gamma",          "penalty",        "batch_size",     "reward_batch",
      "epochs",         "rollouts_per_epoch", "distance",   "n_projections",
      "distance_on",    "mode",           "train_selected_only", "mean_baseline",
      "seed"};
  return keys;
}

inline ParsedConfig parse_config_stream(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // cosmetic section header
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + " line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!config_keys().count(key))
      throw ParseError(origin + " line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ParseError(origin + " line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    auto num = [&] { return detail::parse_double_or_throw(key, value, lineno); };
    auto u64 = [&] { return detail::parse_u64_or_throw(key, value, lineno); };
    auto boolean = [&] { return detail::parse_bool_or_throw(key, value, lineno); };
    auto constraint = [&](const std::string& what) -> ParseError {
      return ParseError(origin + " line " + std::to_string(lineno) + ": " + key + " " + what +
                        " (got '" + value + "')");
    };

    if (key == "dataset") {
      if (value == "gaussians")
        cfg.dataset = DatasetKind::gaussians;
      else if (value == "moons")
        cfg.dataset = DatasetKind::moons;
      else if (value == "csv")
        cfg.dataset = DatasetKind::csv;
      else
        throw constraint("must be gaussians|moons|csv");
    } else if (key == "csv_path") {
      cfg.csv_path = value;
    } else if (key == "angles") {
      cfg.angles.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) throw constraint("has an empty list entry");
        cfg.angles.push_back(detail::parse_double_or_throw(key, item, lineno));
      }
      if (cfg.angles.size() < 3) throw constraint("must list at least 3 comma-separated angles");
    } else if (key == "n_per_domain") {
      cfg.n_per_domain = static_cast<std::size_t>(u64());
    } else if (key == "noise_sd") {
      cfg.noise_sd = num();
      if (cfg.noise_sd <= 0.0) throw constraint("must be > 0");
    } else if (key == "f_hidden") {
      cfg.dims.f_hidden = static_cast<std::size_t>(u64());
    } else if (key == "f_out") {
      cfg.dims.f_out = static_cast<std::size_t>(u64());
    } else if (key == "i_hidden") {
      cfg.dims.i_hidden = static_cast<std::size_t>(u64());
    } else if (key == "di_dim") {
      cfg.dims.di_dim = static_cast<std::size_t>(u64());
    } else if (key == "s_hidden") {
      cfg.dims.s_hidden = static_cast<std::size_t>(u64());
    } else if (key == "ds_dim") {
      cfg.dims.ds_dim = static_cast<std::size_t>(u64());
    } else if (key == "t_hidden") {
      cfg.dims.t_hidden = static_cast<std::size_t>(u64());
    } else if (key == "p_hidden") {
      cfg.p_hidden = static_cast<std::size_t>(u64());
    } else if (key == "feature_rate") {
      cfg.feature_rate = num();
      if (cfg.feature_rate <= 0.0) throw constraint("must be > 0");
    } else if (key == "mine_rate") {
      cfg.mine_rate = num();
      if (cfg.mine_rate <= 0.0) throw constraint("must be > 0");
    } else if (key == "policy_rate") {
      cfg.policy_rate = num();
      if (cfg.policy_rate <= 0.0) throw constraint("must be > 0");
    } else if (key == "gamma") {
      cfg.gamma = num();
      if (cfg.gamma < 0.0 || cfg.gamma >= 1.0) throw constraint("must lie in [0, 1)");
    } else if (key == "penalty") {
      cfg.penalty = num();
      if (cfg.penalty >= 0.0) throw constraint("must be negative");
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<std::size_t>(u64());
      if (cfg.batch_size < 2) throw constraint("must be >= 2");
    } else if (key == "reward_batch") {
      cfg.reward_batch = static_cast<std::size_t>(u64());
      if (cfg.reward_batch < 2) throw constraint("must be >= 2");
    } else if (key == "epochs") {
      cfg.epochs = static_cast<std::size_t>(u64());
      if (cfg.epochs < 1) throw constraint("must be >= 1");
    } else if (key == "rollouts_per_epoch") {
      cfg.rollouts_per_epoch = static_cast<std::size_t>(u64());
    } else if (key == "distance") {
      if (value == "sliced")
        cfg.distance = DistanceMethod::sliced;
      else if (value == "exact")
        cfg.distance = DistanceMethod::exact;
      else
        throw constraint("must be sliced|exact");
    } else if (key == "n_projections") {
      cfg.n_projections = static_cast<std::size_t>(u64());
      if (cfg.n_projections < 1) throw constraint("must be >= 1");
    } else if (key == "distance_on") {
      if (value == "cloud")
        cfg.distance_on_pooled = false;
      else if (value == "pooled")
        cfg.distance_on_pooled = true;
      else
        throw constraint("must be cloud|pooled");
    } else if (key == "mode") {
      if (value == "full")
        cfg.mode = AblationMode::full;
      else if (value == "classifier_only")
        cfg.mode = AblationMode::classifier_only;
      else if (value == "disentangle_only")
        cfg.mode = AblationMode::disentangle_only;
      else
        throw constraint("must be full|classifier_only|disentangle_only");
    } else if (key == "train_selected_only") {
      cfg.train_selected_only = boolean();
    } else if (key == "mean_baseline") {
      cfg.mean_baseline = boolean();
    } else if (key == "seed") {
      cfg.seed = u64();
    }
  }
  cfg.validate();
  ParsedConfig result;
  result.config = cfg;
  for (const std::string& key : config_keys())
    if (!seen.count(key)) result.defaulted.push_back(key);
  return result;
}

inline ParsedConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("parse_config: cannot open " + path);
  return parse_config_stream(in, path);
}

// Canonical echo of the effective configuration; parseable back into an
// identical config.
inline std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "dataset = " << to_string(cfg.dataset) << "\n";
  if (!cfg.csv_path.empty()) out << "csv_path = " << cfg.csv_path << "\n";
  out << "angles = ";
  for (std::size_t i = 0; i < cfg.angles.size(); ++i)
    out << (i ? "," : "") << num(cfg.angles[i]);
  out << "\n";
  out << "n_per_domain = " << cfg.n_per_domain << "\n";
  out << "noise_sd = " << num(cfg.noise_sd) << "\n";
  out << "f_hidden = " << cfg.dims.f_hidden << "\n";
  out << "f_out = " << cfg.dims.f_out << "\n";
  out << "i_hidden = " << cfg.dims.i_hidden << "\n";
  out << "di_dim = " << cfg.dims.di_dim << "\n";
  out << "s_hidden = " << cfg.dims.s_hidden << "\n";
  out << "ds_dim = " << cfg.dims.ds_dim << "\n";
  out << "t_hidden = " << cfg.dims.t_hidden << "\n";
  out << "p_hidden = " << cfg.p_hidden << "\n";
  out << "feature_rate = " << num(cfg.feature_rate) << "\n";
  out << "mine_rate = " << num(cfg.mine_rate) << "\n";
  out << "policy_rate = " << num(cfg.policy_rate) << "\n";
  out << "gamma = " << num(cfg.gamma) << "\n";
  out << "penalty = " << num(cfg.penalty) << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "reward_batch = " << cfg.reward_batch << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "rollouts_per_epoch = " << cfg.rollouts_per_epoch << "\n";
  out << "distance = " << to_string(cfg.distance) << "\n";
  out << "n_projections = " << cfg.n_projections << "\n";
  out << "distance_on = " << (cfg.distance_on_pooled ? "pooled" : "cloud") << "\n";
  out << "mode = " << to_string(cfg.mode) << "\n";
  out << "train_selected_only = " << (cfg.train_selected_only ? "true" : "false") << "\n";
  out << "mean_baseline = " << (cfg.mean_baseline ? "true" : "false") << "\n";
  out << "seed = " << cfg.seed << "\n";
  return out.str();
}

}  // namespace rdsel

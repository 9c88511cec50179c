// Command-line driver: dataset generation, joint training, evaluation,
// path extraction and SVG diagnostics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rdsel/rdsel.hpp"

namespace {

using namespace rdsel;

std::string format_meta(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

ExperimentConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed,
                             bool echo) {
  ParsedConfig parsed;
  if (config_path.empty()) {
    parsed.config = ExperimentConfig{};
    for (const std::string& key : config_keys()) parsed.defaulted.push_back(key);
  } else {
    parsed = parse_config(config_path);
  }
  if (seed) parsed.config.seed = *seed;
  if (echo) {
    if (!parsed.defaulted.empty()) {
      std::cout << "# defaulted keys:";
      for (const std::string& key : parsed.defaulted) std::cout << " " << key;
      std::cout << "\n";
    }
    std::cout << render_config(parsed.config);
  }
  return parsed.config;
}

std::filesystem::path prepare_out(const std::string& out_dir) {
  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// meta values when every intermediate carries one, ids otherwise
std::string render_path(const TransferPath& path, const std::vector<DomainDataset>& domains) {
  std::string out;
  for (std::size_t i = 0; i < path.ids.size(); ++i) {
    if (i) out += ",";
    const DomainDataset* match = nullptr;
    for (const DomainDataset& d : domains)
      if (d.domain_id == path.ids[i]) match = &d;
    if (match && match->meta)
      out += format_meta(*match->meta);
    else
      out += std::to_string(path.ids[i]);
  }
  return out;
}

std::vector<DomainDataset> resolve_domains(const std::string& data_csv,
                                           const ExperimentConfig& cfg) {
  if (!data_csv.empty()) return load_domains_csv(data_csv, /*allow_eval_labels=*/true);
  return make_datasets(cfg);
}

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config_path, seed, true);
  if (cfg.dataset == DatasetKind::csv)
    throw ConfigError("generate: config already points at a csv dataset");
  const auto domains = make_datasets(cfg);
  const auto out = prepare_out(out_dir) / "domains.csv";
  save_domains_csv(out.string(), domains);
  std::cout << "wrote " << out.string() << " (" << domains.size() << " domains)\n";
  return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config_path, seed, true);
  const auto domains = make_datasets(cfg);
  const TrainResult result = train_joint(cfg, domains);

  const auto dir = prepare_out(out_dir);
  const auto history_path = dir / "history.jsonl";
  const auto ckpt_path = dir / "checkpoint.txt";
  save_history_jsonl(history_path.string(), result.history);
  save_checkpoint(ckpt_path.string(), result.trained);

  if (!result.history.epochs.empty() && result.history.epochs.back().target_accuracy)
    std::cout << "target_accuracy = " << *result.history.epochs.back().target_accuracy << "\n";
  else
    std::cout << "target_accuracy = n/a\n";
  std::cout << "path = " << render_path(result.trained.path, domains) << "\n";
  std::cout << "wrote " << history_path.string() << " " << ckpt_path.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::string& checkpoint_path, const std::string& data_csv) {
  const ExperimentConfig cfg = load_config(config_path, seed, false);
  const TrainedModel trained = load_checkpoint(checkpoint_path);
  const auto domains = resolve_domains(data_csv, cfg);
  const DomainSplit split = split_domains(domains);
  if (split.target->eval_labels.empty())
    throw DataError("eval: target domain carries no held-out labels");
  const double acc = evaluate_accuracy(predict_target(trained, split.target->features),
                                       split.target->eval_labels);
  std::cout << "target_accuracy = " << acc << "\n";
  return 0;
}

int cmd_path(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::string& checkpoint_path, const std::string& data_csv) {
  const ExperimentConfig cfg = load_config(config_path, seed, false);
  const TrainedModel trained = load_checkpoint(checkpoint_path);
  const auto domains = resolve_domains(data_csv, cfg);
  const TransferPath path = extract_path(trained, domains);
  std::cout << render_path(path, domains) << "\n";
  return 0;
}

int cmd_plot_selection(const std::string& history_path, const std::string& out_dir) {
  const TrainingHistory history = load_history_jsonl(history_path);
  const auto out = prepare_out(out_dir) / "selection.svg";
  emit_selection_heatmap(history, out.string());
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_plot_reward(const std::vector<std::string>& history_paths, const std::string& out_dir) {
  std::vector<TrainingHistory> histories;
  for (const std::string& p : history_paths) histories.push_back(load_history_jsonl(p));
  const auto out = prepare_out(out_dir) / "reward.svg";
  emit_reward_curve(histories, out.string());
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_ablation(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config_path, seed, true);
  const auto rows = run_ablation_suite(cfg);
  const auto domains = make_datasets(cfg);
  std::cout << "mode accuracy path\n";
  for (const AblationRow& row : rows) {
    std::cout << to_string(row.mode) << " " << row.accuracy << " ";
    const std::string p = render_path(row.path, domains);
    std::cout << (p.empty() ? "-" : p) << "\n";
  }
  (void)out_dir;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reinforced intermediate-domain selection for continuous domain adaptation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", checkpoint_path, data_csv;
  std::vector<std::string> history_paths;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* cmd, bool with_config = true) {
    if (with_config) cmd->add_option("--config", config_path, "experiment config file");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* generate = app.add_subcommand("generate", "write synthetic domains as CSV");
  add_common(generate);
  CLI::App* train = app.add_subcommand("train", "run joint training, write history + checkpoint");
  add_common(train);
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on the target domain");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--data", data_csv, "domains CSV (defaults to the config dataset)");
  CLI::App* path_cmd = app.add_subcommand("path", "print the extracted transfer path");
  add_common(path_cmd);
  path_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  path_cmd->add_option("--data", data_csv, "domains CSV (defaults to the config dataset)");
  CLI::App* plot_sel = app.add_subcommand("plot-selection", "selection-order heatmap SVG");
  plot_sel->add_option("--history", history_paths, "history JSONL")->required();
  plot_sel->add_option("--out", out_dir, "output directory");
  CLI::App* plot_reward = app.add_subcommand("plot-reward", "reward-curve SVG (overlays)");
  plot_reward->add_option("--history", history_paths, "history JSONL, repeatable")->required();
  plot_reward->add_option("--out", out_dir, "output directory");
  CLI::App* ablation = app.add_subcommand("ablation", "run the three-mode ablation table");
  add_common(ablation);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(config_path, seed, out_dir);
    if (train->parsed()) return cmd_train(config_path, seed, out_dir);
    if (eval->parsed()) return cmd_eval(config_path, seed, checkpoint_path, data_csv);
    if (path_cmd->parsed()) return cmd_path(config_path, seed, checkpoint_path, data_csv);
    if (plot_sel->parsed()) return cmd_plot_selection(history_paths.front(), out_dir);
    if (plot_reward->parsed()) return cmd_plot_reward(history_paths, out_dir);
    if (ablation->parsed()) return cmd_ablation(config_path, seed, out_dir);
  } catch (const rdsel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "rdsel/errors.hpp"
#include "rdsel/trainer.hpp"

namespace rdsel {

// History serialization: one epoch per JSON line with a fixed key order,
// so identical runs produce byte-identical files.

inline nlohmann::ordered_json epoch_to_json(const TrainingHistory& history,
                                            const EpochRecord& rec) {
  nlohmann::ordered_json j;
  j["epoch"] = rec.epoch;
  j["l_mi"] = rec.l_mi;
  j["l_ms"] = rec.l_ms;
  j["l_ce"] = rec.l_ce;
  j["mean_cumulative_reward"] = rec.mean_cumulative_reward;
  if (rec.target_accuracy)
    j["target_accuracy"] = *rec.target_accuracy;
  else
    j["target_accuracy"] = nullptr;
  j["intermediates"] = history.intermediate_ids;
  j["intermediate_meta"] = history.intermediate_meta;
  j["selection"] = rec.selection;
  j["path"] = rec.path;
  nlohmann::ordered_json rollouts = nlohmann::ordered_json::array();
  for (const RolloutRecord& r : rec.rollouts) {
    nlohmann::ordered_json jr;
    jr["order"] = r.order;
    jr["actions"] = r.actions;
    jr["probs"] = r.probs;
    jr["rewards"] = r.rewards;
    jr["returns"] = r.returns;
    rollouts.push_back(std::move(jr));
  }
  j["rollouts"] = std::move(rollouts);
  return j;
}

inline void save_history_jsonl(const std::string& path, const TrainingHistory& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_history_jsonl: cannot open " + path);
  for (const EpochRecord& rec : history.epochs) out << epoch_to_json(history, rec).dump() << "\n";
  if (!out) throw IoError("save_history_jsonl: write failure on " + path);
}

inline TrainingHistory load_history_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_history_jsonl: cannot open " + path);
  TrainingHistory history;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    EpochRecord rec;
    try {
      rec.epoch = j.at("epoch").get<std::size_t>();
      rec.l_mi = j.at("l_mi").get<double>();
      rec.l_ms = j.at("l_ms").get<double>();
      rec.l_ce = j.at("l_ce").get<double>();
      rec.mean_cumulative_reward = j.at("mean_cumulative_reward").get<double>();
      if (!j.at("target_accuracy").is_null())
        rec.target_accuracy = j.at("target_accuracy").get<double>();
      if (history.epochs.empty()) {
        history.intermediate_ids = j.at("intermediates").get<std::vector<int>>();
        history.intermediate_meta = j.at("intermediate_meta").get<std::vector<double>>();
      }
      rec.selection = j.at("selection").get<std::vector<int>>();
      rec.path = j.at("path").get<std::vector<int>>();
      for (const auto& jr : j.at("rollouts")) {
        RolloutRecord r;
        r.order = jr.at("order").get<std::vector<int>>();
        r.actions = jr.at("actions").get<std::vector<int>>();
        r.probs = jr.at("probs").get<std::vector<double>>();
        r.rewards = jr.at("rewards").get<std::vector<double>>();
        r.returns = jr.at("returns").get<std::vector<double>>();
        rec.rollouts.push_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    history.epochs.push_back(std::move(rec));
  }
  if (history.epochs.empty()) throw ParseError(path + ": no epoch records");
  return history;
}

}  // namespace rdsel

#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace pqadv {

std::string fnv1a_hex(const std::string& text);

/// Wall-clock phase timings for a report.
class PhaseTimer {
public:
  void start(const std::string& phase) {
    phase_ = phase;
    t0_ = std::chrono::steady_clock::now();
  }
  void stop() {
    if (phase_.empty()) return;
    const auto dt = std::chrono::steady_clock::now() - t0_;
    secs_[phase_] += std::chrono::duration<double>(dt).count();
    phase_.clear();
  }
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : secs_) j[k] = v;
    return j;
  }

private:
  std::map<std::string, double> secs_;
  std::string phase_;
  std::chrono::steady_clock::time_point t0_;
};

struct ExperimentReport {
  std::string scenario;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
};

void write_report(const std::string& path, const ExperimentReport& rep);

/// Rebuild one of the paper-style summary tables from a set of report JSONs.
/// Known ids: comparison, saa_sweep, blackbox_acc, blackbox_ssa, blackbox_saa,
/// advtrain, degrees, entropy. Throws MissingCell when a required report is
/// absent and ConfigInvalid for an unknown id.
std::string emit_table(const std::vector<nlohmann::json>& reports, const std::string& table_id);

/// Built-in experiment scales. `desk` is the calibrated single-machine
/// configuration; `smoke` is a seconds-long pipeline exerciser; `paper` mirrors
/// the full-size experiment (provided, but expect a long run).
struct ScaleSpec {
  std::string name;
  int per_class = 500;
  int train_epochs = 15;
  int attack_count = 1000;   // test signals attacked by fgsm/ssa
  int saa_subset = 1700;     // training signals behind the universal perturbation
  int saa_max_epochs = 10;
  int advtrain_epochs = 10;
  int rho_eval_count = 256;
  int project_n = 1000;
  double perplexity = 30.0;
};
ScaleSpec scale_by_name(const std::string& name);  // desk | smoke | paper

}  // namespace pqadv

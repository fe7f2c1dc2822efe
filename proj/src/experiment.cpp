#include "pqadv/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "pqadv/dataset_io.hpp"
#include "pqadv/error.hpp"
#include "pqadv/rng.hpp"
#include "pqadv/signal.hpp"

namespace pqadv {

using nlohmann::json;

std::string fnv1a_hex(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Rng::fnv1a(text)));
  return std::string(buf);
}

json ExperimentReport::to_json() const {
  json j;
  j["scenario"] = scenario;
  j["config"] = config;
  j["metrics"] = metrics;
  j["timings"] = timings;
  j["provenance"] = provenance;
  return j;
}

void write_report(const std::string& path, const ExperimentReport& rep) {
  write_json_file(path, rep.to_json());
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

const json* find_report(const std::vector<json>& reports, const std::string& scenario,
                        const std::string& attack) {
  for (const json& r : reports) {
    if (r.value("scenario", "") != scenario) continue;
    if (!attack.empty() && r.at("metrics").value("attack_kind", "") != attack) continue;
    return &r;
  }
  return nullptr;
}

std::string table_comparison(const std::vector<json>& reports) {
  std::string csv = "attack,rho_adv,misclassification_rate,avg_time_sec\n";
  for (const std::string kind : {"fgsm", "ssa", "saa"}) {
    const json* r = nullptr;
    for (const json& c : reports)
      if (c.at("metrics").value("attack_kind", "") == kind &&
          c.at("metrics").contains("rho_adv")) {
        r = &c;
        break;
      }
    require(r != nullptr, Errc::MissingCell, "no report with rho_adv for attack " + kind);
    const json& m = r->at("metrics");
    csv += kind + "," + fmt(m.at("rho_adv").get<double>()) + "," +
           fmt(m.at("misclassification_rate").get<double>()) + "," +
           fmt(m.value("avg_time_sec", 0.0)) + "\n";
  }
  return csv;
}

std::string table_saa_sweep(const std::vector<json>& reports) {
  std::vector<std::pair<int, double>> cells;
  for (const json& r : reports) {
    if (r.value("scenario", "") != "universal") continue;
    const json& m = r.at("metrics");
    if (m.contains("subset_size") && m.contains("test_misclassification_rate"))
      cells.emplace_back(m.at("subset_size").get<int>(),
                         m.at("test_misclassification_rate").get<double>());
  }
  require(!cells.empty(), Errc::MissingCell, "no universal reports with a subset sweep");
  std::sort(cells.begin(), cells.end());
  std::string head = "subset_size", row = "test_misclassification_rate";
  for (const auto& [n, v] : cells) {
    head += "," + std::to_string(n);
    row += "," + fmt(v);
  }
  return head + "\n" + row + "\n";
}

std::string table_blackbox(const std::vector<json>& reports, const std::string& field,
                           const std::string& attack) {
  // cell = (box_type, data_ratio) averaged over repetitions
  std::map<std::pair<int, double>, std::pair<double, int>> cells;
  std::set<double> ratios;
  for (const json& r : reports) {
    if (r.value("scenario", "") != "transfer") continue;
    const json& m = r.at("metrics");
    if (!attack.empty() && m.value("attack_kind", "") != attack) continue;
    if (!m.contains(field)) continue;
    const int type = m.at("box_type").get<int>();
    const double ratio = m.at("data_ratio").get<double>();
    auto& cell = cells[{type, ratio}];
    cell.first += m.at(field).get<double>();
    cell.second += 1;
    ratios.insert(ratio);
  }
  require(!cells.empty(), Errc::MissingCell,
          "no transfer reports carrying " + field +
              (attack.empty() ? "" : " for attack " + attack));
  std::string csv = "box_type";
  for (double r : ratios) csv += ",ratio_" + fmt(r);
  csv += "\n";
  for (int type : {1, 2}) {
    csv += "Type" + std::string(type == 1 ? "I" : "II");
    for (double r : ratios) {
      auto it = cells.find({type, r});
      require(it != cells.end(), Errc::MissingCell,
              "missing transfer cell Type" + std::to_string(type) + " ratio " + fmt(r));
      csv += "," + fmt(it->second.first / it->second.second);
    }
    csv += "\n";
  }
  return csv;
}

std::string table_advtrain(const std::vector<json>& reports) {
  const json* r = find_report(reports, "advtrain", "");
  require(r != nullptr, Errc::MissingCell, "no advtrain report");
  const json& trace = r->at("metrics").at("trace");
  std::string csv =
      "adv_epochs,clean_train_acc,clean_test_acc,adv_train_acc,adv_test_acc,rho_adv\n";
  for (const json& row : trace) {
    csv += std::to_string(row.at("epoch").get<int>());
    for (const char* f :
         {"clean_train_acc", "clean_test_acc", "adv_train_acc", "adv_test_acc", "rho_adv"})
      csv += "," + fmt(row.at(f).get<double>());
    csv += "\n";
  }
  return csv;
}

const json* eval_with_degrees(const std::vector<json>& reports, const std::string& kind) {
  for (const json& r : reports) {
    const json& m = r.at("metrics");
    if (m.value("attack_kind", "") == kind && m.contains("in_degree")) return &r;
  }
  return nullptr;
}

std::string table_degrees(const std::vector<json>& reports) {
  std::string csv = "graph,degree";
  for (int c = 1; c <= kNumClasses; ++c) csv += std::string(",") + class_symbol(c);
  csv += "\n";
  for (const std::string kind : {"fgsm", "ssa", "saa"}) {
    const json* r = eval_with_degrees(reports, kind);
    require(r != nullptr, Errc::MissingCell, "no confusion-graph report for " + kind);
    for (const char* dir : {"in_degree", "out_degree"}) {
      csv += kind + "," + dir;
      for (const json& d : r->at("metrics").at(dir)) csv += "," + std::to_string(d.get<int>());
      csv += "\n";
    }
  }
  return csv;
}

std::string table_entropy(const std::vector<json>& reports) {
  std::string csv = "entropy,fgsm_out,ssa_out,saa_out,fgsm_in,ssa_in,saa_in\n";
  for (const std::string weighted : {"weighted", "unweighted"}) {
    csv += weighted == "weighted" ? "H_w(G)" : "H(G)";
    for (const char* dir : {"out", "in"})
      for (const std::string kind : {"fgsm", "ssa", "saa"}) {
        const json* r = eval_with_degrees(reports, kind);
        require(r != nullptr, Errc::MissingCell, "no confusion-graph report for " + kind);
        csv += "," + fmt(r->at("metrics")
                             .at("graph_entropy_" + weighted + "_" + dir)
                             .get<double>());
      }
    csv += "\n";
  }
  return csv;
}

}  // namespace

std::string emit_table(const std::vector<json>& reports, const std::string& table_id) {
  if (table_id == "comparison") return table_comparison(reports);
  if (table_id == "saa_sweep") return table_saa_sweep(reports);
  if (table_id == "blackbox_acc") return table_blackbox(reports, "substitute_test_acc", "");
  if (table_id == "blackbox_ssa") return table_blackbox(reports, "transfer_rate", "ssa");
  if (table_id == "blackbox_saa") return table_blackbox(reports, "transfer_rate", "saa");
  if (table_id == "advtrain") return table_advtrain(reports);
  if (table_id == "degrees") return table_degrees(reports);
  if (table_id == "entropy") return table_entropy(reports);
  fail(Errc::ConfigInvalid, "unknown table id '" + table_id + "'");
}

ScaleSpec scale_by_name(const std::string& name) {
  if (name == "desk") return ScaleSpec{"desk", 500, 15, 1000, 1700, 10, 10, 256, 1000, 30.0};
  if (name == "smoke") return ScaleSpec{"smoke", 8, 2, 20, 30, 2, 1, 16, 34, 8.0};
  if (name == "paper")
    return ScaleSpec{"paper", 15000, 15, 63750, 15000, 10, 10, 1024, 1000, 30.0};
  fail(Errc::ConfigInvalid, "unknown scale '" + name + "' (desk|smoke|paper)");
}

}  // namespace pqadv

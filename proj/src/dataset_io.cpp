#include "pqadv/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pqadv/error.hpp"

namespace pqadv {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void append_double(std::string& buf, double x) {
  char tmp[40];
  std::snprintf(tmp, sizeof(tmp), "%.9g", x);
  buf += tmp;
}

void write_signal_csv(const std::string& path, const std::vector<SignalVector>& signals,
                      int dim) {
  std::ofstream out(path);
  require(out.good(), Errc::IoFailure, "cannot open " + path + " for writing");
  std::string header = "label";
  for (int i = 0; i < dim; ++i) header += ",s" + std::to_string(i);
  out << header << "\n";
  std::string line;
  for (const SignalVector& s : signals) {
    require(static_cast<int>(s.values.size()) == dim, Errc::ShapeMismatch,
            "signal length != " + std::to_string(dim));
    line.clear();
    line += std::to_string(s.label);
    for (double v : s.values) {
      line += ',';
      append_double(line, v);
    }
    line += '\n';
    out << line;
  }
  require(out.good(), Errc::IoFailure, "write failed: " + path);
}

std::vector<SignalVector> read_signal_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  require(in.good(), Errc::IoFailure, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::IoFailure, "empty file: " + path);

  std::vector<SignalVector> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SignalVector s;
    s.values.reserve(dim);
    const char* p = line.c_str();
    char* end = nullptr;
    s.label = static_cast<int>(std::strtol(p, &end, 10));
    p = end;
    while (*p == ',') {
      ++p;
      s.values.push_back(std::strtod(p, &end));
      p = end;
    }
    require(static_cast<int>(s.values.size()) == dim, Errc::IoFailure,
            "bad column count in " + path);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds, const DatasetManifest& info) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  write_signal_csv(dir + "/train.csv", ds.train, info.grid.n_samples);
  write_signal_csv(dir + "/test.csv", ds.test, info.grid.n_samples);

  json j;
  j["seed"] = info.seed;
  j["per_class"] = info.per_class;
  if (std::isinf(info.snr_db))
    j["snr_db"] = nullptr;
  else
    j["snr_db"] = info.snr_db;
  j["sampling_rate"] = info.grid.sampling_rate;
  j["fundamental"] = info.grid.fundamental;
  j["cycles"] = info.grid.cycles;
  write_json_file(dir + "/manifest.json", j);
}

Dataset load_dataset(const std::string& dir, DatasetManifest* info_out) {
  DatasetManifest info;
  const json j = read_json_file(dir + "/manifest.json");
  info.seed = j.value("seed", uint64_t{0});
  info.per_class = j.value("per_class", 0);
  if (j.contains("snr_db") && !j["snr_db"].is_null())
    info.snr_db = j["snr_db"].get<double>();
  else
    info.snr_db = std::numeric_limits<double>::infinity();
  info.grid.sampling_rate = j.value("sampling_rate", 3200.0);
  info.grid.fundamental = j.value("fundamental", 50.0);
  info.grid.cycles = j.value("cycles", 10);
  info.grid.n_samples =
      static_cast<int>(info.grid.sampling_rate * info.grid.cycles / info.grid.fundamental);
  if (info_out) *info_out = info;

  Dataset ds;
  ds.seed = info.seed;
  ds.train = read_signal_csv(dir + "/train.csv", info.grid.n_samples);
  ds.test = read_signal_csv(dir + "/test.csv", info.grid.n_samples);
  for (const auto& s : ds.train) ds.class_counts[s.label]++;
  for (const auto& s : ds.test) ds.class_counts[s.label]++;
  return ds;
}

void save_adversarial_csv(const std::string& path, const std::vector<AdversarialRow>& rows) {
  std::ofstream out(path);
  require(out.good(), Errc::IoFailure, "cannot open " + path + " for writing");
  require(!rows.empty(), Errc::EmptySet, "no adversarial rows to write");
  const int dim = static_cast<int>(rows[0].values.size());
  std::string header = "label";
  for (int i = 0; i < dim; ++i) header += ",s" + std::to_string(i);
  header += ",orig_label,pred_before,pred_after,l2_r,iters";
  out << header << "\n";
  std::string line;
  for (const AdversarialRow& r : rows) {
    line.clear();
    line += std::to_string(r.label);
    for (double v : r.values) {
      line += ',';
      append_double(line, v);
    }
    line += ',' + std::to_string(r.orig_label);
    line += ',' + std::to_string(r.pred_before);
    line += ',' + std::to_string(r.pred_after);
    line += ',';
    append_double(line, r.l2_r);
    line += ',' + std::to_string(r.iters);
    line += '\n';
    out << line;
  }
  require(out.good(), Errc::IoFailure, "write failed: " + path);
}

std::vector<AdversarialRow> load_adversarial_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::IoFailure, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::IoFailure, "empty file: " + path);
  // count signal columns from the header
  int dim = 0;
  for (size_t pos = 0; (pos = line.find(",s", pos)) != std::string::npos; ++pos) {
    const char c = pos + 2 < line.size() ? line[pos + 2] : 'x';
    if (c >= '0' && c <= '9') ++dim;
  }
  require(dim > 0, Errc::IoFailure, "no signal columns in " + path);

  std::vector<AdversarialRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AdversarialRow r;
    const char* p = line.c_str();
    char* end = nullptr;
    r.label = static_cast<int>(std::strtol(p, &end, 10));
    p = end;
    r.values.reserve(dim);
    for (int i = 0; i < dim; ++i) {
      require(*p == ',', Errc::IoFailure, "short row in " + path);
      ++p;
      r.values.push_back(std::strtod(p, &end));
      p = end;
    }
    auto next_long = [&]() {
      require(*p == ',', Errc::IoFailure, "short row in " + path);
      ++p;
      long v = std::strtol(p, &end, 10);
      p = end;
      return v;
    };
    r.orig_label = static_cast<int>(next_long());
    r.pred_before = static_cast<int>(next_long());
    r.pred_after = static_cast<int>(next_long());
    require(*p == ',', Errc::IoFailure, "short row in " + path);
    ++p;
    r.l2_r = std::strtod(p, &end);
    p = end;
    r.iters = static_cast<int>(next_long());
    out.push_back(std::move(r));
  }
  return out;
}

void write_projection_csv(const std::string& path,
                          const std::vector<std::array<double, 2>>& pts,
                          const std::vector<int>& labels) {
  require(pts.size() == labels.size(), Errc::LengthMismatch, "points/labels size mismatch");
  std::ofstream out(path);
  require(out.good(), Errc::IoFailure, "cannot open " + path + " for writing");
  out << "x,y,label\n";
  std::string line;
  for (size_t i = 0; i < pts.size(); ++i) {
    line.clear();
    append_double(line, pts[i][0]);
    line += ',';
    append_double(line, pts[i][1]);
    line += ',' + std::to_string(labels[i]);
    line += '\n';
    out << line;
  }
  require(out.good(), Errc::IoFailure, "write failed: " + path);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  require(out.good(), Errc::IoFailure, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  require(out.good(), Errc::IoFailure, "write failed: " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::IoFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::IoFailure, "bad JSON in " + path + ": " + e.what());
  }
}

}  // namespace pqadv

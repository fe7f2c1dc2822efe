#pragma once

#include <array>
#include <string>
#include <vector>

#include "pqadv/signal.hpp"

#include "json.hpp"

namespace pqadv {

// Dataset directory layout: train.csv / test.csv with header
// `label,s0,...,s639` (floats, 9 significant digits) plus manifest.json
// {seed, per_class, snr_db, sampling_rate, fundamental, cycles}.

struct DatasetManifest {
  uint64_t seed = 0;
  int per_class = 0;
  double snr_db = 30.0;  // +inf means noiseless; serialized as null
  TimeGrid grid;
};

void save_dataset(const std::string& dir, const Dataset& ds, const DatasetManifest& info);
Dataset load_dataset(const std::string& dir, DatasetManifest* info_out = nullptr);

/// One adversarial signal next to its provenance; mirrors the dataset CSV
/// plus columns orig_label,pred_before,pred_after,l2_r,iters.
struct AdversarialRow {
  std::vector<double> values;  // adversarial signal
  int label = 0;               // ground truth (same as orig_label)
  int orig_label = 0;
  int pred_before = 0;
  int pred_after = 0;
  double l2_r = 0.0;
  int iters = 0;
};

void save_adversarial_csv(const std::string& path, const std::vector<AdversarialRow>& rows);
std::vector<AdversarialRow> load_adversarial_csv(const std::string& path);

void write_projection_csv(const std::string& path,
                          const std::vector<std::array<double, 2>>& pts,
                          const std::vector<int>& labels);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace pqadv

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace pqadv {

constexpr int kNumClasses = 17;
constexpr int kSignalDim = 640;

/// Sampling grid shared by every experiment: 3200 Hz, 50 Hz fundamental,
/// 10 cycles -> 640 samples.
struct TimeGrid {
  double sampling_rate = 3200.0;
  double fundamental = 50.0;
  int cycles = 10;
  int n_samples = kSignalDim;

  double t(int i) const { return static_cast<double>(i) / sampling_rate; }
  double duration() const { return cycles / fundamental; }
  double period() const { return 1.0 / fundamental; }
};

// Superset of the per-class generator parameters; each class reads only the
// fields its waveform uses. Seconds for times, per-unit for magnitudes.
struct DisturbanceParams {
  int class_id = 1;
  double amplitude = 1.0;
  double phase = 0.0;  // radians, applied to the fundamental (and harmonics)

  double t1 = 0.0, t2 = 0.0;  // sag/swell/interruption/flicker-composite window
  double alpha = 0.0;         // envelope depth (sag) or height (swell)

  double h3 = 0.0, h5 = 0.0, h7 = 0.0;  // harmonic coefficients

  double flicker_mag = 0.0;   // lambda
  double flicker_freq = 0.0;  // Hz

  double trans_mag = 0.0;  // oscillatory transient amplitude
  double trans_tau = 0.0;  // decay constant [s]
  double trans_freq = 0.0;  // oscillation frequency [Hz]
  double trans_t1 = 0.0, trans_t2 = 0.0;

  double pulse_height = 0.0;  // impulse/spike
  double pulse_t1 = 0.0, pulse_t2 = 0.0;

  double notch_depth = 0.0;   // K
  double notch_offset = 0.0;  // within-cycle offset [s]
  double notch_width = 0.0;   // [s]
};

struct SignalVector {
  std::vector<double> values;  // length TimeGrid::n_samples, per-unit volts
  int label = 1;               // 1..17
  DisturbanceParams params;
  std::optional<double> snr_db;  // nullopt: noiseless
};

struct Dataset {
  std::vector<SignalVector> train;
  std::vector<SignalVector> test;
  uint64_t seed = 0;
  std::map<int, int> class_counts;
};

const char* class_symbol(int class_id);  // "C-1" .. "C-17"
const char* class_name(int class_id);    // "Normal", "Sag", ...

double l2_norm(const std::vector<double>& v);
double linf_norm(const std::vector<double>& v);

}  // namespace pqadv

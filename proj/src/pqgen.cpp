#include "pqadv/pqgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pqadv/error.hpp"

namespace pqadv {

namespace {

constexpr double kPi = 3.14159265358979323846;

const char* kClassNames[kNumClasses] = {
    "Normal",
    "Sag",
    "Swell",
    "Interruption",
    "Impulse",
    "Oscillatory transient",
    "Harmonics",
    "Harmonics with Sag",
    "Harmonics with Swell",
    "Flicker",
    "Flicker with Sag",
    "Flicker with Swell",
    "Sag with Oscillatory transient",
    "Swell with Oscillatory transient",
    "Sag with Harmonics",
    "Swell with Harmonics",
    "Notch",
};

const char* kClassSymbols[kNumClasses] = {
    "C-1", "C-2", "C-3", "C-4", "C-5", "C-6", "C-7", "C-8", "C-9",
    "C-10", "C-11", "C-12", "C-13", "C-14", "C-15", "C-16", "C-17",
};

void check_class(int class_id) {
  require(class_id >= 1 && class_id <= kNumClasses, Errc::UnknownClass,
          "class_id " + std::to_string(class_id));
}

void check_range(double v, double lo, double hi, const char* field) {
  if (!(v >= lo && v <= hi))
    fail(Errc::ParamOutOfRange,
         std::string(field) + "=" + std::to_string(v) + " outside [" +
             std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

void check_window(double t1, double t2, double total, const char* field) {
  if (!(t1 >= 0.0 && t1 <= t2 && t2 <= total))
    fail(Errc::ParamOutOfRange, std::string(field) + " window [" + std::to_string(t1) +
                                    ", " + std::to_string(t2) + "] invalid");
}

// Sanity caps; the narrower sampling ranges live in sample_params. Zero
// magnitudes stay legal so composite classes can degenerate to their base
// class (relied on by the reduction tests).
void validate_params(int class_id, const DisturbanceParams& p, const TimeGrid& grid) {
  const double total = grid.duration();
  check_range(p.amplitude, 1e-6, 10.0, "amplitude");
  check_range(p.phase, 0.0, 2.0 * kPi, "phase");
  switch (class_id) {
    case 2:
    case 3:
    case 8:
    case 9:
    case 11:
    case 12:
    case 15:
    case 16:
      check_range(p.alpha, 0.0, 1.0, "alpha");
      check_window(p.t1, p.t2, total, "event");
      break;
    case 4:
      check_range(p.alpha, 0.0, 1.0, "alpha");
      check_window(p.t1, p.t2, total, "event");
      break;
    default:
      break;
  }
  if (class_id == 7 || class_id == 8 || class_id == 9 || class_id == 15 || class_id == 16) {
    check_range(p.h3, 0.0, 0.5, "h3");
    check_range(p.h5, 0.0, 0.5, "h5");
    check_range(p.h7, 0.0, 0.5, "h7");
  }
  if (class_id >= 10 && class_id <= 12) {
    check_range(p.flicker_mag, 0.0, 0.5, "flicker_mag");
    check_range(p.flicker_freq, 0.0, 100.0, "flicker_freq");
  }
  if (class_id == 6 || class_id == 13 || class_id == 14) {
    check_range(p.trans_mag, 0.0, 2.0, "trans_mag");
    check_window(p.trans_t1, p.trans_t2, total, "transient");
    if (p.trans_mag > 0.0) {
      check_range(p.trans_tau, 1e-4, 1.0, "trans_tau");
      check_range(p.trans_freq, 1.0, grid.sampling_rate / 2.0, "trans_freq");
    }
  }
  if (class_id == 5) {
    check_range(p.pulse_height, 0.0, 5.0, "pulse_height");
    check_window(p.pulse_t1, p.pulse_t2, total, "pulse");
  }
  if (class_id == 17) {
    check_range(p.notch_depth, 0.0, 1.0, "notch_depth");
    check_range(p.notch_width, 0.0, grid.period(), "notch_width");
    check_range(p.notch_offset, 0.0, grid.period(), "notch_offset");
  }
}

inline double gate(double t, double t1, double t2) {
  return (t >= t1 && t < t2) ? 1.0 : 0.0;
}

}  // namespace

const char* class_symbol(int class_id) {
  check_class(class_id);
  return kClassSymbols[class_id - 1];
}

const char* class_name(int class_id) {
  check_class(class_id);
  return kClassNames[class_id - 1];
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double linf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

SignalVector synthesize_signal(int class_id, const DisturbanceParams& params,
                               const TimeGrid& grid) {
  check_class(class_id);
  validate_params(class_id, params, grid);

  const double omega = 2.0 * kPi * grid.fundamental;
  const double period = grid.period();
  const DisturbanceParams& p = params;

  SignalVector out;
  out.values.resize(grid.n_samples);
  out.label = class_id;
  out.params = params;

  for (int i = 0; i < grid.n_samples; ++i) {
    const double t = grid.t(i);
    const double arg = omega * t + p.phase;
    const double fund = std::sin(arg);

    double v = 0.0;
    const double env_sag = 1.0 - p.alpha * gate(t, p.t1, p.t2);
    const double env_swell = 1.0 + p.alpha * gate(t, p.t1, p.t2);
    const double harm = p.h3 * std::sin(3.0 * arg) + p.h5 * std::sin(5.0 * arg) +
                        p.h7 * std::sin(7.0 * arg);
    const double flick = 1.0 + p.flicker_mag * std::sin(2.0 * kPi * p.flicker_freq * t);

    switch (class_id) {
      case 1:
        v = fund;
        break;
      case 2:
      case 4:  // interruption: sag with alpha in [0.9, 1]
        v = env_sag * fund;
        break;
      case 3:
        v = env_swell * fund;
        break;
      case 5:
        v = fund + p.pulse_height * gate(t, p.pulse_t1, p.pulse_t2);
        break;
      case 6:
      case 13:
      case 14: {
        double tr = 0.0;
        if (gate(t, p.trans_t1, p.trans_t2) > 0.0) {
          const double dt = t - p.trans_t1;
          tr = p.trans_mag * std::exp(-dt / p.trans_tau) *
               std::sin(2.0 * kPi * p.trans_freq * dt);
        }
        const double env = (class_id == 6) ? 1.0 : (class_id == 13 ? env_sag : env_swell);
        v = env * fund + tr;
        break;
      }
      case 7:
        v = fund + harm;
        break;
      case 8:  // harmonic content attenuated together with the fundamental
        v = env_sag * (fund + harm);
        break;
      case 9:
        v = env_swell * (fund + harm);
        break;
      case 10:
        v = flick * fund;
        break;
      case 11:
        v = flick * env_sag * fund;
        break;
      case 12:
        v = flick * env_swell * fund;
        break;
      case 15:  // harmonics persist through the sag window
        v = env_sag * fund + harm;
        break;
      case 16:
        v = env_swell * fund + harm;
        break;
      case 17: {
        // commutation notches locked to the waveform's own cycle
        const double cyc = std::fmod(t + p.phase / omega, period);
        const double notch =
            (cyc >= p.notch_offset && cyc < p.notch_offset + p.notch_width) ? 1.0 : 0.0;
        const double sgn = fund > 0.0 ? 1.0 : (fund < 0.0 ? -1.0 : 0.0);
        v = fund - sgn * p.notch_depth * notch;
        break;
      }
      default:
        break;
    }
    out.values[i] = p.amplitude * v;
  }
  return out;
}

DisturbanceParams sample_params(int class_id, Rng& rng, const TimeGrid& grid) {
  check_class(class_id);
  const double T = grid.period();
  const double total = grid.duration();

  DisturbanceParams p;
  p.class_id = class_id;
  p.amplitude = 1.0;
  p.phase = rng.uniform(0.0, 2.0 * kPi);

  auto draw_window = [&](double dmin, double dmax, double& t1, double& t2) {
    const double d = rng.uniform(dmin, dmax);
    t1 = rng.uniform(0.0, total - d);
    t2 = t1 + d;
  };

  switch (class_id) {
    case 1:
      break;
    case 2:
      p.alpha = rng.uniform(0.1, 0.9);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      break;
    case 3:
      p.alpha = rng.uniform(0.1, 0.8);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      break;
    case 4:
      p.alpha = rng.uniform(0.9, 1.0);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      break;
    case 5: {
      p.pulse_height = rng.uniform(1.0, 3.0);
      const double w = rng.uniform(0.5e-3, 3.0e-3);
      p.pulse_t1 = rng.uniform(0.0, total - w);
      p.pulse_t2 = p.pulse_t1 + w;
      break;
    }
    case 6:
    case 13:
    case 14: {
      if (class_id != 6) {
        p.alpha = (class_id == 13) ? rng.uniform(0.1, 0.9) : rng.uniform(0.1, 0.8);
        draw_window(T, 9.0 * T, p.t1, p.t2);
      }
      p.trans_mag = rng.uniform(0.1, 0.8);
      p.trans_tau = rng.uniform(8.0e-3, 40.0e-3);
      p.trans_freq = rng.uniform(300.0, 900.0);
      const double d = rng.uniform(0.5 * T, 3.0 * T);
      p.trans_t1 = rng.uniform(0.0, total - d);
      p.trans_t2 = p.trans_t1 + d;
      break;
    }
    case 7:
      p.h3 = rng.uniform(0.05, 0.15);
      p.h5 = rng.uniform(0.05, 0.15);
      p.h7 = rng.uniform(0.05, 0.15);
      break;
    case 8:
    case 15:
      p.alpha = rng.uniform(0.1, 0.9);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      p.h3 = rng.uniform(0.05, 0.15);
      p.h5 = rng.uniform(0.05, 0.15);
      p.h7 = rng.uniform(0.05, 0.15);
      break;
    case 9:
    case 16:
      p.alpha = rng.uniform(0.1, 0.8);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      p.h3 = rng.uniform(0.05, 0.15);
      p.h5 = rng.uniform(0.05, 0.15);
      p.h7 = rng.uniform(0.05, 0.15);
      break;
    case 10:
      p.flicker_mag = rng.uniform(0.05, 0.1);
      p.flicker_freq = rng.uniform(5.0, 20.0);
      break;
    case 11:
      p.flicker_mag = rng.uniform(0.05, 0.1);
      p.flicker_freq = rng.uniform(5.0, 20.0);
      p.alpha = rng.uniform(0.1, 0.9);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      break;
    case 12:
      p.flicker_mag = rng.uniform(0.05, 0.1);
      p.flicker_freq = rng.uniform(5.0, 20.0);
      p.alpha = rng.uniform(0.1, 0.8);
      draw_window(T, 9.0 * T, p.t1, p.t2);
      break;
    case 17: {
      p.notch_depth = rng.uniform(0.1, 0.4);
      p.notch_width = rng.uniform(0.3e-3, 1.0e-3);
      p.notch_offset = rng.uniform(0.0, T - p.notch_width);
      break;
    }
    default:
      break;
  }
  return p;
}

SignalVector add_noise(const SignalVector& signal, double snr_db, Rng& rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) return signal;
  require(std::isfinite(snr_db), Errc::ParamOutOfRange, "snr_db must be finite or +inf");

  double power = 0.0;
  for (double x : signal.values) power += x * x;
  power /= static_cast<double>(signal.values.size());
  require(power > 0.0, Errc::ZeroSignal, "SNR undefined for an all-zero signal");

  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  SignalVector out = signal;
  for (double& x : out.values) x += sigma * rng.gaussian();
  out.snr_db = snr_db;
  return out;
}

Dataset build_dataset(int per_class, double snr_db, uint64_t seed, const TimeGrid& grid) {
  require(per_class >= 4, Errc::ParamOutOfRange,
          "per_class must be >= 4, got " + std::to_string(per_class));

  const Rng gen_base = Rng::stream(seed, "gen");
  const int total = kNumClasses * per_class;
  std::vector<SignalVector> all(total);

  // Per-signal rng split by global index: parallel generation is
  // order-independent and bitwise reproducible.
#pragma omp parallel for schedule(static)
  for (int idx = 0; idx < total; ++idx) {
    const int class_id = idx / per_class + 1;
    Rng rng = gen_base.split(static_cast<uint64_t>(idx));
    const DisturbanceParams p = sample_params(class_id, rng, grid);
    SignalVector s = synthesize_signal(class_id, p, grid);
    all[idx] = add_noise(s, snr_db, rng);
  }

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = Rng::stream(seed, "shuffle").split(0);
  shuffle_rng.shuffle(order);

  const int n_test = total / 4;
  Dataset ds;
  ds.seed = seed;
  ds.test.reserve(n_test);
  ds.train.reserve(total - n_test);
  for (int i = 0; i < total; ++i) {
    SignalVector& s = all[order[i]];
    ds.class_counts[s.label]++;
    if (i < n_test)
      ds.test.push_back(std::move(s));
    else
      ds.train.push_back(std::move(s));
  }
  return ds;
}

}  // namespace pqadv

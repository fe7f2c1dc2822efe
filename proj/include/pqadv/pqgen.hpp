#pragma once

#include "pqadv/rng.hpp"
#include "pqadv/signal.hpp"

namespace pqadv {

/// Noiseless waveform for one of the 17 disturbance classes. Pure function:
/// identical inputs give bit-identical outputs.
/// Throws UnknownClass / ParamOutOfRange.
SignalVector synthesize_signal(int class_id, const DisturbanceParams& params,
                               const TimeGrid& grid);

/// Draw generator parameters uniformly within the class's declared ranges.
/// Throws UnknownClass.
DisturbanceParams sample_params(int class_id, Rng& rng, const TimeGrid& grid);

/// Additive zero-mean white Gaussian noise sized so that
/// noise variance = mean_square(signal) / 10^(snr_db/10).
/// An infinite snr_db disables noise and returns the input unchanged.
/// Throws ZeroSignal on an all-zero input.
SignalVector add_noise(const SignalVector& signal, double snr_db, Rng& rng);

/// 17 x per_class signals, one AWGN realization each, globally shuffled,
/// split 3/4 train : 1/4 test. Deterministic in `seed` and independent of
/// generation order (per-signal rng split by global index).
Dataset build_dataset(int per_class, double snr_db, uint64_t seed,
                      const TimeGrid& grid = TimeGrid{});

}  // namespace pqadv

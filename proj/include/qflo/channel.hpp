#ifndef QFLO_CHANNEL_HPP
#define QFLO_CHANNEL_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "qflo/net_model.hpp"

namespace qflo {

enum class GainModel {
  kAmplitudeSquared,  // amplitude ~ Rayleigh(scale), gain = amplitude^2
  kPower,             // gain itself ~ Rayleigh(scale)
};

enum class LogBase { kNatural, kTwo };

struct ChannelParams {
  double fading_scale = 1.0;  // c in scale = c / d^2
  double tx_power = 1.0;
  double noise_power = 1.0;
  LogBase log_base = LogBase::kNatural;
  GainModel gain_model = GainModel::kAmplitudeSquared;
  /// When set, every link runs at this rate and the gains are ignored.
  std::optional<double> fixed_rate;
};

/// Power gains per link (indexed like NetworkSpec::links), frozen for one
/// review period.
struct ChannelState {
  std::vector<double> gains;
  std::int64_t drawn_at = 0;
};

struct RateTable {
  std::vector<double> rates;  // bits (= packets) per slot, per link
  double tx_power = 1.0;
  double noise_power = 1.0;
};

/// Gains for `period` are a pure function of (seed, period, link order).
ChannelState draw_gains(const NetworkSpec& spec, const ChannelParams& params, std::int64_t period,
                        std::uint64_t seed);

/// log(1 + gain * power / noise). Throws std::domain_error on negative gain or
/// non-positive power/noise.
double compute_rate(double gain, double power, double noise, LogBase base = LogBase::kNatural);

RateTable compute_rates(const ChannelState& channel, const ChannelParams& params);

}  // namespace qflo

#endif  // QFLO_CHANNEL_HPP

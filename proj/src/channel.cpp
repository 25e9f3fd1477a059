#include "qflo/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qflo {

namespace {

constexpr std::uint64_t kChannelStream = 0x6368616e;  // "chan"

double rayleigh(std::mt19937_64& rng, double scale) {
  // Inverse CDF; 1 - U keeps the log argument in (0, 1].
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return scale * std::sqrt(-2.0 * std::log(1.0 - unit(rng)));
}

}  // namespace

ChannelState draw_gains(const NetworkSpec& spec, const ChannelParams& params, std::int64_t period,
                        std::uint64_t seed) {
  if (!(params.fading_scale > 0.0)) throw ConfigError("channel.fading_scale: must be > 0");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kChannelStream), static_cast<std::uint32_t>(period),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(period) >> 32)};
  std::mt19937_64 rng(seq);

  ChannelState state;
  state.drawn_at = period;
  state.gains.reserve(spec.links.size());
  for (std::size_t l = 0; l < spec.links.size(); ++l) {
    const auto& a = spec.nodes.at(spec.links[l].from);
    const auto& b = spec.nodes.at(spec.links[l].to);
    const double d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
    if (d2 == 0.0)
      throw ConfigError("network.nodes: nodes " + std::to_string(a.id) + " and " + std::to_string(b.id) +
                        " share a position");
    const double sample = rayleigh(rng, params.fading_scale / d2);
    state.gains.push_back(params.gain_model == GainModel::kAmplitudeSquared ? sample * sample : sample);
  }
  return state;
}

double compute_rate(double gain, double power, double noise, LogBase base) {
  if (!(gain >= 0.0)) throw std::domain_error("compute_rate: gain must be >= 0");
  if (!(power > 0.0)) throw std::domain_error("compute_rate: power must be > 0");
  if (!(noise > 0.0)) throw std::domain_error("compute_rate: noise must be > 0");
  const double snr = gain * power / noise;
  return base == LogBase::kNatural ? std::log1p(snr) : std::log2(1.0 + snr);
}

RateTable compute_rates(const ChannelState& channel, const ChannelParams& params) {
  RateTable table;
  table.tx_power = params.tx_power;
  table.noise_power = params.noise_power;
  table.rates.reserve(channel.gains.size());
  for (double g : channel.gains)
    table.rates.push_back(params.fixed_rate ? *params.fixed_rate :compute_rate(g, params.tx_power, params.noise_power, params.log_base));
  return table;
}

}  // namespace qflo

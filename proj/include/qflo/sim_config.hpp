#ifndef QFLO_SIM_CONFIG_HPP
#define QFLO_SIM_CONFIG_HPP

#include <cstdint>
#include <vector>

#include "qflo/channel.hpp"
#include "qflo/fluid_opt.hpp"
#include "qflo/net_model.hpp"

namespace qflo {

/// How a link rate in bits/slot becomes whole 1-bit packets per slot.
enum class RateRounding { kFloor, kProbabilistic };

struct ControlParams {
  double a1 = 1.0;
  double a2 = 1.0;
  std::int64_t safety_stock = 5;
  RateRounding rounding = RateRounding::kFloor;
};

struct RunParams {
  std::int64_t horizon = 100000;
  std::vector<std::uint64_t> seeds{1};
  bool trace = false;
  bool oracle_gap = false;  // solve each review exactly when |K| is small enough
};

struct SimConfig {
  NetworkSpec network;  // interference sets already derived
  ChannelParams channel;
  OptParams optimizer;
  ControlParams control;
  RunParams run;
};

/// Checks every cross-reference and positivity constraint; throws ConfigError.
void validate(const SimConfig& config);

}  // namespace qflo

#endif  // QFLO_SIM_CONFIG_HPP

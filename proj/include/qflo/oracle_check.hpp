#ifndef QFLO_ORACLE_CHECK_HPP
#define QFLO_ORACLE_CHECK_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "qflo/fluid_opt.hpp"
#include "qflo/net_model.hpp"

namespace qflo {

/// A random small network (routes of one or two hops) with its node-set
/// constraints and review-instant weights.
struct RandomInstance {
  NetworkSpec network;
  LinkFlowIndex index;
  ConstraintSet constraints;
  WeightVector<double> weights;
};

struct InstanceOptions {
  std::size_t max_dimension = 6;
  double theta_hat = 2.0;
  std::int64_t max_backlog = 100;
  double min_rate = 0.5;
  double max_rate = 3.0;
};

RandomInstance random_instance(std::mt19937_64& rng, const InstanceOptions& options = {});

/// Step size for the incremental solver on `w`: base_step scaled so the
/// largest single gradient step equals base_step * reference_gradient.
double scaled_step(const WeightVector<double>& w, double base_step = 1e-4, double reference_gradient = 700.0);

struct OracleComparison {
  std::size_t dimension = 0;
  double oracle = 0.0;
  double solver = 0.0;
  double c3 = 0.0;
  double step = 0.0;
  double gap() const { return oracle - solver; }
  double allowance() const;  // max(c3, 1% of oracle)
  bool within_allowance() const { return gap() <= allowance(); }
  bool dominated() const { return solver <= oracle + 1e-9; }
  bool c3_binding() const { return c3 >= 0.01 * oracle; }
};

/// Solves `count` seeded random instances with both the incremental solver
/// (`cycles` passes, scaled step) and the exact oracle.
std::vector<OracleComparison> oracle_check(std::uint64_t seed, std::size_t count, int cycles = 50,
                                           const InstanceOptions& options = {});

}  // namespace qflo

#endif  // QFLO_ORACLE_CHECK_HPP

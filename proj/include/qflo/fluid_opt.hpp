#ifndef QFLO_FLUID_OPT_HPP
#define QFLO_FLUID_OPT_HPP

// Per-review schedule optimization: maximize sum_k w_k mu_k s(k) over the
// interference polytope by cyclic incremental gradient ascent with halfspace
// projections, plus an exact vertex-enumeration oracle for small instances.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qflo/net_model.hpp"

namespace qflo {

template <typename Scalar>
using ScheduleVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Objective coefficients at a review instant. w(k) = theta^{f(k)} * Q_{i(k)}^{f(k)},
/// mu(k) = rate of link (i(k), j(k)). theta_max(k) bounds theta^{f(k)}.
template <typename Scalar>
struct WeightVector {
  ScheduleVector<Scalar> w;
  ScheduleVector<Scalar> mu;
  ScheduleVector<Scalar> theta_max;

  Eigen::Index size() const { return w.size(); }
  auto gradient() const { return w.cwiseProduct(mu); }
};

enum class InitMode { kOnes, kZeros };

/// Divisor used when spreading a violation over a halfspace's members.
/// kCoordinates is the exact orthogonal projection; kLinks divides by the
/// number of links in the set instead.
enum class ProjectionDivisor { kCoordinates, kLinks };

/// kZero keeps the iterate nonnegative: each halfspace projection becomes the
/// projection onto {s_M >= 0, sum s_M <= 1}. kNone leaves coordinates free
/// until finalize_feasible.
enum class LowerBound { kZero, kNone };

struct ProjectionRule {
  ProjectionDivisor divisor = ProjectionDivisor::kCoordinates;
  LowerBound lower = LowerBound::kZero;
};

struct OptParams {
  double step_size = 1e-4;
  int cycles = 8;
  int projection_repeats = 10;
  InitMode init = InitMode::kOnes;
  ProjectionDivisor divisor = ProjectionDivisor::kCoordinates;
  LowerBound lower = LowerBound::kZero;

  ProjectionRule rule() const { return {divisor, lower}; }
};

template <typename Scalar>
struct OptDiagnostics {
  Scalar c2 = 0;
  Scalar beta = 0;
  Scalar c3 = 0;
  std::vector<Scalar> objective_trace;  // raw iterate after each cycle
  std::size_t projections = 0;
  std::size_t messages = 0;  // coordinate hand-offs plus per-link correction broadcasts
};

inline void validate(const OptParams& p) {
  if (!(p.step_size > 0.0)) throw ConfigError("optimizer.step_size: must be > 0");
  if (p.cycles < 1) throw ConfigError("optimizer.cycles: must be >= 1");
  if (p.projection_repeats < 1) throw ConfigError("optimizer.projection_repeats: must be >= 1");
}

template <typename Scalar, typename Derived>
Scalar objective(const Eigen::MatrixBase<Derived>& s, const WeightVector<Scalar>& w) {
  if (s.size() != w.w.size() || w.mu.size() != w.w.size())
    throw std::invalid_argument("objective: dimension mismatch");
  return w.gradient().dot(s.derived());
}

/// s(k) += step * w_k * mu_k.
template <typename Scalar, typename Derived>
void gradient_step(Eigen::MatrixBase<Derived>& s, Eigen::Index k, const WeightVector<Scalar>& w, Scalar step) {
  s(k) += step * w.w(k) * w.mu(k);
}

template <typename Derived>
typename Derived::Scalar member_sum(const Eigen::MatrixBase<Derived>& s, const Halfspace& h) {
  typename Derived::Scalar sum = 0;
  for (auto k : h.members) sum += s(static_cast<Eigen::Index>(k));
  return sum;
}

/// <s, nu> for the halfspace's unit normal.
template <typename Derived>
typename Derived::Scalar inner_product(const Eigen::MatrixBase<Derived>& s, const Halfspace& h) {
  using Scalar = typename Derived::Scalar;
  return member_sum(s, h) / std::sqrt(static_cast<Scalar>(h.size()));
}

/// Violation in sum units (member sum minus 1); positive means violated.
template <typename Derived>
typename Derived::Scalar violation(const Eigen::MatrixBase<Derived>& s, const Halfspace& h) {
  return member_sum(s, h) - typename Derived::Scalar(1);
}

/// Orthogonal projection onto {<s,nu> <= beta}: each member drops by
/// (S - 1) / n. Returns true when s was outside the halfspace.
template <typename Derived>
bool project_onto_halfspace(Eigen::MatrixBase<Derived>& s, const Halfspace& h,
                            ProjectionDivisor divisor = ProjectionDivisor::kCoordinates) {
  using Scalar = typename Derived::Scalar;
  const Scalar sum = member_sum(s, h);
  if (!(sum > Scalar(1))) return false;
  const auto n = divisor == ProjectionDivisor::kCoordinates ? h.size() : h.link_count;
  const Scalar correction = (sum - Scalar(1)) / static_cast<Scalar>(n);
  for (auto k : h.members) s(static_cast<Eigen::Index>(k)) -= correction;
  return true;
}

/// Projection onto {s_M >= 0, sum s_M <= 1} for the members M of h: every
/// member becomes max(s_m - tau, 0) with tau fixed by a unit sum. Equals
/// project_onto_halfspace whenever no member would turn negative. Returns true
/// when the sum exceeded one.
template <typename Derived>
bool project_onto_capped_simplex(Eigen::MatrixBase<Derived>& s, const Halfspace& h) {
  using Scalar = typename Derived::Scalar;
  const Scalar sum = member_sum(s, h);
  if (!(sum > Scalar(1))) return false;
  std::vector<Scalar> v;
  v.reserve(h.size());
  for (auto k : h.members) v.push_back(s(static_cast<Eigen::Index>(k)));
  std::sort(v.begin(), v.end(), std::greater<Scalar>());
  // largest r with v[r-1] - (sum of top r - 1) / r > 0
  Scalar prefix = 0, tau = (sum - Scalar(1)) / static_cast<Scalar>(h.size());
  for (std::size_t r = 1; r <= v.size(); ++r) {
    prefix += v[r - 1];
    const Scalar candidate = (prefix - Scalar(1)) / static_cast<Scalar>(r);
    if (v[r - 1] - candidate > Scalar(0)) tau = candidate;
  }
  for (auto k : h.members) {
    auto& x = s(static_cast<Eigen::Index>(k));
    x = std::max(x - tau, Scalar(0));
  }
  return true;
}

template <typename Derived>
bool project_with_rule(Eigen::MatrixBase<Derived>& s, const Halfspace& h, const ProjectionRule& rule) {
  using Scalar = typename Derived::Scalar;
  if (rule.lower == LowerBound::kNone) return project_onto_halfspace(s, h, rule.divisor);
  if (rule.divisor == ProjectionDivisor::kCoordinates) return project_onto_capped_simplex(s, h);
  if (!project_onto_halfspace(s, h, rule.divisor)) return false;
  for (auto k : h.members) s(static_cast<Eigen::Index>(k)) = std::max(s(static_cast<Eigen::Index>(k)), Scalar(0));
  return true;
}

/// Projects back onto the (at most two) endpoint halfspaces of a just-updated
/// coordinate. One violated constraint takes a single projection; with both
/// violated the two are alternated up to `repeats` times. When
/// `residual_trace` is given it receives the larger violation before each
/// round and after the last one.
template <typename Derived>
void alternating_project(Eigen::MatrixBase<Derived>& s, const ConstraintSet& cs,
                         const std::vector<std::size_t>& endpoint, int repeats, const ProjectionRule& rule,
                         OptDiagnostics<typename Derived::Scalar>* diag = nullptr,
                         std::vector<typename Derived::Scalar>* residual_trace = nullptr) {
  using Scalar = typename Derived::Scalar;
  auto project = [&](const Halfspace& h) {
    if (project_with_rule(s, h, rule) && diag) {
      ++diag->projections;
      diag->messages += h.link_count;
    }
  };
  if (endpoint.empty()) return;
  const Halfspace& h1 = cs.halfspaces[endpoint[0]];
  if (endpoint.size() == 1) {
    if (residual_trace) residual_trace->push_back(std::max(Scalar(0), violation(s, h1)));
    project(h1);
    if (residual_trace) residual_trace->push_back(std::max(Scalar(0), violation(s, h1)));
    return;
  }
  const Halfspace& h2 = cs.halfspaces[endpoint[1]];
  auto worst = [&] { return std::max({Scalar(0), violation(s, h1), violation(s, h2)}); };
  const bool v1 = violation(s, h1) > Scalar(0);
  const bool v2 = violation(s, h2) > Scalar(0);
  if (residual_trace) residual_trace->push_back(worst());
  if (v1 != v2) {
    project(v1 ? h1 : h2);
  } else if (v1 && v2) {
    for (int rep = 0; rep < repeats; ++rep) {
      project(h1);
      project(h2);
      if (residual_trace) residual_trace->push_back(worst());
      if (!(violation(s, h1) > Scalar(0)) && !(violation(s, h2) > Scalar(0))) break;
    }
    return;
  }
  if (residual_trace) residual_trace->push_back(worst());
}

/// Clamps into [0, 1], then rescales every halfspace whose member sum
/// exceeds one by that sum, in halfspace order.
template <typename Derived>
void finalize_feasible(Eigen::MatrixBase<Derived>& s, const ConstraintSet& cs) {
  using Scalar = typename Derived::Scalar;
  s = s.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  for (const auto& h : cs.halfspaces) {
    const Scalar sum = member_sum(s, h);
    if (sum > Scalar(1))
      for (auto k : h.members) s(static_cast<Eigen::Index>(k)) /= sum;
  }
}

template <typename Derived>
bool is_feasible(const Eigen::MatrixBase<Derived>& s, const ConstraintSet& cs, double tol = 1e-9) {
  if ((s.array() < -tol).any() || (s.array() > 1 + tol).any()) return false;
  for (const auto& h : cs.halfspaces)
    if (violation(s, h) > tol) return false;
  return true;
}

template <typename Scalar>
OptDiagnostics<Scalar> suboptimality_bound(const OptParams& params, const WeightVector<Scalar>& w) {
  OptDiagnostics<Scalar> d;
  const auto n = static_cast<Scalar>(w.size());
  if (w.size() == 0) return d;
  d.c2 = w.theta_max.cwiseProduct(w.mu).maxCoeff();
  d.beta = Scalar(4) + Scalar(1) / n;
  d.c3 = static_cast<Scalar>(params.step_size) * d.beta * n * n * d.c2 * d.c2 / Scalar(2);
  return d;
}

/// Runs `params.cycles` passes over K; each coordinate takes one gradient step
/// followed by projection onto its endpoint halfspaces. The final iterate is
/// made feasible with finalize_feasible.
template <typename Scalar>
std::pair<ScheduleVector<Scalar>, OptDiagnostics<Scalar>> solve_review_optimization(const WeightVector<Scalar>& w,
                                                                                   const ConstraintSet& cs,
                                                                                   const OptParams& params) {
  const Eigen::Index n = w.size();
  if (static_cast<std::size_t>(n) != cs.dimension())
    throw std::invalid_argument("solve_review_optimization: weight and constraint dimensions differ");
  auto diag = suboptimality_bound(params, w);
  ScheduleVector<Scalar> s =
      params.init == InitMode::kOnes ? ScheduleVector<Scalar>::Ones(n) : ScheduleVector<Scalar>::Zero(n);
  const auto step = static_cast<Scalar>(params.step_size);
  diag.objective_trace.reserve(static_cast<std::size_t>(params.cycles));
  for (int cycle = 0; cycle < params.cycles; ++cycle) {
    for (Eigen::Index k = 0; k < n; ++k) {
      gradient_step(s, k, w, step);
      alternating_project(s, cs, cs.endpoint_halfspaces[static_cast<std::size_t>(k)], params.projection_repeats,
                          params.rule(), &diag);
      ++diag.messages;  // hand s(k) to the owner of k+1
    }
    diag.objective_trace.push_back(objective(s, w));
  }
  finalize_feasible(s, cs);
  return {std::move(s), std::move(diag)};
}

constexpr std::size_t kOracleMaxDimension = 12;

/// Exact LP maximum over {0 <= s <= 1, all halfspaces} by enumerating every
/// basis of |K| active constraints. Throws std::length_error above
/// kOracleMaxDimension coordinates.
template <typename Scalar>
std::pair<ScheduleVector<Scalar>, Scalar> oracle_solve(const WeightVector<Scalar>& w, const ConstraintSet& cs) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = w.size();
  if (static_cast<std::size_t>(n) > kOracleMaxDimension)
    throw std::length_error("oracle_solve: |K| = " + std::to_string(n) + " exceeds enumeration limit " +
                            std::to_string(kOracleMaxDimension));
  const ScheduleVector<Scalar> c = w.gradient();
  if (n == 0 || (c.array() == Scalar(0)).all()) return {ScheduleVector<Scalar>::Zero(n), Scalar(0)};

  // Rows: halfspaces in sum form, then -s_k <= 0, then s_k <= 1.
  const Eigen::Index m = static_cast<Eigen::Index>(cs.halfspaces.size()) + 2 * n;
  Matrix a = Matrix::Zero(m, n);
  ScheduleVector<Scalar> b(m);
  Eigen::Index row = 0;
  for (const auto& h : cs.halfspaces) {
    for (auto k : h.members) a(row, static_cast<Eigen::Index>(k)) = 1;
    b(row++) = 1;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    a(row, k) = -1;
    b(row++) = 0;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    a(row, k) = 1;
    b(row++) = 1;
  }

  ScheduleVector<Scalar> best = ScheduleVector<Scalar>::Zero(n);
  Scalar best_value = -std::numeric_limits<Scalar>::infinity();
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
  Matrix sub(n, n);
  ScheduleVector<Scalar> rhs(n);
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) {
      sub.row(i) = a.row(pick[static_cast<std::size_t>(i)]);
      rhs(i) = b(pick[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.isInvertible()) {
      const ScheduleVector<Scalar> x = lu.solve(rhs);
      if (((a * x - b).array() <= Scalar(1e-9)).all()) {
        const Scalar value = c.dot(x);
        if (value > best_value + Scalar(1e-12)) {
          best_value = value;
          best = x;
        }
      }
    }
    // next n-combination of m rows in lexicographic order
    Eigen::Index i = n - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - n + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < n; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return {std::move(best), best_value};
}

/// Backlog over allocated outflow: x / sum_j mu_ij zeta_ij^f.
inline double pseudo_draining_time(double backlog, double outflow) {
  if (backlog < 0.0 || outflow < 0.0) throw std::domain_error("pseudo_draining_time: negative input");
  if (backlog == 0.0) return 0.0;
  if (outflow == 0.0) return std::numeric_limits<double>::infinity();
  return backlog / outflow;
}

/// Fluid draining time x / (outflow - inflow) of a single queue; infinite when
/// the queue does not drain.
inline double draining_time(double backlog, double outflow, double inflow) {
  if (backlog < 0.0 || outflow < 0.0 || inflow < 0.0) throw std::domain_error("draining_time: negative input");
  if (backlog == 0.0) return 0.0;
  if (outflow <= inflow) return std::numeric_limits<double>::infinity();
  return backlog / (outflow - inflow);
}

}  // namespace qflo

#endif  // QFLO_FLUID_OPT_HPP

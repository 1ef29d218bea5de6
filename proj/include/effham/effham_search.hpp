#pragma once

#include <cstdint>
#include <vector>

#include "effham/assignment.hpp"
#include "effham/errors.hpp"
#include "effham/potential.hpp"
#include "effham/torus.hpp"

namespace effham {

struct AnnealSchedule {
  double initial_temperature = 0.08;
  double decay = 0.9;
  int steps = 200;
};

struct SearchConfig {
  int j = 16;
  double T = 1.0;
  int restarts = 16;
  AnnealSchedule anneal;
  double tol_outer = 1e-6;
  int max_alternations = 10;
  int segments = 32;       // path discretization during the search
  int descent_iters = 60;  // point-descent iterations per alternation
  std::uint64_t seed = 1;
  int workers = 0;  // 0: process default
};

/// Outcome of one configuration search. H_value + D_value = |P|^2/2 exactly.
/// D_value is the assignment optimum of the best configuration found, i.e. an
/// upper bound on the true minimum over configurations (so H_value is a lower
/// bound up to the max-Xi floor).
struct EffHamEstimate {
  Vec P;
  double T = 0.0;
  int j = 0;
  double D_value = 0.0;
  double H_value = 0.0;
  std::vector<TorusPoint> points;
  TransportPlan plan;

  // diagnostics
  int restarts_used = 0;
  int alternations = 0;
  bool converged = false;
  double restart_spread = 0.0;        // population std of per-restart D values
  double refine_gap = 0.0;            // |D(M) - D(2M)| of the final configuration
  std::vector<double> restart_values; // per-restart search-fidelity D
  std::vector<double> level_D;        // D per j-schedule level (effective_hamiltonian)
  std::vector<int> level_j;

  /// Spread-based noise model used by the T-independence check: search
  /// scatter across restarts, path-refinement drift, and the residual
  /// finite-j drift from the last schedule step.
  double noise_estimate() const;
};

/// Search failure still carries the best configuration found.
class ConfigurationSearchFailure : public SearchFailure {
public:
  ConfigurationSearchFailure(const std::string& what, EffHamEstimate est)
      : SearchFailure(what, est.D_value), estimate(std::move(est)) {}
  EffHamEstimate estimate;
};

/// Alternating minimization of (1/j) sum_i A_P(x_i, x_sigma(i), T) over both
/// the permutation (exact assignment) and the points (torus gradient descent
/// with backtracking), restarted from random configurations and followed by
/// annealed perturbations of the incumbent. Throws
/// ConfigurationSearchFailure when no restart converges.
EffHamEstimate minimize_configuration(const TrigPotential& xi, const Vec& P,
                                      const SearchConfig& cfg);
EffHamEstimate minimize_configuration(const TrigPotential& xi, const Vec& P,
                                      const SearchConfig& cfg,
                                      const std::vector<TorusPoint>& warm_start);

/// Runs minimize_configuration along an increasing j schedule, warm-starting
/// each level by splitting the incumbent atoms; returns the last level's
/// estimate with the per-level D sequence attached.
EffHamEstimate effective_hamiltonian(const TrigPotential& xi, const Vec& P,
                                     const std::vector<int>& j_schedule, double T,
                                     const SearchConfig& base);

/// Quadratic surrogate cost: closed-form kinetic term plus the potential
/// sampled at the source points, assignment solved exactly. Cheap screening
/// objective; shares the T -> 0 limit with empirical_D.
CostMatrix barD_matrix(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                       const Vec& P);
TransportPlan barD_plan(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                        const Vec& P);
double barD(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T, const Vec& P);

}  // namespace effham

#pragma once

#include <vector>

#include "effham/action.hpp"
#include "effham/potential.hpp"
#include "effham/torus.hpp"

namespace effham {

/// Square matrix of pairwise action values, row i = source point.
struct CostMatrix {
  int size = 0;
  std::vector<double> entries;  // row-major size*size
  double at(int i, int l) const { return entries[static_cast<std::size_t>(i) * size + l]; }
};

/// Permutation plus its normalized cost (1/j) sum_i C[i][sigma(i)].
struct TransportPlan {
  std::vector<int> permutation;
  double value = 0.0;
};

/// Exact minimum-cost assignment (shortest augmenting paths with dual
/// potentials, O(j^3)). Handles arbitrary finite costs; throws
/// InvalidInputError on non-finite entries.
TransportPlan solve_assignment(const CostMatrix& C);

/// Pairwise action matrices for a fixed point set with the P-dependence
/// separated out: the mechanical action per (pair, lift) is computed once and
/// reused for every P requested from the same builder. Assembly of missing
/// entries is parallel; entries are pure functions of (pair, lift), so the
/// result does not depend on the worker count.
class CostMatrixBuilder {
public:
  CostMatrixBuilder(std::vector<TorusPoint> points, const TrigPotential& xi, double T,
                    int segments, ActionOptions opt = {});

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<TorusPoint>& points() const { return points_; }

  CostMatrix matrix_for(const Vec& P);
  /// True when every entry of the last assembled matrix used a converged path.
  bool all_converged() const { return all_converged_; }

private:
  struct LiftEntry {
    std::vector<long> z;
    double S0 = 0.0;
    bool converged = false;
  };
  struct PairCache {
    std::vector<LiftEntry> lifts;
  };

  std::vector<TorusPoint> points_;
  TrigPotential xi_;
  double T_;
  int segments_;
  ActionOptions opt_;
  double xi_upper_;  // certified max + slack, for the kinetic pruning bound
  std::vector<PairCache> pairs_;
  bool all_converged_ = true;
};

/// D^T_P(mu_j, Xi) on the empirical measure of `points`: assignment optimum
/// of the pairwise action matrix, normalized by 1/j. Throws
/// OptimizationFailure if any matrix entry failed to converge.
TransportPlan empirical_D(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                          const Vec& P, int segments = 32, const ActionOptions& opt = {});

/// H_{Xi,T}(mu_j, P) = |P|^2/2 - D^T_P(mu_j, Xi).
double empirical_H(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                   const Vec& P, int segments = 32, const ActionOptions& opt = {});

}  // namespace effham

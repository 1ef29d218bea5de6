#include "effham/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "effham/errors.hpp"
#include "effham/parallel.hpp"

namespace effham {

TransportPlan solve_assignment(const CostMatrix& C) {
  const int n = C.size;
  if (n < 1) throw InvalidInputError("solve_assignment: empty matrix");
  for (double v : C.entries)
    if (!std::isfinite(v)) throw InvalidInputError("solve_assignment: non-finite cost entry");

  // Dual-potential shortest augmenting path; 1-based sentinels as usual.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = C.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  TransportPlan plan;
  plan.permutation.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) plan.permutation[p[j] - 1] = j - 1;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += C.at(i, plan.permutation[i]);
  plan.value = total / n;
  return plan;
}

CostMatrixBuilder::CostMatrixBuilder(std::vector<TorusPoint> points, const TrigPotential& xi,
                                     double T, int segments, ActionOptions opt)
    : points_(std::move(points)), xi_(xi), T_(T), segments_(segments), opt_(opt) {
  if (points_.empty()) throw InvalidInputError("CostMatrixBuilder: need at least one point");
  if (!(T > 0.0)) throw InvalidInputError("CostMatrixBuilder: T must be positive");
  for (const auto& p : points_)
    if (p.dim() != xi_.dim()) throw InvalidInputError("CostMatrixBuilder: point dimension mismatch");
  const auto mx = xi_.max_report();
  xi_upper_ = mx.value + mx.eps;
  pairs_.resize(static_cast<std::size_t>(points_.size()) * points_.size());
}

CostMatrix CostMatrixBuilder::matrix_for(const Vec& P) {
  const int j = size();
  const int n = xi_.dim();
  if (static_cast<int>(P.size()) != n) throw InvalidInputError("matrix_for: P dimension mismatch");
  double p2 = 0.0;
  for (double p : P) p2 += p * p;

  CostMatrix C;
  C.size = j;
  C.entries.assign(static_cast<std::size_t>(j) * j, 0.0);
  std::vector<char> ok(static_cast<std::size_t>(j) * j, 1);

  par::for_index(static_cast<long>(j) * j, [&](long e) {
    const int i = static_cast<int>(e / j);
    const int l = static_cast<int>(e % j);
    PairCache& cache = pairs_[e];
    const Vec& y = points_[i].coords;
    const Vec& x = points_[l].coords;

    ActionQuery q{points_[i], points_[l], T_, P};
    auto lifts = lift_window(q, xi_);
    struct Cand {
      const std::vector<long>* z;
      double lb;
    };
    std::vector<Cand> cands;
    cands.reserve(lifts.size());
    for (const auto& z : lifts) {
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double d = x[a] + z[a] - y[a] - T_ * P[a];
        r2 += d * d;
      }
      cands.push_back({&z, r2 / (2.0 * T_ * T_) - xi_upper_});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.lb < b.lb; });

    double best = std::numeric_limits<double>::infinity();
    bool best_conv = false;
    std::vector<double> nodes;
    Vec xz(n);
    for (const auto& c : cands) {
      if (c.lb >= best - 1e-12) break;
      const LiftEntry* hit = nullptr;
      for (const auto& le : cache.lifts)
        if (le.z == *c.z) {
          hit = &le;
          break;
        }
      double S0;
      bool conv;
      if (hit) {
        S0 = hit->S0;
        conv = hit->converged;
      } else {
        for (int a = 0; a < n; ++a) xz[a] = x[a] + (*c.z)[a];
        double bestS0 = std::numeric_limits<double>::infinity();
        bool anyconv = false;
        const int starts = xi_.is_zero() ? 1 : std::max(1, opt_.starts);
        for (int s = 0; s < starts; ++s) {
          detail::make_initial_nodes(y, xz, segments_, n, s, nodes);
          auto mech = detail::minimize_mechanical(y, xz, T_, segments_, xi_, nodes, true,
                                                  opt_.tol_path, opt_.max_iter);
          if (mech.S0 < bestS0) {
            bestS0 = mech.S0;
            anyconv = mech.converged;
          }
        }
        cache.lifts.push_back({*c.z, bestS0, anyconv});
        S0 = bestS0;
        conv = anyconv;
      }
      double pdelta = 0.0;
      for (int a = 0; a < n; ++a) pdelta += P[a] * (x[a] + (*c.z)[a] - y[a]);
      const double A = (S0 - pdelta) / T_ + 0.5 * p2;
      if (A < best) {
        best = A;
        best_conv = conv;
      }
    }
    C.entries[e] = best;
    ok[e] = best_conv ? 1 : 0;
  });

  all_converged_ = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  return C;
}

TransportPlan empirical_D(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                          const Vec& P, int segments, const ActionOptions& opt) {
  CostMatrixBuilder builder(points, xi, T, segments, opt);
  CostMatrix C = builder.matrix_for(P);
  if (!builder.all_converged())
    throw OptimizationFailure("empirical_D: a pairwise action evaluation did not converge",
                              solve_assignment(C).value);
  return solve_assignment(C);
}

double empirical_H(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                   const Vec& P, int segments, const ActionOptions& opt) {
  double p2 = 0.0;
  for (double p : P) p2 += p * p;
  return 0.5 * p2 - empirical_D(points, xi, T, P, segments, opt).value;
}

}  // namespace effham

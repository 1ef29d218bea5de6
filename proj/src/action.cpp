#include "effham/action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "effham/errors.hpp"

namespace effham {

namespace {

void check_query(const ActionQuery& q, int dim) {
  if (q.y.dim() != dim || q.x.dim() != dim || static_cast<int>(q.P.size()) != dim)
    throw InvalidInputError("action: dimension mismatch");
  if (!(q.T > 0.0) || !std::isfinite(q.T)) throw InvalidInputError("action: T must be positive");
  for (double p : q.P)
    if (!std::isfinite(p)) throw InvalidInputError("action: non-finite P");
}

}  // namespace

double action_zero_potential(const ActionQuery& q) {
  check_query(q, q.y.dim());
  Vec shift(q.P.size());
  for (std::size_t i = 0; i < q.P.size(); ++i) shift[i] = q.T * q.P[i];
  const double d = min_displacement(q.x, q.y, shift).norm;
  return d * d / (2.0 * q.T * q.T);
}

std::vector<std::vector<long>> lift_window(const ActionQuery& q, const TrigPotential& xi) {
  const int n = xi.dim();
  check_query(q, n);
  const double spread = std::max(0.0, xi.certified_max() - xi.grid_min());
  const long R = static_cast<long>(std::ceil(q.T * std::sqrt(2.0 * spread))) + 1;
  std::vector<long> lo(n), hi(n);
  long total = 1;
  for (int i = 0; i < n; ++i) {
    // center where the endpoint lift cancels the drift: x + z - y ~ T P
    const double c = q.y.coords[i] - q.x.coords[i] + q.T * q.P[i];
    lo[i] = static_cast<long>(std::ceil(c - R));
    hi[i] = static_cast<long>(std::floor(c + R));
    total *= hi[i] - lo[i] + 1;
  }
  if (total > 200000) throw InvalidInputError("lift_window: window too large (T or potential range excessive)");
  std::vector<std::vector<long>> out;
  out.reserve(total);
  std::vector<long> z(lo);
  for (;;) {
    out.push_back(z);
    int i = n - 1;
    for (; i >= 0; --i) {
      if (++z[i] <= hi[i]) break;
      z[i] = lo[i];
    }
    if (i < 0) break;
  }
  return out;
}

namespace detail {

double mechanical_value(const std::vector<double>& nodes, int segments, int dim, double T,
                        const TrigPotential& xi) {
  const double dt = T / segments;
  double kin = 0.0, pot = 0.0;
  std::vector<double> mid(dim);
  for (int m = 0; m < segments; ++m) {
    const double* a = nodes.data() + m * dim;
    const double* b = a + dim;
    double seg = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double d = b[i] - a[i];
      seg += d * d;
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    kin += seg;
    if (!xi.is_zero()) {
      double v;
      xi.eval_all(mid.data(), &v, nullptr, nullptr);
      pot += v;
    }
  }
  return kin / (2.0 * dt) - dt * pot;
}

namespace {

// Gradient of the discrete action with respect to the interior nodes, plus
// the block-tridiagonal Hessian (diag blocks D, symmetric off-diag blocks O).
void assemble(const std::vector<double>& nodes, int M, int n, double dt, const TrigPotential& xi,
              std::vector<double>& grad, std::vector<double>& D, std::vector<double>& O,
              bool want_hess) {
  const int K = M - 1;  // interior nodes
  std::fill(grad.begin(), grad.end(), 0.0);
  if (want_hess) {
    std::fill(D.begin(), D.end(), 0.0);
    std::fill(O.begin(), O.end(), 0.0);
  }
  std::vector<double> mid(n), g(n), h(n * n);
  // kinetic part
  for (int m = 1; m < M; ++m) {
    const double* prev = nodes.data() + (m - 1) * n;
    const double* cur = prev + n;
    const double* next = cur + n;
    for (int i = 0; i < n; ++i) grad[(m - 1) * n + i] += (2.0 * cur[i] - prev[i] - next[i]) / dt;
  }
  if (want_hess) {
    for (int m = 0; m < K; ++m) {
      for (int i = 0; i < n; ++i) D[m * n * n + i * n + i] += 2.0 / dt;
      if (m + 1 < K)
        for (int i = 0; i < n; ++i) O[m * n * n + i * n + i] += -1.0 / dt;
    }
  }
  if (xi.is_zero()) return;
  // potential part: segment s couples nodes s and s+1 through the midpoint
  for (int s = 0; s < M; ++s) {
    const double* a = nodes.data() + s * n;
    const double* b = a + n;
    for (int i = 0; i < n; ++i) mid[i] = 0.5 * (a[i] + b[i]);
    xi.eval_all(mid.data(), nullptr, g.data(), want_hess ? h.data() : nullptr);
    // d(-dt Xi(mid))/d a_i = d/d b_i = -(dt/2) grad_i
    if (s >= 1)
      for (int i = 0; i < n; ++i) grad[(s - 1) * n + i] -= 0.5 * dt * g[i];
    if (s + 1 <= M - 1)
      for (int i = 0; i < n; ++i) grad[s * n + i] -= 0.5 * dt * g[i];
    if (want_hess) {
      // second derivative contributes -(dt/4) hess to every node pair of the segment
      if (s >= 1)
        for (int i = 0; i < n * n; ++i) D[(s - 1) * n * n + i] -= 0.25 * dt * h[i];
      if (s + 1 <= M - 1)
        for (int i = 0; i < n * n; ++i) D[s * n * n + i] -= 0.25 * dt * h[i];
      if (s >= 1 && s + 1 <= M - 1)
        for (int i = 0; i < n * n; ++i) O[(s - 1) * n * n + i] -= 0.25 * dt * h[i];
    }
  }
}

// Block-tridiagonal solve of (H + lambda I) delta = -grad. Returns false if a
// pivot degenerates. Blocks are n x n, K of them.
bool block_thomas(int K, int n, std::vector<double> D, const std::vector<double>& O, double lambda,
                  const std::vector<double>& grad, std::vector<double>& delta) {
  auto lu_solve = [n](std::vector<double>& A, double* rhs, int nrhs) -> bool {
    std::vector<int> piv(n);
    for (int c = 0; c < n; ++c) {
      int best = c;
      for (int r = c + 1; r < n; ++r)
        if (std::abs(A[r * n + c]) > std::abs(A[best * n + c])) best = r;
      if (std::abs(A[best * n + c]) < 1e-300) return false;
      piv[c] = best;
      if (best != c)
        for (int k = 0; k < n; ++k) std::swap(A[best * n + k], A[c * n + k]);
      for (int r = c + 1; r < n; ++r) {
        A[r * n + c] /= A[c * n + c];
        for (int k = c + 1; k < n; ++k) A[r * n + k] -= A[r * n + c] * A[c * n + k];
      }
    }
    for (int j = 0; j < nrhs; ++j) {
      double* b = rhs + j * n;
      for (int c = 0; c < n; ++c)
        if (piv[c] != c) std::swap(b[piv[c]], b[c]);
      for (int r = 1; r < n; ++r)
        for (int c = 0; c < r; ++c) b[r] -= A[r * n + c] * b[c];
      for (int r = n - 1; r >= 0; --r) {
        for (int c = r + 1; c < n; ++c) b[r] -= A[r * n + c] * b[c];
        b[r] /= A[r * n + r];
      }
    }
    return true;
  };

  const int nn = n * n;
  for (int m = 0; m < K; ++m)
    for (int i = 0; i < n; ++i) D[m * nn + i * n + i] += lambda;
  delta.assign(K * n, 0.0);
  for (int m = 0; m < K; ++m)
    for (int i = 0; i < n; ++i) delta[m * n + i] = -grad[m * n + i];

  // W[m] holds D'_m^{-1} O_m in column-major-as-rhs layout
  std::vector<double> W((K > 1 ? (K - 1) : 0) * nn);
  std::vector<double> block(nn), rhs(n * n);
  for (int m = 0; m < K; ++m) {
    if (m > 0) {
      // D'_m -= O_{m-1}^T W_{m-1};  r_m -= O_{m-1}^T (D'_{m-1}^{-1} r_{m-1})
      const double* Om = O.data() + (m - 1) * nn;
      const double* Wm = W.data() + (m - 1) * nn;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int k = 0; k < n; ++k) acc += Om[k * n + i] * Wm[j * n + k];
          D[m * nn + i * n + j] -= acc;
        }
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += Om[k * n + i] * delta[(m - 1) * n + k];
        delta[m * n + i] -= acc;
      }
    }
    block.assign(D.begin() + m * nn, D.begin() + (m + 1) * nn);
    // factor once for both the rhs column and, if needed, W_m
    if (m + 1 < K) {
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) rhs[j * n + i] = O[m * nn + i * n + j];
      std::vector<double> fac = block;
      if (!lu_solve(fac, rhs.data(), n)) return false;
      std::copy(rhs.begin(), rhs.end(), W.begin() + m * nn);
    }
    if (!lu_solve(block, delta.data() + m * n, 1)) return false;
    // note: delta[m] currently holds D'_m^{-1} r_m; back substitution fixes couplings
  }
  for (int m = K - 2; m >= 0; --m) {
    const double* Wm = W.data() + m * nn;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += Wm[k * n + i] * delta[(m + 1) * n + k];
      delta[m * n + i] -= acc;
    }
  }
  return true;
}

}  // namespace

MechResult minimize_mechanical(const Vec& y, const Vec& xz, double T, int segments,
                               const TrigPotential& xi, std::vector<double>& nodes, bool warm,
                               double tol, int max_iter) {
  const int n = xi.dim();
  const int M = segments;
  const int K = M - 1;
  const double dt = T / M;
  if (!warm) {
    nodes.resize((M + 1) * n);
    for (int m = 0; m <= M; ++m)
      for (int i = 0; i < n; ++i)
        nodes[m * n + i] = y[i] + (xz[i] - y[i]) * (static_cast<double>(m) / M);
  } else {
    for (int i = 0; i < n; ++i) {
      nodes[i] = y[i];
      nodes[M * n + i] = xz[i];
    }
  }

  MechResult res;
  res.S0 = mechanical_value(nodes, M, n, T, xi);
  if (xi.is_zero() || K <= 0) {
    // straight line is exact for the pure kinetic action
    res.converged = true;
    res.grad_inf = 0.0;
    return res;
  }

  std::vector<double> grad(K * n), D(K * n * n), O(std::max(0, K - 1) * n * n), delta;
  std::vector<double> trial(nodes.size());
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    assemble(nodes, M, n, dt, xi, grad, D, O, true);
    double ginf = 0.0;
    for (double v : grad) ginf = std::max(ginf, std::abs(v));
    res.grad_inf = ginf;
    res.iterations = it;
    if (ginf < tol) {
      res.converged = true;
      return res;
    }
    bool stepped = false;
    for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
      if (block_thomas(K, n, D, O, lambda, grad, delta)) {
        double gdot = 0.0;
        for (int i = 0; i < K * n; ++i) gdot += grad[i] * delta[i];
        if (gdot < 0.0) {
          trial = nodes;
          for (int m = 1; m < M; ++m)
            for (int i = 0; i < n; ++i) trial[m * n + i] += delta[(m - 1) * n + i];
          const double Snew = mechanical_value(trial, M, n, T, xi);
          if (Snew <= res.S0 + 1e-4 * gdot) {
            nodes.swap(trial);
            res.S0 = Snew;
            lambda *= 0.25;
            if (lambda < 1e-12) lambda = 0.0;
            stepped = true;
            break;
          }
        }
      }
      lambda = std::max(lambda * 10.0, 1e-6 / dt);
    }
    if (!stepped) {
      // Levenberg inflation exhausted; report where we stand
      res.converged = ginf < tol;
      return res;
    }
  }
  assemble(nodes, M, n, dt, xi, grad, D, O, false);
  double ginf = 0.0;
  for (double v : grad) ginf = std::max(ginf, std::abs(v));
  res.grad_inf = ginf;
  res.converged = ginf < tol;
  return res;
}

}  // namespace detail

namespace detail {

void make_initial_nodes(const Vec& y, const Vec& xz, int segments, int dim, int start,
                        std::vector<double>& nodes) {
  const int M = segments, n = dim;
  nodes.resize(static_cast<std::size_t>(M + 1) * n);
  for (int m = 0; m <= M; ++m)
    for (int i = 0; i < n; ++i)
      nodes[m * n + i] = y[i] + (xz[i] - y[i]) * (static_cast<double>(m) / M);
  if (start == 0) return;
  const double amp = 0.3 * ((start + 1) / 2) * (start % 2 == 1 ? 1.0 : -1.0);
  const double scale = amp / std::sqrt(static_cast<double>(n));
  for (int m = 1; m < M; ++m) {
    const double bump = std::sin(3.14159265358979323846 * m / M) * scale;
    for (int i = 0; i < n; ++i) nodes[m * n + i] += bump;
  }
}

void boundary_momenta(const std::vector<double>& nodes, int segments, int dim, double dt,
                      const TrigPotential& xi, Vec& p0, Vec& pT) {
  const int n = dim;
  p0.assign(n, 0.0);
  pT.assign(n, 0.0);
  Vec mid(n), g(n);
  const double* u0 = nodes.data();
  const double* u1 = u0 + n;
  for (int i = 0; i < n; ++i) mid[i] = 0.5 * (u0[i] + u1[i]);
  xi.eval_all(mid.data(), nullptr, g.data(), nullptr);
  for (int i = 0; i < n; ++i) p0[i] = (u1[i] - u0[i]) / dt + 0.5 * dt * g[i];
  const double* uM = nodes.data() + static_cast<std::size_t>(segments) * n;
  const double* uM1 = uM - n;
  for (int i = 0; i < n; ++i) mid[i] = 0.5 * (uM[i] + uM1[i]);
  xi.eval_all(mid.data(), nullptr, g.data(), nullptr);
  for (int i = 0; i < n; ++i) pT[i] = (uM[i] - uM1[i]) / dt - 0.5 * dt * g[i];
}

}  // namespace detail

namespace {

struct LiftCandidate {
  std::vector<long> z;
  double lower_bound;
};

}  // namespace

PathSolution action_general_best(const ActionQuery& q, const TrigPotential& xi, int segments,
                                 const ActionOptions& opt) {
  const int n = xi.dim();
  check_query(q, n);
  if (segments < 8) throw InvalidInputError("action_general: need at least 8 segments");
  const double T = q.T;
  const double dt = T / segments;
  const auto mx = xi.max_report();
  const double xi_upper = mx.value + mx.eps;
  double p2 = 0.0;
  for (double p : q.P) p2 += p * p;

  auto lifts = lift_window(q, xi);
  std::vector<LiftCandidate> cands;
  cands.reserve(lifts.size());
  for (auto& z : lifts) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = q.x.coords[i] + z[i] - q.y.coords[i] - T * q.P[i];
      r2 += d * d;
    }
    cands.push_back({std::move(z), r2 / (2.0 * T * T) - xi_upper});
  }
  std::sort(cands.begin(), cands.end(),
            [](const LiftCandidate& a, const LiftCandidate& b) { return a.lower_bound < b.lower_bound; });

  PathSolution best;
  best.segments = segments;
  best.action_value = std::numeric_limits<double>::infinity();
  std::vector<double> nodes, winner_nodes;
  Vec xz(n);
  for (const auto& cand : cands) {
    if (cand.lower_bound >= best.action_value - 1e-12) break;
    for (int i = 0; i < n; ++i) xz[i] = q.x.coords[i] + cand.z[i];
    double pdelta = 0.0;
    for (int i = 0; i < n; ++i) pdelta += q.P[i] * (xz[i] - q.y.coords[i]);
    const int starts = xi.is_zero() ? 1 : std::max(1, opt.starts);
    for (int s = 0; s < starts; ++s) {
      detail::make_initial_nodes(q.y.coords, xz, segments, n, s, nodes);
      auto mech = detail::minimize_mechanical(q.y.coords, xz, T, segments, xi, nodes, true,
                                              opt.tol_path, opt.max_iter);
      const double A = (mech.S0 - pdelta) / T + 0.5 * p2;
      if (A < best.action_value) {
        best.action_value = A;
        best.lift = cand.z;
        best.converged = mech.converged;
        best.el_residual = mech.grad_inf / dt;
        winner_nodes = nodes;
      }
    }
  }
  best.nodes = std::move(winner_nodes);
  detail::boundary_momenta(best.nodes, segments, n, dt, xi, best.p0, best.pT);
  return best;
}

PathSolution action_general(const ActionQuery& q, const TrigPotential& xi, int segments,
                            const ActionOptions& opt) {
  PathSolution s = action_general_best(q, xi, segments, opt);
  if (!s.converged)
    throw OptimizationFailure("action_general: no lift converged within the iteration budget",
                              s.action_value);
  return s;
}

Vec action_grad_x(const PathSolution& s, const Vec& P, double T) {
  Vec g(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) g[i] = (s.pT[i] - P[i]) / T;
  return g;
}

Vec action_grad_y(const PathSolution& s, const Vec& P, double T) {
  Vec g(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) g[i] = (P[i] - s.p0[i]) / T;
  return g;
}

}  // namespace effham

#include "effham/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "effham/errors.hpp"
#include "effham/parallel.hpp"

namespace effham {

namespace detail {

void minmax_cells(const TrigPotential& xi, const std::vector<double>& xi_nodes, const Vec& P,
                  int N, const std::vector<double>& phi, std::vector<double>& cells, int workers) {
  const int n = xi.dim();
  const double h = 1.0 / N;
  cells.resize(phi.size());
  if (n == 1) {
    par::for_index(N, [&](long k) {
      const double g = (phi[(k + 1) % N] - phi[k]) / h + P[0];
      cells[k] = 0.5 * g * g + xi_nodes[k];
    }, workers);
  } else {
    par::for_index(static_cast<long>(N) * N, [&](long e) {
      const int i = static_cast<int>(e / N), j = static_cast<int>(e % N);
      const double gx = (phi[static_cast<long>((i + 1) % N) * N + j] - phi[e]) / h + P[0];
      const double gy = (phi[static_cast<long>(i) * N + (j + 1) % N] - phi[e]) / h + P[1];
      cells[e] = 0.5 * (gx * gx + gy * gy) + xi_nodes[e];
    }, workers);
  }
}

void minmax_cells_serial(const TrigPotential& xi, const std::vector<double>& xi_nodes, const Vec& P,
                         int N, const std::vector<double>& phi, std::vector<double>& cells) {
  minmax_cells(xi, xi_nodes, P, N, phi, cells, 1);
}

double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol,
                        int max_depth, double* achieved) {
  struct Rec {
    const std::function<double(double)>& f;
    double err = 0.0;
    double run(double a, double fa, double b, double fb, double fm, double whole, double tol,
               int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        err += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
      }
      return run(a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
             run(m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
    }
  };
  Rec rec{fn};
  const double fa = fn(a), fb = fn(b), fm = fn(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double result = rec.run(a, fa, b, fb, fm, whole, tol, max_depth);
  if (achieved) *achieved = rec.err;
  return result;
}

}  // namespace detail

namespace {

double lse(const std::vector<double>& cells, double tau, double* max_out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : cells) mx = std::max(mx, v);
  double acc = 0.0;
  for (double v : cells) acc += std::exp((v - mx) / tau);
  if (max_out) *max_out = mx;
  return mx + tau * std::log(acc);
}

// Gather-form gradient of the smoothed objective: each node reads the
// softmax weights of its own cell and of the backward neighbors, so the
// parallel fill is race-free and order-independent.
void lse_gradient(const Vec& P, int N, int n, double tau, const std::vector<double>& phi,
                  const std::vector<double>& cells, double mx, double wsum,
                  std::vector<double>& grad, int workers) {
  const double h = 1.0 / N;
  grad.resize(phi.size());
  if (n == 1) {
    par::for_index(N, [&](long k) {
      const long km = (k + N - 1) % N;
      const double wk = std::exp((cells[k] - mx) / tau) / wsum;
      const double wkm = std::exp((cells[km] - mx) / tau) / wsum;
      const double gk = (phi[(k + 1) % N] - phi[k]) / h + P[0];
      const double gkm = (phi[k] - phi[km]) / h + P[0];
      grad[k] = -wk * gk / h + wkm * gkm / h;
    }, workers);
  } else {
    par::for_index(static_cast<long>(N) * N, [&](long e) {
      const int i = static_cast<int>(e / N), j = static_cast<int>(e % N);
      const long im = static_cast<long>((i + N - 1) % N) * N + j;
      const long jm = static_cast<long>(i) * N + (j + N - 1) % N;
      const double we = std::exp((cells[e] - mx) / tau) / wsum;
      const double wim = std::exp((cells[im] - mx) / tau) / wsum;
      const double wjm = std::exp((cells[jm] - mx) / tau) / wsum;
      const double gxe = (phi[static_cast<long>((i + 1) % N) * N + j] - phi[e]) / h + P[0];
      const double gye = (phi[static_cast<long>(i) * N + (j + 1) % N] - phi[e]) / h + P[1];
      const double gxim = (phi[e] - phi[im]) / h + P[0];
      const double gyjm = (phi[e] - phi[jm]) / h + P[1];
      double t = -we * gxe / h;
      t -= we * gye / h;
      t += wim * gxim / h;
      t += wjm * gyjm / h;
      grad[e] = t;
    }, workers);
  }
}

}  // namespace

MinMaxResult minmax_H(const TrigPotential& xi, const Vec& P, int N, const MinMaxOptions& opt) {
  const int n = xi.dim();
  if (n != 1 && n != 2) throw InvalidInputError("minmax_H: only dimensions 1 and 2");
  if (N < 32) throw InvalidInputError("minmax_H: N must be at least 32");
  if (static_cast<int>(P.size()) != n) throw InvalidInputError("minmax_H: P dimension mismatch");
  const long cells_count = n == 1 ? N : static_cast<long>(N) * N;
  const int workers = par::workers();

  // Xi sampled at the grid nodes; the forward-difference cell k pairs with
  // node k, matching the Dirichlet stencil.
  std::vector<double> xi_nodes(cells_count);
  Vec x(n);
  if (n == 1) {
    for (int k = 0; k < N; ++k) {
      x[0] = static_cast<double>(k) / N;
      xi_nodes[k] = xi.eval(x);
    }
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        x[0] = static_cast<double>(i) / N;
        x[1] = static_cast<double>(j) / N;
        xi_nodes[static_cast<long>(i) * N + j] = xi.eval(x);
      }
  }
  const double range = xi.certified_max() - xi.grid_min();
  const double tau_min = 1e-3 * range + 1e-6;

  MinMaxResult res;
  res.P = P;
  std::vector<double> phi(cells_count, 0.0), cells, grad, trial(cells_count);
  int total_iters = 0;
  bool all_stages_ok = true;

  double tau = 1.0;
  std::vector<double> taus;
  while (true) {
    taus.push_back(tau);
    if (tau <= tau_min) break;
    tau = std::max(tau * opt.tau_factor, tau_min);
  }
  res.tau_schedule = taus;

  std::vector<double> prev_phi, prev_grad;
  for (double t : taus) {
    detail::minmax_cells(xi, xi_nodes, P, N, phi, cells, workers);
    double mx;
    double G = lse(cells, t, &mx);
    double wsum = 0.0;
    for (double v : cells) wsum += std::exp((v - mx) / t);
    prev_phi.clear();
    prev_grad.clear();
    bool stage_ok = false;
    double alpha = 0.1;
    const int stage_cap = (t == taus.back()) ? 3 * opt.max_iter_per_stage : opt.max_iter_per_stage;
    double window_G = G;
    for (int it = 0; it < stage_cap; ++it) {
      if (it % 25 == 24) {
        // objective progress over the last window; machine-level means done
        if (window_G - G < 1e-12 * std::max(1.0, std::abs(G))) {
          stage_ok = true;
          break;
        }
        window_G = G;
      }
      ++total_iters;
      lse_gradient(P, N, n, t, phi, cells, mx, wsum, grad, workers);
      double ginf = 0.0, g2 = 0.0;
      for (double g : grad) {
        ginf = std::max(ginf, std::abs(g));
        g2 += g * g;
      }
      if (ginf < opt.grad_tol * std::max(1.0, range)) {
        stage_ok = true;
        break;
      }
      // Barzilai-Borwein step with Armijo safeguard
      if (!prev_phi.empty()) {
        double ss = 0.0, sy = 0.0;
        for (long i = 0; i < cells_count; ++i) {
          const double s = phi[i] - prev_phi[i];
          ss += s * s;
          sy += s * (grad[i] - prev_grad[i]);
        }
        if (sy > 0.0 && ss > 0.0) alpha = std::min(std::max(ss / sy, 1e-12), 1e3);
      }
      prev_phi = phi;
      prev_grad = grad;
      bool accepted = false;
      double a = alpha;
      for (int ls = 0; ls < 40; ++ls) {
        for (long i = 0; i < cells_count; ++i) trial[i] = phi[i] - a * grad[i];
        detail::minmax_cells(xi, xi_nodes, P, N, trial, cells, workers);
        double mx2;
        const double G2 = lse(cells, t, &mx2);
        if (G2 <= G - 1e-4 * a * g2) {
          phi.swap(trial);
          G = G2;
          mx = mx2;
          wsum = 0.0;
          for (double v : cells) wsum += std::exp((v - mx) / t);
          accepted = true;
          break;
        }
        a *= 0.5;
      }
      if (!accepted) {
        // descent exhausted at this temperature; treat as converged-enough
        stage_ok = ginf < 1e-5 * std::max(1.0, range);
        break;
      }
    }
    all_stages_ok = all_stages_ok && stage_ok;
  }

  detail::minmax_cells(xi, xi_nodes, P, N, phi, cells, workers);
  double mx;
  res.H_smoothed = lse(cells, taus.back(), &mx);
  res.H_upper = mx;
  res.iterations = total_iters;
  res.converged = all_stages_ok;
  return res;
}

Quadrature1DResult oracle_1d(const TrigPotential& xi, double P, double tol_root) {
  if (xi.dim() != 1) throw InvalidInputError("oracle_1d: potential must be one-dimensional");
  const double Pa = std::abs(P);  // E is even in P
  const double M = xi.certified_max();

  auto g_of = [&](double E) {
    double achieved = 0.0;
    Vec x(1);
    const double val = detail::adaptive_simpson(
        [&](double t) {
          x[0] = t;
          return std::sqrt(std::max(0.0, 2.0 * (E - xi.eval(x))));
        },
        0.0, 1.0, 1e-12, 36, &achieved);
    if (achieved > 1e-8)
      throw SolverFailure("oracle_1d: quadrature did not reach tolerance near the turning point",
                          achieved, 0);
    return val;
  };

  Quadrature1DResult res;
  res.P = P;
  res.P_c = g_of(M);
  if (Pa <= res.P_c) {
    res.E = M;
    res.plateau = true;
    return res;
  }
  double lo = M, hi = M + 0.5 * Pa * Pa + 1.0;
  // g is increasing in E; bisect until the momentum residual is tiny
  double E = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    E = 0.5 * (lo + hi);
    const double g = g_of(E);
    if (std::abs(g - Pa) < tol_root) break;
    if (g < Pa) lo = E;
    else hi = E;
    if (hi - lo < 1e-15 * (1.0 + std::abs(hi))) break;
  }
  if (std::abs(g_of(E) - Pa) > 100 * tol_root)
    throw SolverFailure("oracle_1d: root solve stalled", std::abs(g_of(E) - Pa), 200);
  res.E = E;
  res.plateau = false;
  return res;
}

}  // namespace effham

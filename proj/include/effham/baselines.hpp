#pragma once

#include <functional>
#include <vector>

#include "effham/potential.hpp"
#include "effham/torus.hpp"

namespace effham {

/// Smoothed min-max estimate of the effective Hamiltonian on a grid.
/// H_upper is the exact discrete max at the final iterate, a certified upper
/// bound for the grid problem; the smoothing gap obeys
/// H_smoothed <= H_upper + tau * log(#cells).
struct MinMaxResult {
  Vec P;
  double H_upper = 0.0;
  double H_smoothed = 0.0;
  int iterations = 0;
  std::vector<double> tau_schedule;
  bool converged = false;
};

struct MinMaxOptions {
  double tau_factor = 0.5;       // geometric temperature continuation
  int max_iter_per_stage = 1200;
  double grad_tol = 1e-9;
};

/// inf_phi sup_x [ (1/2)|grad phi + P|^2 + Xi ] on the N-per-axis grid,
/// forward differences, log-sum-exp smoothing with temperature continuation
/// from 1 down to 1e-3 * range(Xi) + 1e-6.
MinMaxResult minmax_H(const TrigPotential& xi, const Vec& P, int N, const MinMaxOptions& opt = {});

/// 1-D quadrature oracle from the periodic Hamilton-Jacobi level condition:
/// P = integral sqrt(2(E - Xi)) with E >= max Xi; below the critical momentum
/// P_c the energy sticks to the plateau E = max Xi.
struct Quadrature1DResult {
  double P = 0.0;
  double E = 0.0;
  bool plateau = false;
  double P_c = 0.0;
};

Quadrature1DResult oracle_1d(const TrigPotential& xi, double P, double tol_root = 1e-10);

namespace detail {
/// Cell energies h_k for a given phi; parallel and serial variants agree
/// bitwise (used by the kernel tests and the benchmark).
void minmax_cells(const TrigPotential& xi, const std::vector<double>& xi_nodes, const Vec& P,
                  int N, const std::vector<double>& phi, std::vector<double>& cells, int workers);
void minmax_cells_serial(const TrigPotential& xi, const std::vector<double>& xi_nodes, const Vec& P,
                         int N, const std::vector<double>& phi, std::vector<double>& cells);

/// Adaptive Simpson integral of fn over [a,b] to absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol,
                        int max_depth, double* achieved = nullptr);
}  // namespace detail

}  // namespace effham

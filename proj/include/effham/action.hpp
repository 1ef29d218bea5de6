#pragma once

#include <vector>

#include "effham/potential.hpp"
#include "effham/torus.hpp"

namespace effham {

/// Endpoint data for one normalized-action evaluation A_P(y, x, T).
struct ActionQuery {
  TorusPoint y;  // x(0)
  TorusPoint x;  // x(T)
  double T = 1.0;
  Vec P;
};

/// Discrete minimizing path for one endpoint lift. Nodes live in the
/// universal cover: nodes[0] = y, nodes[M] = x + lift.
struct PathSolution {
  std::vector<long> lift;
  std::vector<double> nodes;  // (segments+1) * dim, row-major
  int segments = 0;
  double action_value = 0.0;
  Vec p0, pT;  // discrete boundary velocities of the mechanical path
  bool converged = false;
  double el_residual = 0.0;  // max interior Euler-Lagrange defect
};

struct ActionOptions {
  int starts = 3;          // jittered initializations per lift
  double tol_path = 1e-8;  // inf-norm of the interior gradient
  int max_iter = 120;
};

/// Closed form for Xi == 0: |x - y - T P|^2 / (2 T^2) in the torus metric.
double action_zero_potential(const ActionQuery& q);

/// Integer endpoint lifts that can carry the minimizer: the box of radius
/// ceil(T*sqrt(2*(max Xi - min Xi))) + 1 around x - y + T*P. Anything outside
/// pays more kinetic energy than the in-window straight line can lose.
std::vector<std::vector<long>> lift_window(const ActionQuery& q, const TrigPotential& xi);

/// Full evaluation: minimize the mechanical action per candidate lift
/// (damped Newton on piecewise-linear paths, midpoint quadrature), assemble
/// A = (1/T)(S0 - P.(x+z-y)) + |P|^2/2 and keep the best lift.
/// Throws OptimizationFailure when no lift converges.
PathSolution action_general(const ActionQuery& q, const TrigPotential& xi, int segments,
                            const ActionOptions& opt = {});

/// Same search, but returns the best effort with converged=false instead of
/// throwing; callers that aggregate many evaluations handle failures in bulk.
PathSolution action_general_best(const ActionQuery& q, const TrigPotential& xi, int segments,
                                 const ActionOptions& opt = {});

/// d/dx and d/dy of the action at a converged solution, from the boundary
/// momenta: dA/dx = (pT - P)/T, dA/dy = (P - p0)/T.
Vec action_grad_x(const PathSolution& s, const Vec& P, double T);
Vec action_grad_y(const PathSolution& s, const Vec& P, double T);

namespace detail {

/// Minimizer of the P-independent mechanical action
/// S0 = sum |u_{m+1}-u_m|^2/(2 dt) - dt * Xi(midpoint) between fixed
/// endpoints in R^n. `nodes` doubles as initialization when warm=true.
struct MechResult {
  double S0 = 0.0;
  bool converged = false;
  double grad_inf = 0.0;
  int iterations = 0;
};

MechResult minimize_mechanical(const Vec& y, const Vec& xz, double T, int segments,
                               const TrigPotential& xi, std::vector<double>& nodes, bool warm,
                               double tol, int max_iter);

/// start 0: straight line; start k >= 1: line plus a half-period sine bump of
/// alternating sign and growing amplitude. Deterministic by construction.
void make_initial_nodes(const Vec& y, const Vec& xz, int segments, int dim, int start,
                        std::vector<double>& nodes);

/// Discrete boundary velocities of a mechanical path (second-order accurate).
void boundary_momenta(const std::vector<double>& nodes, int segments, int dim, double dt,
                      const TrigPotential& xi, Vec& p0, Vec& pT);

double mechanical_value(const std::vector<double>& nodes, int segments, int dim, double T,
                        const TrigPotential& xi);

}  // namespace detail

}  // namespace effham

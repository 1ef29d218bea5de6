#pragma once

#include <vector>

#include "effham/potential.hpp"
#include "effham/torus.hpp"

namespace effham {

/// Scalar field on the uniform periodic grid x_k = k/N (row-major in 2-D).
struct GridField {
  int dim = 1;
  int N = 0;
  std::vector<double> values;
  double h() const { return 1.0 / N; }
  long size() const {
    long s = 1;
    for (int d = 0; d < dim; ++d) s *= N;
    return s;
  }
};

/// Probability density on the grid: values >= rho_min, mean exactly
/// normalized to 1 (so the discrete measure integrates to 1).
struct DensityField {
  GridField grid;
  double rho_min = 1e-8;
};

/// Sample a trigonometric density; throws InvalidInputError unless it is
/// strictly positive. Values are renormalized to unit mean.
DensityField density_from_trig(const TrigPotential& rho, int N);

/// Raw grid values: negatives and zeros are floored at rho_min, then the
/// field is renormalized.
DensityField density_from_values(int dim, int N, std::vector<double> values,
                                 double rho_min = 1e-8);

struct EllipticSolution {
  GridField phi;  // zero-mean gauge
  double residual = 0.0;
  int iterations = 0;
};

/// Finite-volume solve of div[rho (grad phi + P)] = 0 with harmonic-mean face
/// weights, Jacobi-preconditioned CG restricted to zero-mean fields.
/// Throws SolverFailure when the relative residual stays above `tol`.
EllipticSolution solve_elliptic(const DensityField& rho, const Vec& P, double tol = 1e-10,
                                int max_iter = 0);

/// F(rho, P) = (1/2) inf_phi int |grad phi + P|^2 rho: the face-weighted
/// discrete energy at the solved phi, which is the discrete minimum.
double F_value(const DensityField& rho, const Vec& P, double tol = 1e-10);

/// Mean momentum J = int rho (grad phi + P): the discrete flux average, which
/// equals the gradient of F_value in P by the envelope theorem.
Vec rotation_vector(const DensityField& rho, const Vec& P, double tol = 1e-10);

/// calE(rho, J, phi) = (1/2){ |J - int grad phi d rho|^2 - int |grad phi|^2 d rho }.
double calE_value(const DensityField& rho, const Vec& J, const GridField& phi);

/// Regular lattice of P values, per axis.
struct PLattice {
  Vec start, end;
  std::vector<int> count;
};

/// Legendre transform F*(rho, J) = sup_P [P.J - F(rho,P)] over the lattice,
/// refined by a per-axis quadratic fit. Throws GridTooSmallError when the
/// lattice maximizer sits on the boundary.
double legendre_F(const DensityField& rho, const Vec& J, const PLattice& lattice,
                  double tol = 1e-10);

namespace detail {
/// A phi = -div(w grad phi) with harmonic-mean face weights; parallel and
/// serial variants produce bit-identical output.
void apply_elliptic_operator(const DensityField& rho, const std::vector<double>& phi,
                             std::vector<double>& out, int workers);
void apply_elliptic_operator_serial(const DensityField& rho, const std::vector<double>& phi,
                                    std::vector<double>& out);
}  // namespace detail

}  // namespace effham

#include "effham/dirichlet.hpp"

#include <algorithm>
#include <cmath>

#include "effham/errors.hpp"
#include "effham/parallel.hpp"

namespace effham {

namespace {

void validate_grid(int dim, int N) {
  if (dim != 1 && dim != 2) throw InvalidInputError("grid: only dimensions 1 and 2 are supported");
  if (N < 2) throw InvalidInputError("grid: N must be at least 2");
}

void normalize(DensityField& f) {
  double mean = 0.0;
  for (double v : f.grid.values) mean += v;
  mean /= f.grid.values.size();
  if (!(mean > 0.0)) throw InvalidInputError("density: nonpositive mass");
  for (double& v : f.grid.values) v /= mean;
}

// Harmonic-mean face weights along each axis; preserves the exact
// constant-flux structure of the 1-D problem.
struct Faces {
  std::vector<double> w[2];
};

Faces face_weights(const DensityField& rho) {
  Faces f;
  const int N = rho.grid.N;
  const auto& v = rho.grid.values;
  auto harm = [](double a, double b) { return 2.0 * a * b / (a + b); };
  if (rho.grid.dim == 1) {
    f.w[0].resize(N);
    for (int k = 0; k < N; ++k) f.w[0][k] = harm(v[k], v[(k + 1) % N]);
  } else {
    f.w[0].resize(static_cast<std::size_t>(N) * N);
    f.w[1].resize(static_cast<std::size_t>(N) * N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        f.w[0][static_cast<std::size_t>(i) * N + j] =
            harm(v[static_cast<std::size_t>(i) * N + j], v[static_cast<std::size_t>((i + 1) % N) * N + j]);
        f.w[1][static_cast<std::size_t>(i) * N + j] =
            harm(v[static_cast<std::size_t>(i) * N + j], v[static_cast<std::size_t>(i) * N + (j + 1) % N]);
      }
  }
  return f;
}

void apply_operator(const DensityField& rho, const Faces& f, const std::vector<double>& phi,
                    std::vector<double>& out, int workers) {
  const int N = rho.grid.N;
  const double inv_h2 = static_cast<double>(N) * N;
  if (rho.grid.dim == 1) {
    par::for_index(N, [&](long k) {
      const int km = static_cast<int>((k + N - 1) % N), kp = static_cast<int>((k + 1) % N);
      out[k] = (f.w[0][km] * (phi[k] - phi[km]) + f.w[0][k] * (phi[k] - phi[kp])) * inv_h2;
    }, workers);
  } else {
    par::for_index(static_cast<long>(N) * N, [&](long e) {
      const int i = static_cast<int>(e / N), j = static_cast<int>(e % N);
      const long im = static_cast<long>((i + N - 1) % N) * N + j;
      const long ip = static_cast<long>((i + 1) % N) * N + j;
      const long jm = static_cast<long>(i) * N + (j + N - 1) % N;
      const long jp = static_cast<long>(i) * N + (j + 1) % N;
      out[e] = (f.w[0][im] * (phi[e] - phi[im]) + f.w[0][e] * (phi[e] - phi[ip]) +
                f.w[1][jm] * (phi[e] - phi[jm]) + f.w[1][e] * (phi[e] - phi[jp])) *
               inv_h2;
    }, workers);
  }
}

std::vector<double> divergence_rhs(const DensityField& rho, const Faces& f, const Vec& P) {
  const int N = rho.grid.N;
  const double inv_h = N;
  std::vector<double> b(rho.grid.size(), 0.0);
  if (rho.grid.dim == 1) {
    for (int k = 0; k < N; ++k) {
      const int km = (k + N - 1) % N;
      b[k] = (f.w[0][k] - f.w[0][km]) * P[0] * inv_h;
    }
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const long e = static_cast<long>(i) * N + j;
        const long im = static_cast<long>((i + N - 1) % N) * N + j;
        const long jm = static_cast<long>(i) * N + (j + N - 1) % N;
        b[e] = ((f.w[0][e] - f.w[0][im]) * P[0] + (f.w[1][e] - f.w[1][jm]) * P[1]) * inv_h;
      }
  }
  return b;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void remove_mean(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  for (double& x : v) x -= m;
}

EllipticSolution solve_with_faces(const DensityField& rho, const Faces& f, const Vec& P,
                                  double tol, int max_iter) {
  const long size = rho.grid.size();
  const int N = rho.grid.N;
  EllipticSolution sol;
  sol.phi.dim = rho.grid.dim;
  sol.phi.N = N;
  sol.phi.values.assign(size, 0.0);
  if (static_cast<int>(P.size()) != rho.grid.dim)
    throw InvalidInputError("solve_elliptic: P dimension mismatch");

  std::vector<double> b = divergence_rhs(rho, f, P);
  remove_mean(b);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return sol;

  // Jacobi diagonal
  std::vector<double> diag(size, 0.0);
  const double inv_h2 = static_cast<double>(N) * N;
  if (rho.grid.dim == 1) {
    for (int k = 0; k < N; ++k) diag[k] = (f.w[0][(k + N - 1) % N] + f.w[0][k]) * inv_h2;
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const long e = static_cast<long>(i) * N + j;
        diag[e] = (f.w[0][static_cast<long>((i + N - 1) % N) * N + j] + f.w[0][e] +
                   f.w[1][static_cast<long>(i) * N + (j + N - 1) % N] + f.w[1][e]) *
                  inv_h2;
      }
  }

  if (max_iter <= 0) max_iter = 40 * N + 200;
  const int workers = par::workers();
  std::vector<double> r(size), z(size), p(size), Ap(size);
  auto& phi = sol.phi.values;
  int total_iters = 0;
  double true_res = 1.0;
  // outer restarts guard against recursion-residual drift near the target
  for (int outer = 0; outer < 4 && total_iters < max_iter; ++outer) {
    apply_operator(rho, f, phi, Ap, workers);
    for (long i = 0; i < size; ++i) r[i] = b[i] - Ap[i];
    remove_mean(r);
    true_res = std::sqrt(dot(r, r)) / bnorm;
    if (true_res < tol) break;
    for (long i = 0; i < size; ++i) z[i] = r[i] / diag[i];
    remove_mean(z);
    p = z;
    double rz = dot(r, z);
    const double inner_target = 0.1 * tol;
    for (; total_iters < max_iter; ++total_iters) {
      apply_operator(rho, f, p, Ap, workers);
      const double pAp = dot(p, Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      for (long i = 0; i < size; ++i) phi[i] += alpha * p[i];
      for (long i = 0; i < size; ++i) r[i] -= alpha * Ap[i];
      remove_mean(r);
      if (std::sqrt(dot(r, r)) / bnorm < inner_target) {
        ++total_iters;
        break;
      }
      for (long i = 0; i < size; ++i) z[i] = r[i] / diag[i];
      remove_mean(z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      for (long i = 0; i < size; ++i) p[i] = z[i] + beta * p[i];
      rz = rz_new;
    }
  }
  remove_mean(phi);
  apply_operator(rho, f, phi, Ap, workers);
  for (long i = 0; i < size; ++i) Ap[i] = b[i] - Ap[i];
  sol.residual = std::sqrt(dot(Ap, Ap)) / bnorm;
  sol.iterations = total_iters;
  if (sol.residual > tol)
    throw SolverFailure("solve_elliptic: CG stalled above the requested residual", sol.residual,
                        sol.iterations);
  return sol;
}

// Face-weighted energy (1/2)(1/N^n) sum w (grad phi + P)^2: the quantity the
// solve minimizes, so it is the discrete F.
double energy(const DensityField& rho, const Faces& f, const GridField& phi, const Vec& P) {
  const int N = rho.grid.N;
  const double h = 1.0 / N;
  double acc = 0.0;
  if (rho.grid.dim == 1) {
    for (int k = 0; k < N; ++k) {
      const double g = (phi.values[(k + 1) % N] - phi.values[k]) / h + P[0];
      acc += f.w[0][k] * g * g;
    }
    return 0.5 * acc / N;
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const long e = static_cast<long>(i) * N + j;
      const double gx = (phi.values[static_cast<long>((i + 1) % N) * N + j] - phi.values[e]) / h + P[0];
      const double gy = (phi.values[static_cast<long>(i) * N + (j + 1) % N] - phi.values[e]) / h + P[1];
      acc += f.w[0][e] * gx * gx + f.w[1][e] * gy * gy;
    }
  return 0.5 * acc / (static_cast<double>(N) * N);
}

}  // namespace

DensityField density_from_trig(const TrigPotential& rho, int N) {
  validate_grid(rho.dim(), N);
  DensityField f;
  f.grid.dim = rho.dim();
  f.grid.N = N;
  f.grid.values.resize(f.grid.size());
  Vec x(rho.dim());
  if (rho.dim() == 1) {
    for (int k = 0; k < N; ++k) {
      x[0] = static_cast<double>(k) / N;
      f.grid.values[k] = rho.eval(x);
    }
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        x[0] = static_cast<double>(i) / N;
        x[1] = static_cast<double>(j) / N;
        f.grid.values[static_cast<long>(i) * N + j] = rho.eval(x);
      }
  }
  const double mn = *std::min_element(f.grid.values.begin(), f.grid.values.end());
  if (!(mn > 0.0)) throw InvalidInputError("density_from_trig: density is not strictly positive");
  for (double& v : f.grid.values) v = std::max(v, f.rho_min);
  normalize(f);
  return f;
}

DensityField density_from_values(int dim, int N, std::vector<double> values, double rho_min) {
  validate_grid(dim, N);
  DensityField f;
  f.rho_min = rho_min;
  f.grid.dim = dim;
  f.grid.N = N;
  if (static_cast<long>(values.size()) != f.grid.size())
    throw InvalidInputError("density_from_values: value count does not match N^dim");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInputError("density_from_values: non-finite value");
  f.grid.values = std::move(values);
  for (double& v : f.grid.values) v = std::max(v, rho_min);
  normalize(f);
  return f;
}

EllipticSolution solve_elliptic(const DensityField& rho, const Vec& P, double tol, int max_iter) {
  return solve_with_faces(rho, face_weights(rho), P, tol, max_iter);
}

double F_value(const DensityField& rho, const Vec& P, double tol) {
  const Faces f = face_weights(rho);
  const EllipticSolution sol = solve_with_faces(rho, f, P, tol, 0);
  return energy(rho, f, sol.phi, P);
}

Vec rotation_vector(const DensityField& rho, const Vec& P, double tol) {
  const Faces f = face_weights(rho);
  const EllipticSolution sol = solve_with_faces(rho, f, P, tol, 0);
  const int N = rho.grid.N;
  const double h = 1.0 / N;
  Vec J(rho.grid.dim, 0.0);
  if (rho.grid.dim == 1) {
    for (int k = 0; k < N; ++k)
      J[0] += f.w[0][k] * ((sol.phi.values[(k + 1) % N] - sol.phi.values[k]) / h + P[0]);
    J[0] /= N;
    return J;
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const long e = static_cast<long>(i) * N + j;
      J[0] += f.w[0][e] * ((sol.phi.values[static_cast<long>((i + 1) % N) * N + j] - sol.phi.values[e]) / h + P[0]);
      J[1] += f.w[1][e] * ((sol.phi.values[static_cast<long>(i) * N + (j + 1) % N] - sol.phi.values[e]) / h + P[1]);
    }
  J[0] /= static_cast<double>(N) * N;
  J[1] /= static_cast<double>(N) * N;
  return J;
}

double calE_value(const DensityField& rho, const Vec& J, const GridField& phi) {
  if (phi.dim != rho.grid.dim || phi.N != rho.grid.N)
    throw InvalidInputError("calE_value: phi grid mismatch");
  if (static_cast<int>(J.size()) != rho.grid.dim)
    throw InvalidInputError("calE_value: J dimension mismatch");
  const Faces f = face_weights(rho);
  const int N = rho.grid.N;
  const double h = 1.0 / N;
  const double cells = static_cast<double>(phi.size());
  Vec S(rho.grid.dim, 0.0);
  double Q = 0.0;
  if (rho.grid.dim == 1) {
    for (int k = 0; k < N; ++k) {
      const double g = (phi.values[(k + 1) % N] - phi.values[k]) / h;
      S[0] += f.w[0][k] * g;
      Q += f.w[0][k] * g * g;
    }
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const long e = static_cast<long>(i) * N + j;
        const double gx = (phi.values[static_cast<long>((i + 1) % N) * N + j] - phi.values[e]) / h;
        const double gy = (phi.values[static_cast<long>(i) * N + (j + 1) % N] - phi.values[e]) / h;
        S[0] += f.w[0][e] * gx;
        S[1] += f.w[1][e] * gy;
        Q += f.w[0][e] * gx * gx + f.w[1][e] * gy * gy;
      }
  }
  double jms = 0.0;
  for (std::size_t a = 0; a < J.size(); ++a) {
    const double d = J[a] - S[a] / cells;
    jms += d * d;
  }
  return 0.5 * (jms - Q / cells);
}

double legendre_F(const DensityField& rho, const Vec& J, const PLattice& lattice, double tol) {
  const int n = rho.grid.dim;
  if (static_cast<int>(J.size()) != n || static_cast<int>(lattice.start.size()) != n ||
      static_cast<int>(lattice.end.size()) != n || static_cast<int>(lattice.count.size()) != n)
    throw InvalidInputError("legendre_F: lattice dimension mismatch");
  for (int c : lattice.count)
    if (c < 1) throw InvalidInputError("legendre_F: lattice count must be >= 1");

  const Faces f = face_weights(rho);
  auto g_of = [&](const Vec& P) {
    const EllipticSolution sol = solve_with_faces(rho, f, P, tol, 0);
    double pj = 0.0;
    for (int a = 0; a < n; ++a) pj += P[a] * J[a];
    return pj - energy(rho, f, sol.phi, P);
  };
  auto coord = [&](int axis, int idx) {
    if (lattice.count[axis] == 1) return lattice.start[axis];
    return lattice.start[axis] +
           (lattice.end[axis] - lattice.start[axis]) * idx / (lattice.count[axis] - 1);
  };

  long total = 1;
  for (int c : lattice.count) total *= c;
  std::vector<double> gv(total);
  std::vector<int> idx(n, 0);
  long best = 0;
  for (long e = 0; e < total; ++e) {
    long rem = e;
    Vec P(n);
    for (int a = n - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % lattice.count[a]);
      rem /= lattice.count[a];
      P[a] = coord(a, idx[a]);
    }
    gv[e] = g_of(P);
    if (gv[e] > gv[best]) best = e;
  }
  // decode the argmax index and reject boundary maximizers
  std::vector<int> bidx(n);
  {
    long rem = best;
    for (int a = n - 1; a >= 0; --a) {
      bidx[a] = static_cast<int>(rem % lattice.count[a]);
      rem /= lattice.count[a];
    }
  }
  Vec Pstar(n);
  for (int a = 0; a < n; ++a) {
    if (lattice.count[a] > 1 && (bidx[a] == 0 || bidx[a] == lattice.count[a] - 1))
      throw GridTooSmallError("legendre_F: maximizer on the lattice boundary; widen the P lattice");
    Pstar[a] = coord(a, bidx[a]);
  }

  double result = gv[best];
  // per-axis parabola through the lattice neighbors of the maximizer
  Vec Phat = Pstar;
  bool refined = false;
  for (int a = 0; a < n; ++a) {
    if (lattice.count[a] < 3) continue;
    long stride = 1;
    for (int b = n - 1; b > a; --b) stride *= lattice.count[b];
    const double g0 = gv[best - stride], g1 = gv[best], g2 = gv[best + stride];
    const double denom = g0 - 2.0 * g1 + g2;
    if (!(denom < 0.0)) continue;
    const double step = (lattice.end[a] - lattice.start[a]) / (lattice.count[a] - 1);
    Phat[a] = Pstar[a] + 0.5 * step * (g0 - g2) / denom;
    refined = true;
  }
  if (refined) result = std::max(result, g_of(Phat));
  return result;
}

namespace detail {

void apply_elliptic_operator(const DensityField& rho, const std::vector<double>& phi,
                             std::vector<double>& out, int workers) {
  out.resize(phi.size());
  apply_operator(rho, face_weights(rho), phi, out, workers);
}

void apply_elliptic_operator_serial(const DensityField& rho, const std::vector<double>& phi,
                                    std::vector<double>& out) {
  out.resize(phi.size());
  apply_operator(rho, face_weights(rho), phi, out, 1);
}

}  // namespace detail

}  // namespace effham

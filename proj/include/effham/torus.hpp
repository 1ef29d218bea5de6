#pragma once

#include <vector>

namespace effham {

using Vec = std::vector<double>;

/// Point on the flat torus; every coordinate lies in [0,1).
struct TorusPoint {
  Vec coords;
  int dim() const { return static_cast<int>(coords.size()); }
};

/// Minimal-norm representative of a difference vector: each component in
/// [-1/2, 1/2], norm equal to the Euclidean norm of `vector`.
struct TorusDisplacement {
  Vec vector;
  double norm = 0.0;
  int dim() const { return static_cast<int>(vector.size()); }
};

/// Componentwise v - floor(v). Throws InvalidInputError on non-finite input.
TorusPoint canonicalize(const Vec& v);

/// Minimal representative of x - y - shift over integer lifts. Ties between
/// equidistant lifts resolve to the lexicographically smallest displacement
/// vector (so exact half-integers map to -1/2).
TorusDisplacement min_displacement(const TorusPoint& x, const TorusPoint& y, const Vec& shift);
TorusDisplacement min_displacement(const TorusPoint& x, const TorusPoint& y);

/// Minimal representative of v itself; equals
/// min_displacement(canonicalize(v), origin, 0).
TorusDisplacement fractional_part(const Vec& v);

/// Torus metric min_z |x - y - z|.
double torus_distance(const TorusPoint& x, const TorusPoint& y);

}  // namespace effham

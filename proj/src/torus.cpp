#include "effham/torus.hpp"

#include <cmath>
#include <stdexcept>

#include "effham/errors.hpp"

namespace effham {

TorusPoint canonicalize(const Vec& v) {
  TorusPoint p;
  p.coords.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw InvalidInputError("canonicalize: non-finite coordinate");
    double r = v[i] - std::floor(v[i]);
    if (r >= 1.0) r = 0.0;  // rounding can push x - floor(x) to exactly 1
    p.coords[i] = r;
  }
  return p;
}

namespace {

// Nearest-integer reduction of one component; half-integers round up so the
// representative is -1/2, the lexicographically smaller of the tied pair.
inline double reduce_component(double d) {
  double z = std::floor(d + 0.5);
  double r = d - z;
  if (r > 0.5) r = d - (z + 1.0);
  if (r < -0.5) r = d - (z - 1.0);
  return r;
}

}  // namespace

TorusDisplacement min_displacement(const TorusPoint& x, const TorusPoint& y, const Vec& shift) {
  const std::size_t n = x.coords.size();
  if (y.coords.size() != n || shift.size() != n)
    throw InvalidInputError("min_displacement: dimension mismatch");
  TorusDisplacement d;
  d.vector.resize(n);
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(shift[i])) throw InvalidInputError("min_displacement: non-finite shift");
    const double r = reduce_component(x.coords[i] - y.coords[i] - shift[i]);
    d.vector[i] = r;
    s2 += r * r;
  }
  d.norm = std::sqrt(s2);
  return d;
}

TorusDisplacement min_displacement(const TorusPoint& x, const TorusPoint& y) {
  return min_displacement(x, y, Vec(x.coords.size(), 0.0));
}

TorusDisplacement fractional_part(const Vec& v) {
  const TorusPoint p = canonicalize(v);
  TorusDisplacement d;
  d.vector.resize(v.size());
  double s2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = reduce_component(p.coords[i]);
    d.vector[i] = r;
    s2 += r * r;
  }
  d.norm = std::sqrt(s2);
  return d;
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  return min_displacement(x, y).norm;
}

}  // namespace effham

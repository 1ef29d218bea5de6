#include "effham/sampling.hpp"

#include <cmath>

#include "effham/errors.hpp"

namespace effham {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// CDF(x) = x + sum_k [a sin(2 pi k x) + b (1 - cos(2 pi k x))] / (2 pi k)
double cdf1(const TrigPotential& rho, double x) {
  double acc = x;
  for (const auto& m : rho.modes()) {
    const int k = m.k[0];
    if (k == 0) continue;
    const double w = kTwoPi * k;
    acc += (m.a * std::sin(w * x) + m.b * (1.0 - std::cos(w * x))) / w;
  }
  return acc;
}

}  // namespace

std::vector<TorusPoint> sample_trig_density(const TrigPotential& rho, int count, Rng& rng,
                                            const std::string& density_name) {
  const TrigPotential unit = normalize_trig_density(rho);
  if (!(unit.min_report().value > 0.0))
    throw InvalidInputError("sample_trig_density: density '" + density_name +
                            "' is not strictly positive");
  std::vector<TorusPoint> out;
  out.reserve(count);
  if (rho.dim() == 1) {
    Vec x(1);
    for (int s = 0; s < count; ++s) {
      const double u = rng.uniform();
      // bisection with Newton polish; CDF' = rho > 0
      double lo = 0.0, hi = 1.0, t = u;
      for (int it = 0; it < 80; ++it) {
        const double c = cdf1(unit, t);
        if (std::abs(c - u) < 1e-14) break;
        if (c < u) lo = t;
        else hi = t;
        x[0] = t;
        const double d = unit.eval(x);
        double tn = t - (c - u) / d;
        if (!(tn > lo) || !(tn < hi)) tn = 0.5 * (lo + hi);
        t = tn;
      }
      out.push_back(canonicalize({t}));
    }
    return out;
  }
  if (rho.dim() == 2) {
    const auto mx = unit.max_report();
    const double bound = mx.value + mx.eps + 1e-12;
    Vec x(2);
    for (int s = 0; s < count; ++s) {
      bool accepted = false;
      for (long attempt = 0; attempt < 100000; ++attempt) {
        x[0] = rng.uniform();
        x[1] = rng.uniform();
        const double u = rng.uniform() * bound;
        if (u <= unit.eval(x)) {
          out.push_back(canonicalize(x));
          accepted = true;
          break;
        }
      }
      if (!accepted)
        throw SamplingError("sample_trig_density: rejection budget exceeded for density '" +
                            density_name + "'");
    }
    return out;
  }
  throw InvalidInputError("sample_trig_density: only dimensions 1 and 2 are supported");
}

TrigPotential normalize_trig_density(const TrigPotential& rho) {
  double a0 = 0.0;
  for (const auto& m : rho.modes()) {
    bool zero = true;
    for (int c : m.k) zero = zero && c == 0;
    if (zero) a0 = m.a;
  }
  if (!(a0 > 0.0))
    throw InvalidInputError("normalize_trig_density: density needs a positive mean mode");
  std::vector<TrigMode> scaled = rho.modes();
  for (auto& m : scaled) {
    m.a /= a0;
    m.b /= a0;
  }
  return TrigPotential(rho.dim(), scaled);
}

double trig_inner_product(const TrigPotential& xi, const TrigPotential& rho) {
  if (xi.dim() != rho.dim()) throw InvalidInputError("trig_inner_product: dimension mismatch");
  // modes are canonical (k = 0 or leading component positive), so matching
  // frequencies pair up directly: int cos^2 = int sin^2 = 1/2, cross terms 0
  double acc = 0.0;
  for (const auto& mx : xi.modes()) {
    bool x_zero = true;
    for (int c : mx.k) x_zero = x_zero && c == 0;
    for (const auto& mr : rho.modes()) {
      if (mx.k != mr.k) continue;
      if (x_zero) acc += mx.a * mr.a;
      else acc += 0.5 * (mx.a * mr.a + mx.b * mr.b);
    }
  }
  return acc;
}

}  // namespace effham

#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "effham/torus.hpp"

namespace effham {

/// One Fourier mode: a*cos(2*pi*k.x) + b*sin(2*pi*k.x).
struct TrigMode {
  std::vector<int> k;
  double a = 0.0;
  double b = 0.0;
};

/// Certified bracket for a global extremum: the attained value together with
/// the Lipschitz slack of the scan grid, so max Xi <= value + eps (and
/// min Xi >= value - eps for the minimum).
struct CertifiedExtremum {
  double value = 0.0;
  double eps = 0.0;
};

/// Real trigonometric polynomial on the torus. Modes are stored in canonical
/// sign (k = 0 or first nonzero component positive); construction folds the
/// redundant -k representation and rejects |k|_inf beyond kMaxFrequency.
/// Immutable after construction and safe for concurrent evaluation.
class TrigPotential {
public:
  static constexpr int kMaxFrequency = 128;

  TrigPotential(int dim, std::vector<TrigMode> modes);
  static TrigPotential zero(int dim) { return TrigPotential(dim, {}); }

  int dim() const { return dim_; }
  const std::vector<TrigMode>& modes() const { return modes_; }
  bool is_zero() const { return modes_.empty(); }

  double eval(const Vec& x) const;
  double eval(const TorusPoint& x) const { return eval(x.coords); }
  Vec grad(const Vec& x) const;
  /// Row-major dim x dim second derivative.
  void hess(const Vec& x, double* out) const;
  /// Fused value/gradient/Hessian sharing one sincos per mode; any output
  /// pointer may be null. `x` points at dim() doubles.
  void eval_all(const double* x, double* value, double* grad, double* hess) const;

  /// Best attained maximum from a dense scan plus local ascent.
  double certified_max() const { return max_report().value; }
  CertifiedExtremum max_report() const;
  /// Best attained minimum, same machinery running downhill.
  double grid_min() const { return min_report().value; }
  CertifiedExtremum min_report() const;

  /// 2*pi * sum |k| (|a|+|b|): global Lipschitz constant of eval.
  double lipschitz_bound() const;

private:
  struct ExtremaCache {
    std::once_flag once;
    CertifiedExtremum mx, mn;
  };

  void compute_extrema() const;
  double polish(Vec x, double sign) const;

  int dim_;
  std::vector<TrigMode> modes_;
  std::shared_ptr<ExtremaCache> cache_;  // shared across copies; modes are immutable
};

}  // namespace effham

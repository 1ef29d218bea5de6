#include "effham/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "effham/errors.hpp"

namespace effham {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

TrigPotential::TrigPotential(int dim, std::vector<TrigMode> modes)
    : dim_(dim), cache_(std::make_shared<ExtremaCache>()) {
  if (dim < 1) throw InvalidInputError("TrigPotential: dimension must be >= 1");
  std::map<std::vector<int>, std::pair<double, double>> folded;
  for (auto& m : modes) {
    if (static_cast<int>(m.k.size()) != dim)
      throw InvalidInputError("TrigPotential: mode frequency dimension mismatch");
    if (!std::isfinite(m.a) || !std::isfinite(m.b))
      throw InvalidInputError("TrigPotential: non-finite coefficient");
    bool all_zero = true;
    int lead = 0;
    for (int c : m.k) {
      if (std::abs(c) > kMaxFrequency)
        throw InvalidInputError("TrigPotential: |k| exceeds the frequency bound");
      if (c != 0 && all_zero) {
        all_zero = false;
        lead = c;
      }
    }
    if (all_zero && m.b != 0.0)
      throw InvalidInputError("TrigPotential: zero-frequency mode must have b = 0");
    std::vector<int> key = m.k;
    double a = m.a, b = m.b;
    if (lead < 0) {  // fold -k onto k: cos is even, sin is odd
      for (int& c : key) c = -c;
      b = -b;
    }
    auto& slot = folded[key];
    slot.first += a;
    slot.second += b;
  }
  for (auto& [k, ab] : folded) {
    if (ab.first == 0.0 && ab.second == 0.0) continue;
    modes_.push_back(TrigMode{k, ab.first, ab.second});
  }
}

double TrigPotential::eval(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_) throw InvalidInputError("TrigPotential::eval: dimension mismatch");
  double acc = 0.0;
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += m.k[i] * x[i];
    phase *= kTwoPi;
    acc += m.a * std::cos(phase) + m.b * std::sin(phase);
  }
  return acc;
}

Vec TrigPotential::grad(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_) throw InvalidInputError("TrigPotential::grad: dimension mismatch");
  Vec g(dim_, 0.0);
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += m.k[i] * x[i];
    phase *= kTwoPi;
    const double d = kTwoPi * (-m.a * std::sin(phase) + m.b * std::cos(phase));
    for (int i = 0; i < dim_; ++i) g[i] += m.k[i] * d;
  }
  return g;
}

void TrigPotential::hess(const Vec& x, double* out) const {
  for (int i = 0; i < dim_ * dim_; ++i) out[i] = 0.0;
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += m.k[i] * x[i];
    phase *= kTwoPi;
    const double d = -kTwoPi * kTwoPi * (m.a * std::cos(phase) + m.b * std::sin(phase));
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) out[i * dim_ + j] += m.k[i] * m.k[j] * d;
  }
}

void TrigPotential::eval_all(const double* x, double* value, double* grad, double* hess) const {
  if (value) *value = 0.0;
  if (grad)
    for (int i = 0; i < dim_; ++i) grad[i] = 0.0;
  if (hess)
    for (int i = 0; i < dim_ * dim_; ++i) hess[i] = 0.0;
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += m.k[i] * x[i];
    phase *= kTwoPi;
    const double c = std::cos(phase), s = std::sin(phase);
    if (value) *value += m.a * c + m.b * s;
    if (grad) {
      const double d = kTwoPi * (-m.a * s + m.b * c);
      for (int i = 0; i < dim_; ++i) grad[i] += m.k[i] * d;
    }
    if (hess) {
      const double d2 = -kTwoPi * kTwoPi * (m.a * c + m.b * s);
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) hess[i * dim_ + j] += m.k[i] * m.k[j] * d2;
    }
  }
}

double TrigPotential::lipschitz_bound() const {
  double acc = 0.0;
  for (const auto& m : modes_) {
    double k2 = 0.0;
    for (int c : m.k) k2 += static_cast<double>(c) * c;
    acc += std::sqrt(k2) * (std::abs(m.a) + std::abs(m.b));
  }
  return kTwoPi * acc;
}

namespace {

// Dense n x n solve, partial pivoting; returns false when near-singular.
bool solve_dense(int n, std::vector<double> A, Vec rhs, Vec& out) {
  out = rhs;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int c = 0; c < n; ++c) {
    int best = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r * n + c]) > std::abs(A[best * n + c])) best = r;
    if (std::abs(A[best * n + c]) < 1e-14) return false;
    if (best != c) {
      for (int k = 0; k < n; ++k) std::swap(A[best * n + k], A[c * n + k]);
      std::swap(out[best], out[c]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = A[r * n + c] / A[c * n + c];
      for (int k = c; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
      out[r] -= f * out[c];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    for (int k = r + 1; k < n; ++k) out[r] -= A[r * n + k] * out[k];
    out[r] /= A[r * n + r];
  }
  return true;
}

}  // namespace

// Local refinement of a scan candidate: Newton toward a critical point when
// the step is sane, otherwise a backtracked gradient move in direction `sign`.
double TrigPotential::polish(Vec x, double sign) const {
  double best = sign * eval(x);
  std::vector<double> H(dim_ * dim_);
  for (int it = 0; it < 50; ++it) {
    Vec g = grad(x);
    double gnorm = 0.0;
    for (double v : g) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    if (gnorm < 1e-14) break;
    hess(x, H.data());
    Vec step;
    bool newton_ok = solve_dense(dim_, H, g, step);
    if (newton_ok) {
      double slen = 0.0;
      for (double v : step) slen += v * v;
      newton_ok = std::sqrt(slen) < 0.25;
    }
    Vec cand(dim_);
    if (newton_ok) {
      for (int i = 0; i < dim_; ++i) cand[i] = x[i] - step[i];
      const double v = sign * eval(cand);
      if (v >= best) {
        best = v;
        x = cand;
        continue;
      }
    }
    double alpha = 0.05 / (1.0 + gnorm);
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls) {
      for (int i = 0; i < dim_; ++i) cand[i] = x[i] + sign * alpha * g[i];
      const double v = sign * eval(cand);
      if (v > best) {
        best = v;
        x = cand;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  return sign * best;
}

void TrigPotential::compute_extrema() const {
  if (modes_.empty()) {
    cache_->mx = {0.0, 0.0};
    cache_->mn = {0.0, 0.0};
    return;
  }
  const int per_dim = dim_ == 1 ? 512 : dim_ == 2 ? 256 : dim_ == 3 ? 40 : 16;
  long total = 1;
  for (int i = 0; i < dim_; ++i) total *= per_dim;
  const double h = 1.0 / per_dim;

  // Track a handful of best cells each way; distinct local extrema matter
  // more than depth here, the polish step finishes the job.
  constexpr int kSeeds = 4;
  struct Cell {
    double value;
    long index;
  };
  std::vector<Cell> top(kSeeds, {-1e300, 0}), bot(kSeeds, {1e300, 0});
  Vec x(dim_);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int i = dim_ - 1; i >= 0; --i) {
      x[i] = (rem % per_dim) * h;
      rem /= per_dim;
    }
    const double v = eval(x);
    if (v > top.back().value) {
      top.back() = {v, idx};
      std::sort(top.begin(), top.end(), [](const Cell& a, const Cell& b) { return a.value > b.value; });
    }
    if (v < bot.back().value) {
      bot.back() = {v, idx};
      std::sort(bot.begin(), bot.end(), [](const Cell& a, const Cell& b) { return a.value < b.value; });
    }
  }
  const double eps = lipschitz_bound() * h;
  auto decode = [&](long idx) {
    Vec p(dim_);
    long rem = idx;
    for (int i = dim_ - 1; i >= 0; --i) {
      p[i] = (rem % per_dim) * h;
      rem /= per_dim;
    }
    return p;
  };
  double mx = -1e300, mn = 1e300;
  for (const auto& c : top)
    if (c.value > -1e299) mx = std::max(mx, polish(decode(c.index), +1.0));
  for (const auto& c : bot)
    if (c.value < 1e299) mn = std::min(mn, polish(decode(c.index), -1.0));
  cache_->mx = {mx, eps};
  cache_->mn = {mn, eps};
}

CertifiedExtremum TrigPotential::max_report() const {
  std::call_once(cache_->once, [this] { compute_extrema(); });
  return cache_->mx;
}

CertifiedExtremum TrigPotential::min_report() const {
  std::call_once(cache_->once, [this] { compute_extrema(); });
  return cache_->mn;
}

}  // namespace effham

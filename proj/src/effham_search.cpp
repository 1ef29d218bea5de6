#include "effham/effham_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "effham/parallel.hpp"
#include "effham/rng.hpp"

namespace effham {

namespace {

double squared_norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// One restart's working state: point coordinates plus a dense pairwise cache.
// Entries are pure functions of the endpoint coordinates they were computed
// at (bitwise snapshot), so cache validity survives reverted trial moves and
// the results do not depend on evaluation order or thread count.
class SearchContext {
public:
  SearchContext(const TrigPotential& xi, Vec P, double T, int j, int segments, double tol_path,
                int workers)
      : xi_(xi),
        P_(std::move(P)),
        T_(T),
        j_(j),
        n_(xi.dim()),
        segments_(segments),
        tol_path_(tol_path),
        workers_(workers),
        coords_(static_cast<std::size_t>(j) * xi.dim(), 0.0),
        entries_(static_cast<std::size_t>(j) * j) {
    const auto mx = xi_.max_report();
    xi_upper_ = mx.value + mx.eps;
    p2_ = squared_norm(P_);
    dt_ = T_ / segments_;
  }

  Vec& coords() { return coords_; }
  const Vec& coords() const { return coords_; }
  int j() const { return j_; }
  int n() const { return n_; }

  struct Entry {
    bool valid = false;
    Vec y, x;  // endpoint snapshot the entry was computed at
    double A = 0.0;
    Vec p0, pT;
    std::vector<long> z;
    std::vector<double> nodes;
    bool conv = false;
  };

  const Entry& eval_pair(int i, int l) {
    Entry& e = entries_[static_cast<std::size_t>(i) * j_ + l];
    const double* y = coords_.data() + static_cast<std::size_t>(i) * n_;
    const double* x = coords_.data() + static_cast<std::size_t>(l) * n_;
    if (e.valid && std::equal(e.y.begin(), e.y.end(), y) && std::equal(e.x.begin(), e.x.end(), x))
      return e;
    compute_entry(e, Vec(y, y + n_), Vec(x, x + n_));
    return e;
  }

  /// Exact assignment value of the current configuration at search fidelity.
  TransportPlan assign() {
    CostMatrix C;
    C.size = j_;
    C.entries.resize(static_cast<std::size_t>(j_) * j_);
    par::for_index(
        static_cast<long>(j_) * j_,
        [&](long e) { C.entries[e] = eval_pair(static_cast<int>(e / j_), static_cast<int>(e % j_)).A; },
        workers_);
    return solve_assignment(C);
  }

  /// (1/j) sum_i A(x_i, x_sigma(i)); entries cached, sum order fixed.
  double objective(const std::vector<int>& sigma) {
    par::for_index(j_, [&](long i) { eval_pair(static_cast<int>(i), sigma[i]); }, workers_);
    double acc = 0.0;
    for (int i = 0; i < j_; ++i) acc += eval_pair(i, sigma[i]).A;
    return acc / j_;
  }

  /// Gradient of objective() with respect to all point coordinates, assembled
  /// from the boundary momenta: dA/dx = (pT-P)/T, dA/dy = (P-p0)/T.
  void gradient(const std::vector<int>& sigma, Vec& grad) {
    grad.assign(coords_.size(), 0.0);
    for (int i = 0; i < j_; ++i) {
      const Entry& e = eval_pair(i, sigma[i]);
      for (int a = 0; a < n_; ++a) {
        grad[static_cast<std::size_t>(i) * n_ + a] += (P_[a] - e.p0[a]) / (T_ * j_);
        grad[static_cast<std::size_t>(sigma[i]) * n_ + a] += (e.pT[a] - P_[a]) / (T_ * j_);
      }
    }
  }

private:
  void compute_entry(Entry& e, Vec y, Vec x) {
    ActionQuery q{TorusPoint{y}, TorusPoint{x}, T_, P_};
    auto lifts = lift_window(q, xi_);
    struct Cand {
      std::vector<long>* z;
      double lb;
    };
    std::vector<Cand> cands;
    cands.reserve(lifts.size());
    for (auto& z : lifts) {
      double r2 = 0.0;
      for (int a = 0; a < n_; ++a) {
        const double d = x[a] + z[a] - y[a] - T_ * P_[a];
        r2 += d * d;
      }
      cands.push_back({&z, r2 / (2.0 * T_ * T_) - xi_upper_});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.lb < b.lb; });

    double bestA = std::numeric_limits<double>::infinity();
    std::vector<long> bestZ;
    std::vector<double> bestNodes;
    bool bestConv = false;

    Vec xz(n_);
    std::vector<double> nodes;
    // previous path first: after small point moves it converges in a step or two
    if (e.valid) {
      bool in_window = false;
      for (const auto& c : cands)
        if (*c.z == e.z) {
          in_window = true;
          break;
        }
      if (in_window) {
        nodes = e.nodes;
        for (int a = 0; a < n_; ++a) xz[a] = x[a] + e.z[a];
        const int M = segments_;
        for (int m = 0; m <= M; ++m) {
          const double w = static_cast<double>(m) / M;
          for (int a = 0; a < n_; ++a)
            nodes[static_cast<std::size_t>(m) * n_ + a] +=
                (1.0 - w) * (y[a] - e.y[a]) + w * (xz[a] - (e.x[a] + e.z[a]));
        }
        auto mech =
            detail::minimize_mechanical(y, xz, T_, segments_, xi_, nodes, true, tol_path_, 60);
        double pdelta = 0.0;
        for (int a = 0; a < n_; ++a) pdelta += P_[a] * (xz[a] - y[a]);
        const double A = (mech.S0 - pdelta) / T_ + 0.5 * p2_;
        bestA = A;
        bestZ = e.z;
        bestNodes = nodes;
        bestConv = mech.converged;
      }
    }
    for (const auto& c : cands) {
      if (c.lb >= bestA - 1e-12) break;
      if (*c.z == bestZ && !bestNodes.empty()) continue;
      for (int a = 0; a < n_; ++a) xz[a] = x[a] + (*c.z)[a];
      detail::make_initial_nodes(y, xz, segments_, n_, 0, nodes);
      auto mech = detail::minimize_mechanical(y, xz, T_, segments_, xi_, nodes, true, tol_path_, 60);
      double pdelta = 0.0;
      for (int a = 0; a < n_; ++a) pdelta += P_[a] * (xz[a] - y[a]);
      const double A = (mech.S0 - pdelta) / T_ + 0.5 * p2_;
      if (A < bestA) {
        bestA = A;
        bestZ = *c.z;
        bestNodes = nodes;
        bestConv = mech.converged;
      }
    }
    e.valid = true;
    e.y = std::move(y);
    e.x = std::move(x);
    e.A = bestA;
    e.z = std::move(bestZ);
    e.nodes = std::move(bestNodes);
    e.conv = bestConv;
    detail::boundary_momenta(e.nodes, segments_, n_, dt_, xi_, e.p0, e.pT);
  }

  const TrigPotential& xi_;
  Vec P_;
  double T_;
  int j_, n_;
  int segments_;
  double tol_path_;
  int workers_;
  double xi_upper_, p2_, dt_;
  Vec coords_;
  std::vector<Entry> entries_;
};

struct DescentState {
  double alpha = 0.05;
};

// Torus gradient descent on the points with the permutation held fixed.
// Returns the objective after the last accepted step.
double descend_points(SearchContext& ctx, const std::vector<int>& sigma, int iters,
                      DescentState& st) {
  const int j = ctx.j(), n = ctx.n();
  double obj = ctx.objective(sigma);
  Vec grad, saved;
  for (int it = 0; it < iters; ++it) {
    ctx.gradient(sigma, grad);
    double g2 = 0.0, ginf = 0.0;
    for (double g : grad) {
      g2 += g * g;
      ginf = std::max(ginf, std::abs(g));
    }
    if (ginf < 1e-10) break;
    saved = ctx.coords();
    double alpha = st.alpha;
    bool accepted = false;
    for (int ls = 0; ls < 24; ++ls) {
      Vec& c = ctx.coords();
      for (int k = 0; k < j * n; ++k) c[k] = saved[k] - alpha * grad[k];
      // canonicalize per point
      for (int k = 0; k < j * n; ++k) {
        double r = c[k] - std::floor(c[k]);
        if (r >= 1.0) r = 0.0;
        c[k] = r;
      }
      const double trial = ctx.objective(sigma);
      if (trial <= obj - 1e-4 * alpha * g2) {
        obj = trial;
        accepted = true;
        if (ls == 0) st.alpha = std::min(alpha * 1.6, 1e3);
        else st.alpha = alpha;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ctx.coords() = saved;
      st.alpha = std::max(st.alpha * 0.25, 1e-14);
      if (st.alpha <= 1e-13) break;
    }
  }
  return obj;
}

struct RestartResult {
  Vec coords;
  double D = std::numeric_limits<double>::infinity();
  bool converged = false;
  int alternations = 0;
};

RestartResult run_restart(const TrigPotential& xi, const Vec& P, const SearchConfig& cfg,
                          const Vec& init_coords, int inner_workers) {
  SearchContext ctx(xi, P, cfg.T, cfg.j, cfg.segments, 1e-8, inner_workers);
  ctx.coords() = init_coords;
  RestartResult res;
  TransportPlan plan = ctx.assign();
  double obj = plan.value;
  DescentState st;
  for (int alt = 0; alt < cfg.max_alternations; ++alt) {
    res.alternations = alt + 1;
    descend_points(ctx, plan.permutation, cfg.descent_iters, st);
    plan = ctx.assign();
    const double improved = obj - plan.value;
    obj = plan.value;
    if (improved < cfg.tol_outer * std::max(1.0, std::abs(obj))) {
      res.converged = true;
      break;
    }
  }
  res.coords = ctx.coords();
  res.D = obj;
  return res;
}

// Greedy annealed perturbations of the incumbent: move a few atoms with a
// decaying amplitude, settle with one cheap alternation, keep improvements.
void anneal_incumbent(const TrigPotential& xi, const Vec& P, const SearchConfig& cfg, Vec& coords,
                      double& D, Rng rng, int inner_workers) {
  if (cfg.anneal.steps <= 0) return;
  const int j = cfg.j, n = xi.dim();
  SearchContext ctx(xi, P, cfg.T, cfg.j, cfg.segments, 1e-8, inner_workers);
  ctx.coords() = coords;
  TransportPlan plan = ctx.assign();
  double best = plan.value;
  Vec best_coords = ctx.coords();
  double temp = cfg.anneal.initial_temperature;
  DescentState st;
  for (int step = 0; step < cfg.anneal.steps; ++step) {
    ctx.coords() = best_coords;
    const int nmove = 1 + static_cast<int>(rng.below(std::max(1, j / 4)));
    for (int k = 0; k < nmove; ++k) {
      const int idx = static_cast<int>(rng.below(j));
      for (int a = 0; a < n; ++a) {
        double v = ctx.coords()[static_cast<std::size_t>(idx) * n + a] + temp * rng.normal();
        v -= std::floor(v);
        if (v >= 1.0) v = 0.0;
        ctx.coords()[static_cast<std::size_t>(idx) * n + a] = v;
      }
    }
    plan = ctx.assign();
    st.alpha = 0.05;
    descend_points(ctx, plan.permutation, std::min(cfg.descent_iters, 12), st);
    plan = ctx.assign();
    if (plan.value < best) {
      best = plan.value;
      best_coords = ctx.coords();
    }
    temp *= cfg.anneal.decay;
  }
  if (best < D) {
    D = best;
    coords = best_coords;
  }
}

std::vector<TorusPoint> coords_to_points(const Vec& coords, int j, int n) {
  std::vector<TorusPoint> pts(j);
  for (int i = 0; i < j; ++i)
    pts[i] = canonicalize(Vec(coords.begin() + static_cast<std::size_t>(i) * n,
                              coords.begin() + static_cast<std::size_t>(i + 1) * n));
  return pts;
}

}  // namespace

double EffHamEstimate::noise_estimate() const {
  double level_drop = 0.0;
  if (level_D.size() >= 2) level_drop = std::abs(level_D.back() - level_D[level_D.size() - 2]);
  return std::max({restart_spread, refine_gap, level_drop});
}

EffHamEstimate minimize_configuration(const TrigPotential& xi, const Vec& P,
                                      const SearchConfig& cfg) {
  return minimize_configuration(xi, P, cfg, {});
}

EffHamEstimate minimize_configuration(const TrigPotential& xi, const Vec& P,
                                      const SearchConfig& cfg,
                                      const std::vector<TorusPoint>& warm_start) {
  const int n = xi.dim();
  if (static_cast<int>(P.size()) != n) throw InvalidInputError("minimize_configuration: P dimension");
  if (cfg.j < 1 || cfg.restarts < 1 || !(cfg.T > 0.0) || !(cfg.anneal.decay > 0.0) ||
      !(cfg.anneal.decay < 1.0))
    throw InvalidInputError("minimize_configuration: invalid SearchConfig");
  const int j = cfg.j;
  const int workers = cfg.workers > 0 ? cfg.workers : par::workers();

  // initial coordinates per restart; restart 0 takes the warm start when given
  Rng seeder(cfg.seed);
  std::vector<Vec> inits(cfg.restarts);
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rr = seeder.spawn(r);
    inits[r].resize(static_cast<std::size_t>(j) * n);
    for (double& v : inits[r]) v = rr.uniform();
  }
  if (!warm_start.empty()) {
    if (static_cast<int>(warm_start.size()) != j)
      throw InvalidInputError("minimize_configuration: warm start size mismatch");
    for (int i = 0; i < j; ++i)
      for (int a = 0; a < n; ++a) inits[0][static_cast<std::size_t>(i) * n + a] = warm_start[i].coords[a];
  }

  // Restarts are independent; parallelize across them for small j, inside the
  // pairwise assembly for large j. Either split yields identical results.
  std::vector<RestartResult> results(cfg.restarts);
  const bool outer_parallel = j <= 16;
  if (outer_parallel) {
    par::for_index(cfg.restarts, [&](long r) { results[r] = run_restart(xi, P, cfg, inits[r], 1); },
                   workers);
  } else {
    for (int r = 0; r < cfg.restarts; ++r) results[r] = run_restart(xi, P, cfg, inits[r], workers);
  }

  int best_r = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (results[r].D < results[best_r].D) best_r = r;

  EffHamEstimate est;
  est.P = P;
  est.T = cfg.T;
  est.j = j;
  est.restarts_used = cfg.restarts;
  est.alternations = results[best_r].alternations;
  est.converged = std::any_of(results.begin(), results.end(),
                              [](const RestartResult& r) { return r.converged; });
  est.restart_values.reserve(cfg.restarts);
  double mean = 0.0;
  for (const auto& r : results) {
    est.restart_values.push_back(r.D);
    mean += r.D;
  }
  mean /= cfg.restarts;
  double var = 0.0;
  for (double v : est.restart_values) var += (v - mean) * (v - mean);
  est.restart_spread = std::sqrt(var / cfg.restarts);

  Vec coords = results[best_r].coords;
  double D_search = results[best_r].D;
  anneal_incumbent(xi, P, cfg, coords, D_search, seeder.spawn(1000003), workers);

  // Full-fidelity evaluation of the winning configuration: multistart action,
  // path refinement doubled until self-consistent (capped at 4x).
  est.points = coords_to_points(coords, j, n);
  ActionOptions full;
  full.starts = 3;
  int M = cfg.segments;
  CostMatrixBuilder b0(est.points, xi, cfg.T, M, full);
  CostMatrix C = b0.matrix_for(P);
  TransportPlan plan = solve_assignment(C);
  bool eval_conv = b0.all_converged();
  double D = plan.value;
  double gap = std::numeric_limits<double>::infinity();
  while (gap > 1e-6 && M < cfg.segments * 4) {
    M *= 2;
    CostMatrixBuilder b(est.points, xi, cfg.T, M, full);
    CostMatrix C2 = b.matrix_for(P);
    TransportPlan p2 = solve_assignment(C2);
    gap = std::abs(p2.value - D);
    D = p2.value;
    plan = std::move(p2);
    eval_conv = eval_conv && b.all_converged();
  }
  est.refine_gap = std::isfinite(gap) ? gap : 0.0;
  est.plan = std::move(plan);
  est.D_value = D;
  const bool search_converged = est.converged;
  est.converged = search_converged && eval_conv;
  est.H_value = 0.5 * squared_norm(P) - est.D_value;
  est.level_D = {est.D_value};
  est.level_j = {j};

  if (!search_converged)
    throw ConfigurationSearchFailure("minimize_configuration: no restart converged", est);
  return est;
}

EffHamEstimate effective_hamiltonian(const TrigPotential& xi, const Vec& P,
                                     const std::vector<int>& j_schedule, double T,
                                     const SearchConfig& base) {
  if (j_schedule.empty()) throw InvalidInputError("effective_hamiltonian: empty j schedule");
  const int n = xi.dim();
  std::vector<double> level_D;
  std::vector<int> level_j;
  std::vector<TorusPoint> incumbent;
  EffHamEstimate last;
  for (std::size_t lvl = 0; lvl < j_schedule.size(); ++lvl) {
    SearchConfig cfg = base;
    cfg.j = j_schedule[lvl];
    cfg.T = T;
    cfg.seed = base.seed + 7919 * static_cast<std::uint64_t>(lvl);
    std::vector<TorusPoint> warm;
    if (!incumbent.empty()) {
      // split incumbent atoms with a small jitter to seed the larger level
      Rng jit(cfg.seed ^ 0x5bf03635ULL);
      warm.resize(cfg.j);
      const double sigma = 0.05 / cfg.j;
      for (int i = 0; i < cfg.j; ++i) {
        Vec c = incumbent[i % incumbent.size()].coords;
        for (int a = 0; a < n; ++a) c[a] += sigma * jit.normal();
        warm[i] = canonicalize(c);
      }
    }
    try {
      last = minimize_configuration(xi, P, cfg, warm);
    } catch (ConfigurationSearchFailure& f) {
      f.estimate.level_D = level_D;
      f.estimate.level_j = level_j;
      f.estimate.level_D.push_back(f.estimate.D_value);
      f.estimate.level_j.push_back(cfg.j);
      throw;
    }
    incumbent = last.points;
    level_D.push_back(last.D_value);
    level_j.push_back(last.j);
  }
  last.level_D = level_D;
  last.level_j = level_j;
  return last;
}

CostMatrix barD_matrix(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                       const Vec& P) {
  const int j = static_cast<int>(points.size());
  if (j < 1) throw InvalidInputError("barD: need at least one point");
  if (!(T > 0.0)) throw InvalidInputError("barD: T must be positive");
  Vec shift(P.size());
  for (std::size_t a = 0; a < P.size(); ++a) shift[a] = T * P[a];
  CostMatrix C;
  C.size = j;
  C.entries.resize(static_cast<std::size_t>(j) * j);
  std::vector<double> xivals(j);
  for (int i = 0; i < j; ++i) xivals[i] = xi.eval(points[i]);
  for (int i = 0; i < j; ++i)
    for (int l = 0; l < j; ++l) {
      const double d = min_displacement(points[l], points[i], shift).norm;
      C.entries[static_cast<std::size_t>(i) * j + l] = d * d / (2.0 * T * T) - xivals[i];
    }
  return C;
}

TransportPlan barD_plan(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
                        const Vec& P) {
  return solve_assignment(barD_matrix(points, xi, T, P));
}

double barD(const std::vector<TorusPoint>& points, const TrigPotential& xi, double T,
            const Vec& P) {
  return barD_plan(points, xi, T, P).value;
}

}  // namespace effham

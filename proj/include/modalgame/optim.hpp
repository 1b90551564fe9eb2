#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace modalgame {

using Objective = std::function<double(std::span<const double>)>;
/// Returns the objective value and writes the gradient.
using ObjectiveWithGradient = std::function<double(std::span<const double>, std::span<double>)>;
/// Writes constraint values g (g >= 0 is feasible). When `jac` is non-empty it
/// receives the row-major (constraint_count x dim) Jacobian.
using ConstraintFn = std::function<void(std::span<const double>, std::span<double>, std::span<double>)>;

/// Box- and inequality-constrained smooth maximization problem.
struct SmoothProblem {
  std::size_t dim = 0;
  Objective objective;
  ObjectiveWithGradient objective_gradient;  // optional
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t constraint_count = 0;
  ConstraintFn constraints;
  bool constraint_jacobian = false;
};

struct SolveConfig {
  double mu_initial = 1.0;
  double mu_factor = 0.1;
  double mu_final = 1e-8;
  double tolerance = 1e-8;
  std::size_t max_inner_iterations = 400;
  double fd_step = 1e-6;
};

struct SolveReport {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> constraint_residuals;
  double stationarity = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Barrier objective in normalized coordinates u in [0,1]^n.
class BarrierModel {
 public:
  BarrierModel(const SmoothProblem& p, double fd_step) : p_(p), h_(fd_step), x_(p.dim), g_(p.constraint_count) {
    span_.resize(p.dim);
    for (std::size_t i = 0; i < p.dim; ++i) span_[i] = p.upper[i] - p.lower[i];
    if (p.constraint_jacobian) jac_.resize(p.constraint_count * p.dim);
  }

  void to_x(std::span<const double> u, std::span<double> x) const {
    for (std::size_t i = 0; i < p_.dim; ++i) x[i] = p_.lower[i] + u[i] * span_[i];
  }

  double objective_x(std::span<const double> x) const { return p_.objective(x); }

  /// Barrier value at u; -inf outside the strict interior.
  double value(std::span<const double> u, double mu) {
    to_x(u, x_);
    double f = p_.objective(x_);
    if (!std::isfinite(f)) return -std::numeric_limits<double>::infinity();
    if (p_.constraint_count == 0) return f;
    p_.constraints(x_, g_, {});
    double b = 0.0;
    for (double gi : g_) {
      if (!(gi > 0)) return -std::numeric_limits<double>::infinity();
      b += std::log(gi);
    }
    return f + mu * b;
  }

  /// Barrier value and gradient with respect to u.
  double value_grad(std::span<const double> u, double mu, std::span<double> grad) {
    const std::size_t n = p_.dim;
    to_x(u, x_);
    double f;
    std::vector<double> gx(n, 0.0);
    if (p_.objective_gradient) {
      f = p_.objective_gradient(x_, gx);
    } else {
      f = p_.objective(x_);
      fd_x(
          [&](std::span<const double> x) { return p_.objective(x); }, gx);
    }
    if (!std::isfinite(f)) return -std::numeric_limits<double>::infinity();
    double val = f;
    if (p_.constraint_count > 0) {
      const std::size_t m = p_.constraint_count;
      std::vector<double> jac(m * n, 0.0);
      if (p_.constraint_jacobian) {
        p_.constraints(x_, g_, jac);
      } else {
        p_.constraints(x_, g_, {});
        std::vector<double> xp(x_), gp(m), gm(m);
        for (std::size_t j = 0; j < n; ++j) {
          const double hj = h_ * span_[j];
          const double x0 = x_[j];
          const double hi_room = p_.upper[j] - x0, lo_room = x0 - p_.lower[j];
          const double up = std::min(hj, std::max(hi_room, 0.0));
          const double dn = std::min(hj, std::max(lo_room, 0.0));
          xp[j] = x0 + up;
          p_.constraints(xp, gp, {});
          xp[j] = x0 - dn;
          p_.constraints(xp, gm, {});
          xp[j] = x0;
          const double denom = up + dn;
          for (std::size_t c = 0; c < m; ++c) jac[c * n + j] = denom > 0 ? (gp[c] - gm[c]) / denom : 0.0;
        }
      }
      for (std::size_t c = 0; c < m; ++c) {
        const double gi = g_[c];
        if (!(gi > 0)) return -std::numeric_limits<double>::infinity();
        val += mu * std::log(gi);
        for (std::size_t j = 0; j < n; ++j) gx[j] += mu * jac[c * n + j] / gi;
      }
    }
    for (std::size_t j = 0; j < n; ++j) grad[j] = gx[j] * span_[j];
    return val;
  }

  std::vector<double> constraint_values(std::span<const double> x) {
    std::vector<double> g(p_.constraint_count);
    if (p_.constraint_count) p_.constraints(x, g, {});
    return g;
  }

 private:
  template <class F>
  void fd_x(F&& f, std::span<double> gx) {
    const std::size_t n = p_.dim;
    std::vector<double> xp(x_.begin(), x_.end());
    for (std::size_t j = 0; j < n; ++j) {
      const double hj = h_ * std::max(span_[j], 1e-12);
      const double x0 = x_[j];
      const double up = std::min(hj, std::max(p_.upper[j] - x0, 0.0));
      const double dn = std::min(hj, std::max(x0 - p_.lower[j], 0.0));
      xp[j] = x0 + up;
      const double fp = f(xp);
      xp[j] = x0 - dn;
      const double fm = f(xp);
      xp[j] = x0;
      gx[j] = (up + dn) > 0 ? (fp - fm) / (up + dn) : 0.0;
    }
  }

  const SmoothProblem& p_;
  double h_;
  std::vector<double> span_;
  std::vector<double> x_;
  std::vector<double> g_;
  std::vector<double> jac_;
};

inline double projected_gradient_norm(std::span<const double> u, std::span<const double> g) {
  double r = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = std::clamp(u[i] + g[i], 0.0, 1.0) - u[i];
    r = std::max(r, std::abs(t));
  }
  return r;
}

struct InnerResult {
  double value;
  std::size_t iterations;
  bool converged;
  double stationarity;
};

/// Projected BFGS ascent on the barrier function over the unit box.
inline InnerResult maximize_box(BarrierModel& model, std::vector<double>& u, double mu, const SolveConfig& cfg) {
  const std::size_t n = u.size();
  std::vector<double> g(n), gn(n), un(n), d(n), s(n), y(n);
  std::vector<double> H(n * n, 0.0);
  auto reset_h = [&] {
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
  };
  reset_h();
  bool fresh = true;
  double F = model.value_grad(u, mu, g);
  InnerResult res{F, 0, false, std::numeric_limits<double>::infinity()};
  if (!std::isfinite(F)) return res;
  std::size_t stall = 0;
  std::vector<char> free(n);

  for (std::size_t it = 0; it < cfg.max_inner_iterations; ++it) {
    res.iterations = it + 1;
    const double pg = projected_gradient_norm(u, g);
    res.stationarity = pg;
    const double scale = std::max(1.0, std::abs(F));
    if (pg <= cfg.tolerance * scale) {
      res.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i)
      free[i] = !((u[i] <= 0.0 && g[i] < 0.0) || (u[i] >= 1.0 && g[i] > 0.0));
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = 0.0;
      if (!free[i]) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (free[j]) d[i] += H[i * n + j] * g[j];
      slope += d[i] * g[i];
    }
    if (!(slope > 0)) {
      reset_h();
      fresh = true;
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = free[i] ? g[i] : 0.0;
        slope += d[i] * g[i];
      }
    }
    if (fresh) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      if (dmax > 0.1)
        for (double& v : d) v *= 0.1 / dmax;
    }

    double t = 1.0;
    double Fn = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double pred = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        un[i] = std::clamp(u[i] + t * d[i], 0.0, 1.0);
        pred += g[i] * (un[i] - u[i]);
      }
      Fn = model.value(un, mu);
      if (std::isfinite(Fn) && Fn >= F + 1e-4 * pred && pred >= 0.0) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        reset_h();
        fresh = true;
        continue;
      }
      res.converged = pg <= std::sqrt(cfg.tolerance) * scale;
      break;
    }
    Fn = model.value_grad(un, mu, gn);
    double sy = 0.0, yy = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = un[i] - u[i];
      y[i] = -(gn[i] - g[i]);
      sy += s[i] * y[i];
      yy += y[i] * y[i];
      ss += s[i] * s[i];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      if (fresh) {
        const double gamma = sy / yy;
        for (double& h : H) h *= gamma;
      }
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      std::vector<double> Hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
      double yHy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yHy += y[i] * Hy[i];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          H[i * n + j] += -rho * (s[i] * Hy[j] + Hy[i] * s[j]) + (rho * rho * yHy + rho) * s[i] * s[j];
      fresh = false;
    }
    const double gain = Fn - F;
    u = un;
    g = gn;
    F = Fn;
    res.value = F;
    if (gain <= 1e-15 * std::max(1.0, std::abs(F))) {
      if (++stall >= 5) {
        res.stationarity = projected_gradient_norm(u, g);
        res.converged = res.stationarity <= std::sqrt(cfg.tolerance) * std::max(1.0, std::abs(F));
        break;
      }
    } else {
      stall = 0;
    }
  }
  res.value = F;
  return res;
}

inline void check_problem(const SmoothProblem& p) {
  if (p.lower.size() != p.dim || p.upper.size() != p.dim)
    throw Error(Errc::dimension_mismatch, "box bounds must match problem dimension");
  if (!p.objective) throw Error(Errc::config, "problem has no objective");
  if (p.constraint_count > 0 && !p.constraints) throw Error(Errc::config, "constraint callable missing");
  for (std::size_t i = 0; i < p.dim; ++i)
    if (!(p.upper[i] > p.lower[i])) throw Error(Errc::config, "box upper must exceed lower");
}

}  // namespace detail

/// Log-barrier maximization with projected BFGS inner iterations.
inline SolveReport solve_smooth(const SmoothProblem& problem, std::span<const double> x0,
                                const SolveConfig& cfg = {}) {
  detail::check_problem(problem);
  if (x0.size() != problem.dim) throw Error(Errc::dimension_mismatch, "start has wrong dimension");
  const std::size_t n = problem.dim;
  detail::BarrierModel model(problem, cfg.fd_step);
  std::vector<double> u(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = std::clamp(x0[i], problem.lower[i], problem.upper[i]);
    u[i] = (xi - problem.lower[i]) / (problem.upper[i] - problem.lower[i]);
  }
  model.to_x(u, x);
  if (problem.constraint_count > 0) {
    for (double gi : model.constraint_values(x))
      if (!(gi > 0)) throw Error(Errc::infeasible_start, "start violates a constraint");
  }

  SolveReport rep;
  bool last_converged = false;
  if (problem.constraint_count == 0) {
    auto r = detail::maximize_box(model, u, 0.0, cfg);
    rep.iterations = r.iterations;
    last_converged = r.converged;
    rep.stationarity = r.stationarity;
  } else {
    for (double mu = cfg.mu_initial; mu >= cfg.mu_final * (1 - 1e-12); mu *= cfg.mu_factor) {
      auto r = detail::maximize_box(model, u, mu, cfg);
      rep.iterations += r.iterations;
      last_converged = r.converged;
      rep.stationarity = r.stationarity;
    }
  }
  model.to_x(u, x);
  rep.x = x;
  rep.value = model.objective_x(x);
  rep.constraint_residuals = model.constraint_values(x);
  bool feasible = true;
  for (double gi : rep.constraint_residuals) feasible = feasible && gi >= -1e-8;
  rep.converged = last_converged && feasible && std::isfinite(rep.value);
  return rep;
}

/// Multi-start variant: best value over starts; infeasible starts are skipped.
inline SolveReport solve_smooth(const SmoothProblem& problem, const std::vector<std::vector<double>>& starts,
                                const SolveConfig& cfg = {}) {
  std::optional<SolveReport> best;
  for (const auto& s : starts) {
    try {
      auto r = solve_smooth(problem, std::span<const double>(s), cfg);
      if (!best || r.value > best->value) best = std::move(r);
    } catch (const Error& e) {
      if (e.code() != Errc::infeasible_start) throw;
    }
  }
  if (!best) throw Error(Errc::infeasible_start, "no strictly feasible start");
  return *best;
}

/// Phase-1 search for a strictly feasible point: maximizes t subject to g(x) >= t.
/// Returns the point when the maximal t is positive.
inline std::optional<std::vector<double>> find_strictly_feasible(const SmoothProblem& problem,
                                                                 std::span<const double> x0,
                                                                 const SolveConfig& cfg = {}) {
  detail::check_problem(problem);
  const std::size_t n = problem.dim, m = problem.constraint_count;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x0[i], problem.lower[i], problem.upper[i]);
  if (m == 0) return x;
  std::vector<double> g(m);
  problem.constraints(x, g, {});
  const double gmin = *std::min_element(g.begin(), g.end());
  if (gmin > 0) return x;

  SmoothProblem aug;
  aug.dim = n + 1;
  aug.lower = problem.lower;
  aug.upper = problem.upper;
  aug.lower.push_back(gmin - 1.0);
  aug.upper.push_back(1.0);
  aug.objective = [n](std::span<const double> z) { return z[n]; };
  aug.objective_gradient = [n](std::span<const double> z, std::span<double> gr) {
    std::fill(gr.begin(), gr.end(), 0.0);
    gr[n] = 1.0;
    return z[n];
  };
  aug.constraint_count = m;
  aug.constraint_jacobian = problem.constraint_jacobian;
  aug.constraints = [&problem, n, m](std::span<const double> z, std::span<double> gv, std::span<double> jac) {
    if (jac.empty()) {
      problem.constraints(z.first(n), gv, {});
    } else {
      std::vector<double> inner(m * n);
      problem.constraints(z.first(n), gv, inner);
      for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t j = 0; j < n; ++j) jac[c * (n + 1) + j] = inner[c * n + j];
        jac[c * (n + 1) + n] = -1.0;
      }
    }
    for (std::size_t c = 0; c < m; ++c) gv[c] -= z[n];
  };
  std::vector<double> z(x);
  z.push_back(gmin - 0.5);
  SolveConfig c2 = cfg;
  c2.mu_final = std::max(cfg.mu_final, 1e-6);
  auto rep = solve_smooth(aug, std::span<const double>(z), c2);
  std::vector<double> xs(rep.x.begin(), rep.x.begin() + static_cast<std::ptrdiff_t>(n));
  problem.constraints(xs, g, {});
  if (*std::min_element(g.begin(), g.end()) > 0) return xs;
  return std::nullopt;
}

struct GridResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
};

/// Exhaustive maximization over a tensor grid; ties go to the lexicographically smallest point.
inline GridResult grid_search(const Objective& f, std::vector<std::vector<double>> axes) {
  if (axes.empty()) throw Error(Errc::empty_grid, "grid has no axes");
  for (auto& a : axes) {
    if (a.empty()) throw Error(Errc::empty_grid, "grid axis is empty");
    std::sort(a.begin(), a.end());
  }
  const std::size_t n = axes.size();
  std::vector<std::size_t> at(n, 0);
  std::vector<double> x(n);
  GridResult best;
  bool have = false;
  while (true) {
    for (std::size_t d = 0; d < n; ++d) x[d] = axes[d][at[d]];
    const double v = f(x);
    if (!have || v > best.value) {
      best.x = x;
      best.value = v;
      have = true;
    }
    std::size_t d = n;
    while (d > 0) {
      --d;
      if (++at[d] < axes[d].size()) break;
      at[d] = 0;
      if (d == 0) return best;
    }
  }
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

inline std::vector<double> geomspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  const double la = std::log(a), lb = std::log(b);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
  v.front() = a;
  v.back() = b;
  return v;
}

/// Golden-section maximization on [a, b]; returns the best evaluated point (endpoints included).
template <class F>
std::pair<double, double> golden_section_max(F&& f, double a, double b, double tol = 1e-6,
                                             std::size_t max_iter = 60) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double bx = a, bf = f(a);
  auto consider = [&](double x, double v) {
    if (v > bf) {
      bf = v;
      bx = x;
    }
  };
  consider(b, f(b));
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  consider(c, fc);
  consider(d, fd);
  for (std::size_t it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
  return {bx, bf};
}

/// Central-difference gradient.
template <class F>
std::vector<double> finite_diff_gradient(F&& f, std::span<const double> x, double h = 1e-5) {
  std::vector<double> xp(x.begin(), x.end()), g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(std::span<const double>(xp));
    xp[i] = x[i] - h;
    const double fm = f(std::span<const double>(xp));
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Hessian (row-major n x n).
template <class F>
std::vector<double> finite_diff_hessian(F&& f, std::span<const double> x, double h = 1e-4) {
  const std::size_t n = x.size();
  std::vector<double> xp(x.begin(), x.end()), H(n * n);
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    xp[i] += di;
    xp[j] += dj;
    const double v = f(std::span<const double>(xp));
    xp[i] = x[i];
    xp[j] = x[j];
    return v;
  };
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    H[i * n + i] = (at(i, h, i, 0.0) - 2.0 * f0 + at(i, -h, i, 0.0)) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) / (4.0 * h * h);
      H[i * n + j] = H[j * n + i] = v;
    }
  }
  return H;
}

}  // namespace modalgame

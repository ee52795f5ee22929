#pragma once

// Bivariate partial information decomposition from the marginal-constrained
// maximum conditional entropy program
//
//   q* = argmax_{q in Delta_p} H_q(Y | Y1, Y2),
//   Delta_p = { q : q(y1, y) = p(y1, y), q(y2, y) = p(y2, y) }.
//
// Delta_p is a product over y of transportation polytopes (rows indexed by
// y1, columns by y2), which the solver exploits throughout.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pidlab/error.hpp"
#include "pidlab/info.hpp"
#include "pidlab/transport.hpp"

namespace pidlab {

/// Pairwise marginals p(y1, y) and p(y2, y) defining Delta_p.
class MarginalConstraints {
 public:
  MarginalConstraints(Joint2 y1_y, Joint2 y2_y) : y1_y_(std::move(y1_y)), y2_y_(std::move(y2_y)) {
    const auto n = y1_y_.rows();
    if (y1_y_.cols() != n || y2_y_.rows() != n || y2_y_.cols() != n) {
      throw Error(ErrorCode::invalid_argument, "marginal constraints must be square and share a size");
    }
    const auto m1 = y1_y_.col_marginal();
    const auto m2 = y2_y_.col_marginal();
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(m1[k] - m2[k]) > kMassTolerance) {
        throw Error(ErrorCode::infeasible, "pairwise marginals disagree on p(y)");
      }
    }
  }

  std::size_t size() const noexcept { return y1_y_.rows(); }
  const Joint2& y1_y() const noexcept { return y1_y_; }
  const Joint2& y2_y() const noexcept { return y2_y_; }

  /// p(y), averaged over both marginals.
  std::vector<double> target_marginal() const {
    auto m1 = y1_y_.col_marginal();
    const auto m2 = y2_y_.col_marginal();
    for (std::size_t k = 0; k < m1.size(); ++k) m1[k] = 0.5 * (m1[k] + m2[k]);
    return m1;
  }

  /// Largest absolute violation of either marginal by q.
  double residual(const Joint3& q) const { return residual(q.mass()); }

  double residual(std::span<const double> q) const {
    const auto n = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        double r1 = 0.0, r2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          r1 += q[(i * n + j) * n + k];
          r2 += q[(j * n + i) * n + k];
        }
        worst = std::max({worst, std::abs(r1 - y1_y_(i, k)), std::abs(r2 - y2_y_(i, k))});
      }
    return worst;
  }

 private:
  Joint2 y1_y_;
  Joint2 y2_y_;
};

inline MarginalConstraints constraints_from_joint(const Joint3& p) {
  return MarginalConstraints(marginal_pair(p, AxisPair::y1_y), marginal_pair(p, AxisPair::y2_y));
}

/// Conditional-product coupling q0 = p(y1|y) p(y2|y) p(y), a point of Delta_p.
inline Joint3 feasible_initial(const MarginalConstraints& c) {
  const auto n = c.size();
  const auto py = c.target_marginal();
  std::vector<double> mass(n * n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (py[k] > 0.0) mass[(i * n + j) * n + k] = c.y1_y()(i, k) * c.y2_y()(j, k) / py[k];
      }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= total;
  return Joint3(n, std::move(mass));
}

enum class StepRule { diminishing, line_search };

struct SolverConfig {
  double tol_objective = 1e-6;      // bits
  double tol_feasibility = 1e-9;
  std::size_t max_iterations = 10000;
  StepRule step_rule = StepRule::line_search;

  void validate() const {
    if (!(tol_objective > 0.0) || !(tol_feasibility > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "solver tolerances must be positive");
    }
    if (max_iterations == 0) throw Error(ErrorCode::invalid_argument, "max_iterations must be positive");
  }
};

struct SolveResult {
  Joint3 q;
  std::size_t iterations = 0;
  double objective = 0.0;           // H_q(Y | Y1, Y2), bits
  double objective_gap = 0.0;       // certified upper bound on optimum - objective
  double feasibility_residual = 0.0;
  bool converged = false;
};

namespace detail {

/// Dual multipliers fitted on the support of q.
struct DualFit {
  std::vector<std::ptrdiff_t> row_var, col_var;  // -1 where the marginal cell is zero
  Eigen::VectorXd dual;
  bool valid = true;

  /// Kraft sum of column (i, j): sum_y 2^{-(lambda(i,y) + mu(j,y))}; zero
  /// when no y is admissible.
  double kraft(std::size_t i, std::size_t j, std::size_t n) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (row_var[i * n + k] < 0 || col_var[j * n + k] < 0) continue;
      sum += std::exp2(-(dual(row_var[i * n + k]) + dual(col_var[j * n + k])));
    }
    return sum;
  }
};

inline DualFit fit_duals(std::span<const double> q, std::size_t n, const std::vector<double>& a,
                         const std::vector<double>& b) {
  // a[i*n+k] = p(y1=i, y=k), b[j*n+k] = p(y2=j, y=k)
  DualFit fit;
  auto& row_var = fit.row_var;
  auto& col_var = fit.col_var;
  row_var.assign(n * n, -1);
  col_var.assign(n * n, -1);
  std::ptrdiff_t vars = 0;
  for (std::size_t ik = 0; ik < n * n; ++ik)
    if (a[ik] > 0.0) row_var[ik] = vars++;
  for (std::size_t jk = 0; jk < n * n; ++jk)
    if (b[jk] > 0.0) col_var[jk] = vars++;

  std::vector<std::array<std::size_t, 3>> support;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (q[(i * n + j) * n + k] > 0.0) support.push_back({i, j, k});

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.size()), vars);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    const auto [i, j, k] = support[s];
    const auto r = static_cast<Eigen::Index>(s);
    if (row_var[i * n + k] < 0 || col_var[j * n + k] < 0) {
      fit.valid = false;
      return fit;
    }
    double m = 0.0;
    for (std::size_t c = 0; c < n; ++c) m += q[(i * n + j) * n + c];
    // Weight equations by column mass so nearly empty columns do not skew the fit.
    const double w = std::sqrt(m);
    A(r, row_var[i * n + k]) = w;
    A(r, col_var[j * n + k]) = w;
    rhs(r) = -w * std::log2(q[(i * n + j) * n + k] / m);
  }
  fit.dual = A.completeOrthogonalDecomposition().solve(rhs);
  return fit;
}

/// Upper bound on the program's optimum from dual multipliers fitted to the
/// stationarity conditions -log2 q(y|y1,y2) = lambda(y1,y) + mu(y2,y) on the
/// support of q (least squares weighted by column mass). The dual is
///   min sum lambda p(y1,y) + sum mu p(y2,y)
///   s.t. sum_y 2^{-(lambda(y1,y) + mu(y2,y))} <= 1 for every (y1, y2),
/// and any multipliers are made feasible by a uniform shift.
inline double dual_upper_bound(std::span<const double> q, std::size_t n, const std::vector<double>& a,
                               const std::vector<double>& b) {
  const auto fit = fit_duals(q, n, a, b);
  if (!fit.valid) return std::numeric_limits<double>::infinity();
  const auto& dual = fit.dual;
  double bound = 0.0;
  for (std::size_t ik = 0; ik < n * n; ++ik)
    if (fit.row_var[ik] >= 0) bound += dual(fit.row_var[ik]) * a[ik];
  for (std::size_t jk = 0; jk < n * n; ++jk)
    if (fit.col_var[jk] >= 0) bound += dual(fit.col_var[jk]) * b[jk];

  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double kraft = fit.kraft(i, j, n);
      if (kraft > 0.0) shift = std::max(shift, std::log2(kraft));
    }
  return bound + shift;
}

/// Pairwise Frank-Wolfe over the product of per-y transportation polytopes,
/// followed by Newton refinement on the face of the final iterate.
class MaxEntropySolver {
 public:
  MaxEntropySolver(const MarginalConstraints& c, const SolverConfig& cfg)
      : c_(c), cfg_(cfg), n_(c.size()), a_(n_ * n_), b_(n_ * n_), py_(c.target_marginal()) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < n_; ++k) {
        a_[i * n_ + k] = c.y1_y()(i, k);
        b_[i * n_ + k] = c.y2_y()(i, k);
      }
    const auto q0 = feasible_initial(c);
    q_.assign(q0.mass().begin(), q0.mass().end());
    atoms_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      if (py_[k] <= 0.0) continue;
      atoms_[k].push_back({slice(q_, k), 1.0});
    }
  }

  SolveResult run() {
    constexpr std::size_t kPolishEvery = 50;
    std::size_t it = 0;
    double fw_gap = std::numeric_limits<double>::infinity();
    std::optional<SolveResult> best;
    auto consider = [&](SolveResult candidate) {
      if (!best || candidate.objective_gap < best->objective_gap) best = std::move(candidate);
    };
    for (; it < cfg_.max_iterations; ++it) {
      compute_directions();
      fw_gap = std::accumulate(gap_.begin(), gap_.end(), 0.0);
      if (it % kPolishEvery == 0 || fw_gap <= cfg_.tol_objective) {
        // The face search is costly; run it on a geometric schedule.
        const bool thorough = std::has_single_bit(it / kPolishEvery + 1) || fw_gap <= cfg_.tol_objective;
        if (auto refined = polished_result(it, thorough); refined.converged) return refined;
        else consider(std::move(refined));
      }
      if (fw_gap <= cfg_.tol_objective) break;
      if (cfg_.step_rule == StepRule::diminishing) {
        diminishing_step(it);
      } else if (!pairwise_step()) {
        break;
      }
    }
    consider(finish(q_, it, fw_gap));
    if (!best->converged) consider(polished_result(it, true));
    return std::move(*best);
  }

 private:
  struct Atom {
    std::vector<double> cells;  // n x n slice, rows y1, cols y2
    double weight;
  };

  double a(std::size_t i, std::size_t k) const { return a_[i * n_ + k]; }
  double b(std::size_t j, std::size_t k) const { return b_[j * n_ + k]; }
  bool admissible(std::size_t i, std::size_t j, std::size_t k) const {
    return a(i, k) > 0.0 && b(j, k) > 0.0;
  }
  std::size_t at(std::size_t i, std::size_t j, std::size_t k) const { return (i * n_ + j) * n_ + k; }

  std::vector<double> slice(const std::vector<double>& q, std::size_t k) const {
    std::vector<double> s(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) s[i * n_ + j] = q[at(i, j, k)];
    return s;
  }

  double objective(const std::vector<double>& q) const { return conditional_entropy_of_target(q, n_); }

  std::vector<double> column_mass(const std::vector<double>& q) const {
    std::vector<double> m(n_ * n_, 0.0);
    for (std::size_t col = 0; col < n_ * n_; ++col)
      for (std::size_t k = 0; k < n_; ++k) m[col] += q[col * n_ + k];
    return m;
  }

  // Gradient of H(Y|Y1,Y2) is -log2 q(y|y1,y2). Zero cells of occupied
  // columns have an infinite gradient and are capped at the largest finite
  // entry plus one bit. Cells of empty columns receive a supergradient
  // derived from the transportation duals (see compute_directions).
  void compute_gradient() {
    grad_.assign(q_.size(), 0.0);
    colmass_ = column_mass(q_);
    double max_finite = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k) {
          const double v = q_[at(i, j, k)];
          if (v > 0.0) {
            grad_[at(i, j, k)] = -std::log2(v / colmass_[i * n_ + j]);
            max_finite = std::max(max_finite, grad_[at(i, j, k)]);
          }
        }
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k)
          if (colmass_[i * n_ + j] > 0.0 && q_[at(i, j, k)] <= 0.0 && admissible(i, j, k)) {
            grad_[at(i, j, k)] = max_finite + 1.0;
          }
  }

  std::vector<double> slice_gain(std::size_t k) const {
    std::vector<double> g(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) g[i * n_ + j] = grad_[at(i, j, k)];
    return g;
  }

  TransportPlan lmo(std::size_t k, bool occupied_only) const {
    std::vector<double> supply(n_), demand(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      supply[i] = a(i, k);
      demand[i] = b(i, k);
    }
    std::vector<char> allowed;
    if (occupied_only) {
      allowed.assign(n_ * n_, 0);
      for (std::size_t col = 0; col < n_ * n_; ++col) allowed[col] = colmass_[col] > 0.0;
    }
    const auto gain = slice_gain(k);
    auto plan = solve_transport(gain, supply, demand, allowed);
    // Round-off flows would open columns holding ~1e-16 mass, where the
    // linearization is useless and the iterate stalls.
    const double dust = 1e-13 * py_[k];
    for (double& x : plan.flow)
      if (x <= dust) x = 0.0;
    return plan;
  }

  // Fills fw_vertex_, gap_ (Frank-Wolfe gap per slice) for the current iterate.
  void compute_directions() {
    compute_gradient();
    fw_vertex_.assign(n_, {});
    gap_.assign(n_, 0.0);
    std::vector<TransportPlan> plans(n_);
    bool has_empty = false;
    for (std::size_t col = 0; col < n_ * n_; ++col) has_empty |= colmass_[col] <= 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      if (py_[k] > 0.0) plans[k] = lmo(k, has_empty);
    }
    if (has_empty) {
      // Empty column (i,j): any g with sum_k 2^{-g_k} <= 1 is a supergradient.
      // Start from the dual bound w_k = u_ik + v_jk and lift it until the
      // Kraft sum is at most one.
      std::vector<char> resolve(n_, 0);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
          if (colmass_[i * n_ + j] > 0.0) continue;
          double kraft = 0.0;
          for (std::size_t k = 0; k < n_; ++k)
            if (admissible(i, j, k)) {
              const double w = plans[k].row_potential[i] + plans[k].col_potential[j];
              grad_[at(i, j, k)] = w;
              kraft += std::exp2(-w);
            }
          const double lift = kraft > 1.0 ? std::log2(kraft) : 0.0;
          if (lift <= 0.0) continue;
          for (std::size_t k = 0; k < n_; ++k)
            if (admissible(i, j, k)) {
              grad_[at(i, j, k)] += lift;
              resolve[k] = 1;
            }
        }
      for (std::size_t k = 0; k < n_; ++k)
        if (resolve[k]) plans[k] = lmo(k, false);
    }
    for (std::size_t k = 0; k < n_; ++k) {
      if (py_[k] <= 0.0) continue;
      double current = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) current += grad_[at(i, j, k)] * q_[at(i, j, k)];
      gap_[k] = std::max(0.0, plans[k].value - current);
      fw_vertex_[k] = std::move(plans[k].flow);
    }
  }

  // Exact line search of phi(t) = H(q + t d) on [0, t_max] for a direction d
  // supported on slice k. phi is concave; bisect on its derivative.
  double line_search(std::size_t k, const std::vector<double>& d, double t_max) const {
    auto derivative = [&](double t) {
      double deriv = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
          const double dij = d[i * n_ + j];
          if (dij == 0.0) continue;
          const double v = q_[at(i, j, k)] + t * dij;
          const double m = colmass_[i * n_ + j] + t * dij;
          if (v > 0.0 && m > 0.0) deriv -= dij * std::log2(v / m);
        }
      return deriv;
    };
    auto value = [&](double t) {
      auto trial = q_;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) trial[at(i, j, k)] = std::max(0.0, trial[at(i, j, k)] + t * d[i * n_ + j]);
      return objective(trial);
    };
    double lo = 0.0, hi = t_max;
    for (int iter = 0; iter < 80 && hi - lo > 1e-17; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (derivative(mid) > 0.0) lo = mid; else hi = mid;
    }
    double t = 0.5 * (lo + hi);
    const double f0 = value(0.0);
    double ft = value(t);
    const double fmax = value(t_max);
    if (fmax >= ft) {
      t = t_max;
      ft = fmax;
    }
    return ft > f0 ? t : 0.0;
  }

  void rebuild_slice(std::size_t k) {
    std::vector<double> s(n_ * n_, 0.0);
    for (const auto& atom : atoms_[k])
      for (std::size_t c = 0; c < n_ * n_; ++c) s[c] += atom.weight * atom.cells[c];
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) q_[at(i, j, k)] = s[i * n_ + j];
  }

  std::size_t find_or_add_atom(std::size_t k, const std::vector<double>& cells) {
    auto& atoms = atoms_[k];
    const double tol = 1e-15 * std::max(py_[k], 1e-300);
    for (std::size_t idx = 0; idx < atoms.size(); ++idx) {
      bool same = true;
      for (std::size_t c = 0; c < cells.size() && same; ++c) same = std::abs(atoms[idx].cells[c] - cells[c]) <= tol;
      if (same) return idx;
    }
    atoms.push_back({cells, 0.0});
    return atoms.size() - 1;
  }

  // One pairwise step on the slice with the largest pairwise gap.
  // Returns false when no slice admits progress.
  bool pairwise_step() {
    std::size_t best_k = n_;
    std::size_t best_away = 0;
    double best_gap = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      if (py_[k] <= 0.0 || gap_[k] <= 0.0) continue;
      const auto g = slice_gain(k);
      double fw_value = 0.0;
      for (std::size_t c = 0; c < n_ * n_; ++c) fw_value += g[c] * fw_vertex_[k][c];
      for (std::size_t idx = 0; idx < atoms_[k].size(); ++idx) {
        double away_value = 0.0;
        for (std::size_t c = 0; c < n_ * n_; ++c) away_value += g[c] * atoms_[k][idx].cells[c];
        if (fw_value - away_value > best_gap) {
          best_gap = fw_value - away_value;
          best_k = k;
          best_away = idx;
        }
      }
    }
    if (best_k == n_) return false;

    const std::size_t k = best_k;
    const std::size_t fw_idx = find_or_add_atom(k, fw_vertex_[k]);
    if (fw_idx == best_away) {
      return false;
    }
    std::vector<double> d(n_ * n_);
    for (std::size_t c = 0; c < n_ * n_; ++c) d[c] = atoms_[k][fw_idx].cells[c] - atoms_[k][best_away].cells[c];
    const double t_max = atoms_[k][best_away].weight;
    const double t = line_search(k, d, t_max);
    if (t <= 0.0) {
      if (atoms_[k][fw_idx].weight == 0.0) atoms_[k].erase(atoms_[k].begin() + static_cast<std::ptrdiff_t>(fw_idx));
      // Fall back to a plain Frank-Wolfe step toward the vertex.
      return frank_wolfe_step(k, std::nullopt);
    }
    atoms_[k][fw_idx].weight += t;
    atoms_[k][best_away].weight -= t;
    if (t >= t_max) atoms_[k][best_away].weight = 0.0;
    absorb_small_atoms(k, fw_idx);
    rebuild_slice(k);
    return true;
  }

  // Atoms left with a sliver of weight keep columns open at ~1e-15 mass,
  // where the iterate stalls. Their weight moves to the receiving atom.
  void absorb_small_atoms(std::size_t k, std::size_t receiver) {
    constexpr double kAtomFloor = 1e-10;
    auto& atoms = atoms_[k];
    double moved = 0.0;
    for (std::size_t idx = 0; idx < atoms.size(); ++idx)
      if (idx != receiver && atoms[idx].weight <= kAtomFloor) {
        moved += atoms[idx].weight;
        atoms[idx].weight = -1.0;
      }
    atoms[receiver].weight += moved;
    std::erase_if(atoms, [](const Atom& atom) { return atom.weight < 0.0; });
  }

  bool frank_wolfe_step(std::size_t k, std::optional<double> fixed_step) {
    std::vector<double> d(n_ * n_);
    const auto current = slice(q_, k);
    for (std::size_t c = 0; c < n_ * n_; ++c) d[c] = fw_vertex_[k][c] - current[c];
    const double t = fixed_step ? *fixed_step : line_search(k, d, 1.0);
    if (t <= 0.0) return false;
    for (auto& atom : atoms_[k]) atom.weight *= (1.0 - t);
    const std::size_t idx = find_or_add_atom(k, fw_vertex_[k]);
    atoms_[k][idx].weight += t;
    absorb_small_atoms(k, idx);
    rebuild_slice(k);
    return true;
  }

  void diminishing_step(std::size_t it) {
    const double t = 2.0 / (static_cast<double>(it) + 2.0);
    for (std::size_t k = 0; k < n_; ++k)
      if (py_[k] > 0.0) frank_wolfe_step(k, t);
  }

  // Newton's method on the face {cells positive in q}, in the null space of
  // the marginal constraints. A column whose mass collapses below
  // kColumnDrop is removed from the face and the remaining cells are
  // re-projected onto the marginals. Returns the iteration count.
  std::size_t newton_polish(std::vector<double>& q, double mu = 0.0) const {
    constexpr double kColumnDrop = 1e-11;
    std::vector<std::ptrdiff_t> row_con(n_ * n_, -1), col_con(n_ * n_, -1);
    Eigen::Index cons = 0;
    for (std::size_t ik = 0; ik < n_ * n_; ++ik)
      if (a_[ik] > 0.0) row_con[ik] = cons++;
    for (std::size_t jk = 0; jk < n_ * n_; ++jk)
      if (b_[jk] > 0.0) col_con[jk] = cons++;
    Eigen::VectorXd rhs(cons);
    for (std::size_t ik = 0; ik < n_ * n_; ++ik)
      if (row_con[ik] >= 0) rhs(row_con[ik]) = a_[ik];
    for (std::size_t jk = 0; jk < n_ * n_; ++jk)
      if (col_con[jk] >= 0) rhs(col_con[jk]) = b_[jk];

    auto value = [&](const std::vector<std::size_t>& cells, const Eigen::VectorXd& x) {
      std::vector<double> full(q.size(), 0.0);
      double barrier = 0.0;
      for (std::size_t s = 0; s < cells.size(); ++s) {
        full[cells[s]] = x(static_cast<Eigen::Index>(s));
        if (mu > 0.0) barrier += mu * std::log(full[cells[s]]);
      }
      return objective(full) * std::log(2.0) + barrier;  // nats
    };

    std::vector<std::size_t> cells;
    for (std::size_t c = 0; c < q.size(); ++c)
      if (q[c] > 0.0) cells.push_back(c);

    std::size_t it = 0;
    bool rebuild = true;
    Eigen::MatrixXd A, Z;
    Eigen::VectorXd x;
    const std::size_t max_its = mu > 0.0 ? 50 : 200;
    while (it < max_its) {
      const auto S = static_cast<Eigen::Index>(cells.size());
      if (S == 0) return it;
      if (rebuild) {
        A = Eigen::MatrixXd::Zero(cons, S);
        x.resize(S);
        for (Eigen::Index s = 0; s < S; ++s) {
          const std::size_t c = cells[static_cast<std::size_t>(s)];
          const std::size_t k = c % n_, j = (c / n_) % n_, i = c / (n_ * n_);
          if (row_con[i * n_ + k] < 0 || col_con[j * n_ + k] < 0) return it;
          A(row_con[i * n_ + k], s) = 1.0;
          A(col_con[j * n_ + k], s) = 1.0;
          x(s) = q[c];
        }
        // Restore feasibility on the current face with a minimum-norm correction.
        const Eigen::VectorXd fix = A.completeOrthogonalDecomposition().solve(rhs - A * x);
        if ((x + fix).minCoeff() <= 0.0) return it;
        x += fix;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
        const Eigen::Index rank = qr.rank();
        if (rank >= S) break;
        const Eigen::MatrixXd Q = qr.householderQ();
        Z = Q.rightCols(S - rank);
        rebuild = false;
      }

      std::vector<double> colm(n_ * n_, 0.0);
      for (Eigen::Index s = 0; s < S; ++s) colm[cells[static_cast<std::size_t>(s)] / n_] += x(s);
      Eigen::VectorXd g(S);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(S, S);
      for (Eigen::Index s = 0; s < S; ++s) {
        const std::size_t col = cells[static_cast<std::size_t>(s)] / n_;
        g(s) = -std::log(x(s) / colm[col]) + mu / x(s);
        H(s, s) -= 1.0 / x(s) + mu / (x(s) * x(s));
        for (Eigen::Index t = 0; t < S; ++t)
          if (cells[static_cast<std::size_t>(t)] / n_ == col) H(s, t) += 1.0 / colm[col];
      }
      const Eigen::VectorXd gr = Z.transpose() * g;
      const Eigen::MatrixXd negH = -(Z.transpose() * H * Z);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(negH);
      const auto& evals = eig.eigenvalues();
      const double cutoff = 1e-12 * std::max(1.0, evals.cwiseAbs().maxCoeff());
      Eigen::VectorXd coeff = eig.eigenvectors().transpose() * gr;
      for (Eigen::Index e = 0; e < coeff.size(); ++e) coeff(e) = evals(e) > cutoff ? coeff(e) / evals(e) : 0.0;
      const Eigen::VectorXd v = eig.eigenvectors() * coeff;
      const double decrement = gr.dot(v);
      ++it;
      // Barrier stages only need to be roughly centered.
      if (!(decrement > (mu > 0.0 ? 1e-3 * mu : 1e-26))) break;
      const Eigen::VectorXd dx = Z * v;

      double t = 1.0;
      for (Eigen::Index s = 0; s < S; ++s)
        if (dx(s) < 0.0) t = std::min(t, -0.99 * x(s) / dx(s));
      const double f0 = value(cells, x);
      bool accepted = false;
      double f1 = f0;
      for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
        const Eigen::VectorXd trial = x + t * dx;
        if ((trial.array() <= 0.0).any()) continue;
        if (const double ft = value(cells, trial); ft >= f0 + 0.25 * t * decrement) {
          x = trial;
          f1 = ft;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      // Stalled: blocked steps that no longer move the objective.
      const bool stalled = t < 1e-6 && f1 - f0 <= 1e-15 * std::max(1.0, std::abs(f0));

      // Drop collapsing columns.
      std::fill(colm.begin(), colm.end(), 0.0);
      for (Eigen::Index s = 0; s < S; ++s) colm[cells[static_cast<std::size_t>(s)] / n_] += x(s);
      std::vector<std::size_t> kept;
      for (Eigen::Index s = 0; s < S; ++s) {
        const std::size_t c = cells[static_cast<std::size_t>(s)];
        q[c] = x(s);
        if (colm[c / n_] < kColumnDrop) {
          q[c] = 0.0;
          rebuild = true;
        } else {
          kept.push_back(c);
        }
      }
      if (rebuild) cells = std::move(kept);
      if (stalled && !rebuild) break;
    }
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t s = 0; s < cells.size(); ++s) q[cells[s]] = x(static_cast<Eigen::Index>(s));
    return it;
  }

  // Newton on the face of q. A closed column whose Kraft sum under the
  // fitted duals exceeds one shows the face is wrong: it is reopened by a
  // short step toward a transport vertex that loads it, and Newton reruns.
  SolveResult polished_result(std::size_t it, bool thorough) const {
    auto q = q_;
    const std::size_t newton_its = thorough ? polish(q) : newton_polish(q);
    return finish(q, it + newton_its, std::numeric_limits<double>::infinity());
  }

  std::size_t polish(std::vector<double>& q) const {
    constexpr int kRounds = 8;
    constexpr double kOpenStep = 0.05;
    auto plain = q;
    std::size_t its = newton_polish(plain);
    if (finish(plain, its, std::numeric_limits<double>::infinity()).converged) {
      q = std::move(plain);
      return its;
    }
    its += barrier_polish(q);
    double previous = -std::numeric_limits<double>::infinity();
    for (int round = 0; round < kRounds; ++round) {
      const double current = objective(q);
      if (!(current > previous + 1e-12)) break;
      previous = current;
      const auto colm = column_mass(q);
      const auto fit = fit_duals(q, n_, a_, b_);
      if (!fit.valid) break;
      std::vector<char> allowed(n_ * n_, 0);
      std::vector<double> gain(n_ * n_, 0.0);
      bool reopen = false;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
          const std::size_t col = i * n_ + j;
          if (colm[col] > 0.0) {
            allowed[col] = 1;
          } else if (const double kraft = fit.kraft(i, j, n_); kraft > 0.0 && std::log2(kraft) > 0.1 * cfg_.tol_objective) {
            allowed[col] = 1;
            gain[col] = 1.0;
            reopen = true;
          }
        }
      if (!reopen) break;
      for (std::size_t k = 0; k < n_; ++k) {
        if (py_[k] <= 0.0) continue;
        std::vector<double> supply(n_), demand(n_);
        for (std::size_t i = 0; i < n_; ++i) {
          supply[i] = a(i, k);
          demand[i] = b(i, k);
        }
        const auto plan = solve_transport(gain, supply, demand, allowed);
        for (std::size_t i = 0; i < n_; ++i)
          for (std::size_t j = 0; j < n_; ++j)
            q[at(i, j, k)] = (1.0 - kOpenStep) * q[at(i, j, k)] + kOpenStep * plan(i, j);
      }
      its += barrier_polish(q);
    }
    return its;
  }

  // Newton alone tends to crush a column whose optimal mass is small but
  // positive: scaling a whole column is a flat direction of H(Y|Y1,Y2), so
  // steps run into the boundary. A short log-barrier continuation keeps the
  // iterate interior until the face has settled.
  std::size_t barrier_polish(std::vector<double>& q) const {
    std::size_t its = 0;
    for (double mu : {1e-4, 1e-6, 1e-8, 1e-10, 1e-12}) its += newton_polish(q, mu);
    return its + newton_polish(q);
  }

  SolveResult finish(const std::vector<double>& q, std::size_t iterations, double fw_gap) const {
    std::vector<double> mass(q.size());
    for (std::size_t c = 0; c < q.size(); ++c) mass[c] = std::max(0.0, q[c]);
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (double& m : mass) m /= total;
    const double obj = objective(mass);
    const double dual_gap = std::max(0.0, dual_upper_bound(mass, n_, a_, b_) - obj);
    const double gap = std::min(fw_gap, dual_gap);
    const double residual = c_.residual(mass);
    SolveResult r{Joint3(n_, std::move(mass)), iterations, obj, gap, residual, false};
    r.converged = gap <= cfg_.tol_objective && residual <= cfg_.tol_feasibility;
    return r;
  }

  const MarginalConstraints& c_;
  SolverConfig cfg_;
  std::size_t n_;
  std::vector<double> a_, b_, py_;
  std::vector<double> q_;
  std::vector<std::vector<Atom>> atoms_;
  std::vector<double> grad_, colmass_, gap_;
  std::vector<std::vector<double>> fw_vertex_;
};

}  // namespace detail

/// Maximizes H_q(Y | Y1, Y2) over Delta_p. A result with converged = false
/// is the best iterate found within the iteration budget.
inline SolveResult solve_qstar(const MarginalConstraints& c, const SolverConfig& cfg = {}) {
  cfg.validate();
  return detail::MaxEntropySolver(c, cfg).run();
}

/// Exhaustive grid search over Delta_p, used as an independent check of
/// solve_qstar. Each y-slice is a transportation polytope parametrized by
/// its leading (rows-1) x (cols-1) block of cells.
inline Joint3 brute_force_qstar(const MarginalConstraints& c, std::size_t grid_resolution) {
  constexpr std::size_t kMaxFreeParameters = 6;
  constexpr double kMaxGridPoints = 2e9;
  if (grid_resolution == 0) throw Error(ErrorCode::invalid_argument, "grid resolution must be positive");
  const auto n = c.size();
  const auto py = c.target_marginal();

  // Support of each y-slice; the free block is (rows - 1) x (cols - 1).
  std::vector<std::vector<std::size_t>> slice_rows(n), slice_cols(n);
  std::size_t free_parameters = 0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (c.y1_y()(i, k) > 0.0) slice_rows[k].push_back(i);
      if (c.y2_y()(i, k) > 0.0) slice_cols[k].push_back(i);
    }
    if (!slice_rows[k].empty() && !slice_cols[k].empty())
      free_parameters += (slice_rows[k].size() - 1) * (slice_cols[k].size() - 1);
  }
  if (free_parameters > kMaxFreeParameters) {
    throw Error(ErrorCode::too_many_parameters, "brute force needs " + std::to_string(free_parameters) +
                                                    " free parameters, more than " +
                                                    std::to_string(kMaxFreeParameters));
  }
  if (std::pow(static_cast<double>(grid_resolution + 1), static_cast<double>(free_parameters)) > kMaxGridPoints) {
    throw Error(ErrorCode::too_many_parameters, "brute-force grid too large to enumerate");
  }

  // Candidate slices (n x n each) per y value.
  std::vector<std::vector<std::vector<double>>> candidates(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& rows = slice_rows[k];
    const auto& cols = slice_cols[k];
    if (rows.empty() || cols.empty()) {
      candidates[k].push_back(std::vector<double>(n * n, 0.0));
      continue;
    }
    const std::size_t R = rows.size(), C = cols.size();
    const std::size_t dims = (R - 1) * (C - 1);

    // Completes a slice from its free block; false if a derived cell is negative.
    auto complete = [&](std::vector<double>& s) {
      const double tol = 1e-15;
      for (std::size_t r = 0; r + 1 < R; ++r) {
        double rest = c.y1_y()(rows[r], k);
        for (std::size_t q = 0; q + 1 < C; ++q) rest -= s[rows[r] * n + cols[q]];
        if (rest < -tol) return false;
        s[rows[r] * n + cols[C - 1]] = std::max(0.0, rest);
      }
      for (std::size_t q = 0; q < C; ++q) {
        double rest = c.y2_y()(cols[q], k);
        for (std::size_t r = 0; r + 1 < R; ++r) rest -= s[rows[r] * n + cols[q]];
        if (rest < -tol) return false;
        s[rows[R - 1] * n + cols[q]] = std::max(0.0, rest);
      }
      return true;
    };

    if (dims == 0) {
      std::vector<double> s(n * n, 0.0);
      complete(s);
      candidates[k].push_back(std::move(s));
    } else if (dims == 1) {
      const double ar = c.y1_y()(rows[0], k), bc = c.y2_y()(cols[0], k);
      const double lo = std::max(0.0, ar + bc - py[k]);
      const double hi = std::min(ar, bc);
      for (std::size_t g = 0; g <= grid_resolution; ++g) {
        std::vector<double> s(n * n, 0.0);
        s[rows[0] * n + cols[0]] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_resolution);
        if (complete(s)) candidates[k].push_back(std::move(s));
      }
    } else {
      std::vector<std::size_t> odometer(dims, 0);
      for (;;) {
        std::vector<double> s(n * n, 0.0);
        for (std::size_t d = 0; d < dims; ++d) {
          const std::size_t r = d / (C - 1), q = d % (C - 1);
          const double hi = std::min(c.y1_y()(rows[r], k), c.y2_y()(cols[q], k));
          s[rows[r] * n + cols[q]] = hi * static_cast<double>(odometer[d]) / static_cast<double>(grid_resolution);
        }
        if (complete(s)) candidates[k].push_back(std::move(s));
        std::size_t d = 0;
        while (d < dims && ++odometer[d] > grid_resolution) odometer[d++] = 0;
        if (d == dims) break;
      }
    }
    if (candidates[k].empty()) throw Error(ErrorCode::infeasible, "empty transportation polytope");
  }

  // H(Y|Y1,Y2) = sum of -q log q over cells + sum of m log m over columns;
  // the first part separates across slices.
  std::vector<std::vector<double>> slice_entropy(n);
  for (std::size_t k = 0; k < n; ++k)
    for (const auto& s : candidates[k]) slice_entropy[k].push_back(entropy(s));

  std::vector<std::size_t> choice(n, 0), best(n, 0);
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> colm(n * n);
  for (;;) {
    double value = 0.0;
    std::fill(colm.begin(), colm.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      value += slice_entropy[k][choice[k]];
      const auto& s = candidates[k][choice[k]];
      for (std::size_t col = 0; col < n * n; ++col) colm[col] += s[col];
    }
    for (double m : colm)
      if (m > 0.0) value += m * std::log2(m);
    if (value > best_value + 1e-15) {
      best_value = value;
      best = choice;
    }
    std::size_t k = 0;
    while (k < n && ++choice[k] >= candidates[k].size()) choice[k++] = 0;
    if (k == n) break;
  }

  std::vector<double> mass(n * n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = candidates[k][best[k]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) mass[(i * n + j) * n + k] = s[i * n + j];
  }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= total;
  return Joint3(n, std::move(mass));
}

/// Residuals of the five PID bookkeeping identities against p.
struct ConsistencyReport {
  static constexpr std::array<const char*, 5> kNames = {"r_plus_u1", "r_plus_u2", "u1_plus_s",
                                                         "u2_plus_s", "r_minus_s"};
  std::array<double, 5> residuals{};
  double tolerance = 0.0;
  bool passed = false;

  double max_residual() const { return *std::max_element(residuals.begin(), residuals.end()); }
};

struct PIDResult {
  double r = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double s = 0.0;
  double total = 0.0;  // I_p(Y1,Y2;Y)
  std::array<double, 4> unclamped{};
  bool negative_component = false;  // a component fell below -1e-6
  Joint3 q_star = Joint3::uniform(1);
  std::size_t iterations = 0;
  double objective_gap = 0.0;
  double feasibility_residual = 0.0;
  bool converged = true;
  std::optional<ConsistencyReport> consistency;

  std::array<double, 4> components() const { return {r, u1, u2, s}; }
};

inline constexpr double kClampTolerance = 1e-6;

/// Evaluates R, U1, U2 and S at a solution q* of the program for p.
inline PIDResult pid_from_solution(const Joint3& p, const Joint3& q_star, double feasibility_tol = 1e-8) {
  if (p.size() != q_star.size()) throw Error(ErrorCode::invalid_argument, "p and q* differ in size");
  const auto c = constraints_from_joint(p);
  const double residual = c.residual(q_star);
  if (residual > feasibility_tol) {
    throw Error(ErrorCode::infeasible,
                "q* violates the pairwise marginals of p by " + std::to_string(residual));
  }
  PIDResult out;
  out.q_star = q_star;
  out.total = joint_mi(p);
  out.feasibility_residual = residual;
  out.unclamped = {interaction_information(q_star), conditional_mi(q_star, Axis::y1, Axis::y, Axis::y2),
                   conditional_mi(q_star, Axis::y2, Axis::y, Axis::y1), out.total - joint_mi(q_star)};
  std::array<double, 4> clamped{};
  for (std::size_t m = 0; m < 4; ++m) {
    const double v = out.unclamped[m];
    if (v < -kClampTolerance) out.negative_component = true;
    clamped[m] = (v < 0.0 && v >= -kClampTolerance) ? 0.0 : v;
  }
  out.r = clamped[0];
  out.u1 = clamped[1];
  out.u2 = clamped[2];
  out.s = clamped[3];
  return out;
}

inline ConsistencyReport check_consistency(const PIDResult& result, const Joint3& p, double tol = 1e-4) {
  const double i1 = mutual_information(p, Axis::y1, Axis::y);
  const double i2 = mutual_information(p, Axis::y2, Axis::y);
  const double c1 = conditional_mi(p, Axis::y1, Axis::y, Axis::y2);
  const double c2 = conditional_mi(p, Axis::y2, Axis::y, Axis::y1);
  const double ii = interaction_information(p);
  ConsistencyReport rep;
  rep.tolerance = tol;
  rep.residuals = {std::abs(result.r + result.u1 - i1), std::abs(result.r + result.u2 - i2),
                   std::abs(result.u1 + result.s - c1), std::abs(result.u2 + result.s - c2),
                   std::abs(result.r - result.s - ii)};
  rep.passed = rep.max_residual() <= tol;
  return rep;
}

inline constexpr double kDegenerateTotal = 1e-9;

/// Full decomposition of a joint p: constraints, q*, components, consistency.
inline PIDResult decompose(const Joint3& p, const SolverConfig& cfg = {}, double consistency_tol = 1e-4) {
  cfg.validate();
  const auto c = constraints_from_joint(p);
  PIDResult result;
  if (joint_mi(p) <= kDegenerateTotal) {
    const auto q0 = feasible_initial(c);
    result.q_star = q0;
    result.total = joint_mi(p);
    result.feasibility_residual = c.residual(q0);
    result.converged = true;
  } else {
    auto solved = solve_qstar(c, cfg);
    result = pid_from_solution(p, solved.q, std::max(cfg.tol_feasibility, 1e-8));
    result.iterations = solved.iterations;
    result.objective_gap = solved.objective_gap;
    result.converged = solved.converged;
  }
  result.consistency = check_consistency(result, p, consistency_tol);
  return result;
}

/// Dataset to decomposition: empirical joint (with optional add-lambda
/// smoothing) followed by decompose().
inline PIDResult convert(const TripleDataset& data, double smoothing = 0.0, const SolverConfig& cfg = {}) {
  return decompose(empirical_joint(data, smoothing), cfg);
}

}  // namespace pidlab

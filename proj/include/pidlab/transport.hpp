#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "pidlab/error.hpp"

namespace pidlab {

/// Optimal plan of a transportation problem plus dual potentials.
/// For every allowed cell between active rows and columns,
/// gain(i, j) <= row_potential[i] + col_potential[j], with equality on
/// cells that carry flow. Potentials of inactive rows/columns are NaN.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> flow;
  std::vector<double> row_potential;
  std::vector<double> col_potential;
  double value = 0.0;

  double operator()(std::size_t i, std::size_t j) const { return flow[i * cols + j]; }
};

/// Maximizes sum gain(i,j) * x(i,j) subject to row sums `supply`, column sums
/// `demand` and x >= 0, by successive shortest paths on the residual graph.
/// `allowed` (optional, row-major) masks out cells that must stay empty.
inline TransportPlan solve_transport(std::span<const double> gain, std::span<const double> supply,
                                     std::span<const double> demand,
                                     std::span<const char> allowed = {}) {
  const std::size_t R = supply.size();
  const std::size_t C = demand.size();
  if (gain.size() != R * C || (!allowed.empty() && allowed.size() != R * C)) {
    throw Error(ErrorCode::invalid_argument, "transport: gain matrix shape mismatch");
  }
  const double total_supply = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  const double scale = std::max(total_supply, total_demand);
  if (std::abs(total_supply - total_demand) > 1e-9 * std::max(1.0, scale)) {
    throw Error(ErrorCode::infeasible, "transport: supply and demand totals differ");
  }
  const double eps = 1e-14 * std::max(scale, std::numeric_limits<double>::min());

  TransportPlan plan;
  plan.rows = R;
  plan.cols = C;
  plan.flow.assign(R * C, 0.0);
  plan.row_potential.assign(R, std::numeric_limits<double>::quiet_NaN());
  plan.col_potential.assign(C, std::numeric_limits<double>::quiet_NaN());

  std::vector<double> left(supply.begin(), supply.end());
  std::vector<double> need(demand.begin(), demand.end());
  std::vector<char> row_active(R), col_active(C);
  for (std::size_t i = 0; i < R; ++i) row_active[i] = supply[i] > eps;
  for (std::size_t j = 0; j < C; ++j) col_active[j] = demand[j] > eps;
  auto usable = [&](std::size_t i, std::size_t j) {
    return row_active[i] && col_active[j] && (allowed.empty() || allowed[i * C + j]);
  };

  // Nodes: rows are [0, R), columns are [R, R + C).
  const std::size_t V = R + C;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(V);
  std::vector<std::ptrdiff_t> parent(V);

  // Distances only improve by more than a tolerance tied to the gain scale,
  // so rounding-level negative cycles cannot loop the parent pointers.
  double gain_scale = 1.0;
  for (double g : gain) gain_scale = std::max(gain_scale, std::abs(g));
  const double slack = 1e-11 * gain_scale;
  auto improves = [&](double candidate, double current) {
    return current == inf || candidate < current - slack;
  };

  // Bellman-Ford over the residual graph. Forward arcs row->col cost -gain;
  // backward arcs col->row cost +gain where flow is positive.
  auto shortest_paths = [&](auto&& is_source) {
    for (std::size_t v = 0; v < V; ++v) {
      dist[v] = is_source(v) ? 0.0 : inf;
      parent[v] = -1;
    }
    for (std::size_t round = 0; round < V; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
          if (!usable(i, j)) continue;
          const double c = -gain[i * C + j];
          if (dist[i] < inf && improves(dist[i] + c, dist[R + j])) {
            dist[R + j] = dist[i] + c;
            parent[R + j] = static_cast<std::ptrdiff_t>(i);
            changed = true;
          }
          if (plan.flow[i * C + j] > eps && dist[R + j] < inf && improves(dist[R + j] - c, dist[i])) {
            dist[i] = dist[R + j] - c;
            parent[i] = static_cast<std::ptrdiff_t>(R + j);
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
  };

  const std::size_t max_augmentations = 4 * (R * C + V) * (R * C + V) + 16;
  for (std::size_t augmentations = 0;; ++augmentations) {
    if (augmentations > max_augmentations) {
      throw Error(ErrorCode::infeasible, "transport: augmentation limit exceeded");
    }
    double remaining = 0.0;
    for (std::size_t i = 0; i < R; ++i) remaining += row_active[i] ? left[i] : 0.0;
    if (remaining <= eps * static_cast<double>(R + 1)) break;

    shortest_paths([&](std::size_t v) { return v < R && row_active[v] && left[v] > eps; });
    std::ptrdiff_t target = -1;
    for (std::size_t j = 0; j < C; ++j) {
      if (col_active[j] && need[j] > eps && dist[R + j] < inf &&
          (target < 0 || dist[R + j] < dist[static_cast<std::size_t>(target)])) {
        target = static_cast<std::ptrdiff_t>(R + j);
      }
    }
    if (target < 0) throw Error(ErrorCode::infeasible, "transport: no augmenting path");

    // Walk the parent chain. A repeated node means rounding left a negative
    // cycle in the residual graph; pushing flow around it is an improvement.
    std::vector<char> seen(V, 0);
    std::size_t v = static_cast<std::size_t>(target);
    while (parent[v] >= 0 && !seen[v]) {
      seen[v] = 1;
      v = static_cast<std::size_t>(parent[v]);
    }
    if (parent[v] >= 0) {
      double amount = inf;
      const std::size_t start = v;
      do {
        const auto u = static_cast<std::size_t>(parent[v]);
        if (u >= R) amount = std::min(amount, plan.flow[v * C + (u - R)]);
        v = u;
      } while (v != start);
      do {
        const auto u = static_cast<std::size_t>(parent[v]);
        if (u < R) {
          plan.flow[u * C + (v - R)] += amount;
        } else {
          double& f = plan.flow[v * C + (u - R)];
          f = f - amount <= eps ? 0.0 : f - amount;
        }
        v = u;
      } while (v != start);
      continue;
    }

    double bottleneck = need[static_cast<std::size_t>(target) - R];
    v = static_cast<std::size_t>(target);
    while (parent[v] >= 0) {
      const auto u = static_cast<std::size_t>(parent[v]);
      if (u >= R) bottleneck = std::min(bottleneck, plan.flow[v * C + (u - R)]);
      v = u;
    }
    bottleneck = std::min(bottleneck, left[v]);

    const std::size_t source = v;
    v = static_cast<std::size_t>(target);
    while (parent[v] >= 0) {
      const auto u = static_cast<std::size_t>(parent[v]);
      if (u < R) {
        plan.flow[u * C + (v - R)] += bottleneck;
      } else {
        double& f = plan.flow[v * C + (u - R)];
        f = std::max(0.0, f - bottleneck);
      }
      v = u;
    }
    left[source] -= bottleneck;
    need[static_cast<std::size_t>(target) - R] -= bottleneck;
  }

  // Potentials from a virtual source attached to every node.
  shortest_paths([&](std::size_t v) {
    return v < R ? static_cast<bool>(row_active[v]) : static_cast<bool>(col_active[v - R]);
  });
  for (std::size_t i = 0; i < R; ++i)
    if (row_active[i]) plan.row_potential[i] = dist[i];
  for (std::size_t j = 0; j < C; ++j)
    if (col_active[j]) plan.col_potential[j] = -dist[R + j];

  for (std::size_t k = 0; k < R * C; ++k) plan.value += gain[k] * plan.flow[k];
  return plan;
}

}  // namespace pidlab

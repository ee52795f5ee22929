#pragma once

// Reference computations written independently of the library code paths,
// used as test oracles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

/// Flat n^3 mass, index (a * n + b) * n + c.
using Cube = std::vector<double>;

inline double h(const std::vector<double>& p) {
  double out = 0.0;
  for (double x : p)
    if (x > 0.0) out += x * std::log(1.0 / x);
  return out / std::log(2.0);
}

/// Marginal over the axes flagged in `keep` (order a, b, c), flattened.
inline std::vector<double> marg(const Cube& q, std::size_t n, std::array<bool, 3> keep) {
  std::size_t dims = 0;
  for (bool k : keep) dims += k;
  std::vector<double> out(static_cast<std::size_t>(std::pow(n, dims)) + (dims == 0), 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        std::size_t idx = 0;
        const std::array<std::size_t, 3> v{a, b, c};
        for (std::size_t d = 0; d < 3; ++d)
          if (keep[d]) idx = idx * n + v[d];
        out[idx] += q[(a * n + b) * n + c];
      }
  return out;
}

// Entropy identities, one per quantity.
inline double H(const Cube& q, std::size_t n, bool a, bool b, bool c) { return h(marg(q, n, {a, b, c})); }

/// I(A;C) with A = y1 (axis 0), C = y (axis 2) etc., via H(X)+H(Y)-H(XY).
inline double mi(const Cube& q, std::size_t n, int x, int y) {
  std::array<bool, 3> kx{}, ky{}, kxy{};
  kx[x] = true;
  ky[y] = true;
  kxy[x] = kxy[y] = true;
  return h(marg(q, n, kx)) + h(marg(q, n, ky)) - h(marg(q, n, kxy));
}

/// I(X;Y|Z) = H(XZ) + H(YZ) - H(XYZ) - H(Z).
inline double cmi(const Cube& q, std::size_t n, int x, int y, int z) {
  std::array<bool, 3> kxz{}, kyz{}, kz{};
  kxz[x] = kxz[z] = true;
  kyz[y] = kyz[z] = true;
  kz[z] = true;
  return h(marg(q, n, kxz)) + h(marg(q, n, kyz)) - h(q) - h(marg(q, n, kz));
}

/// I(Y1,Y2;Y) = H(Y1Y2) + H(Y) - H(Y1Y2Y).
inline double joint_mi(const Cube& q, std::size_t n) {
  return H(q, n, true, true, false) + H(q, n, false, false, true) - h(q);
}

/// H(Y|Y1,Y2) = H(Y1Y2Y) - H(Y1Y2).
inline double cond_entropy(const Cube& q, std::size_t n) { return h(q) - H(q, n, true, true, false); }

struct Pid {
  double r = 0, u1 = 0, u2 = 0, s = 0;
};

inline Pid pid_at(const Cube& p, const Cube& q, std::size_t n) {
  Pid out;
  out.r = mi(q, n, 0, 1) - cmi(q, n, 0, 1, 2);
  out.u1 = cmi(q, n, 0, 2, 1);
  out.u2 = cmi(q, n, 1, 2, 0);
  out.s = joint_mi(p, n) - joint_mi(q, n);
  return out;
}

/// Maximizes a concave function on [lo, hi] by golden-section search.
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && b - a > 1e-15; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return f((a + b) / 2.0) >= std::max(f(lo), f(hi)) ? (a + b) / 2.0 : (f(lo) >= f(hi) ? lo : hi);
}

/// Optimal q for binary labels by nested golden-section search. Each
/// y-slice of Delta_p is a segment q(0,0,y) = t_y in [max(0, a+b-m), min(a, b)];
/// H(Y|Y1,Y2) is concave in (t_0, t_1), so the inner maximum is concave in t_0.
inline Cube binary_qstar(const Cube& p) {
  constexpr std::size_t n = 2;
  std::array<double, 2> a{}, b{}, m{}, lo{}, hi{};
  for (std::size_t y = 0; y < 2; ++y) {
    a[y] = p[(0 * n + 0) * n + y] + p[(0 * n + 1) * n + y];  // p(y1=0, y)
    b[y] = p[(0 * n + 0) * n + y] + p[(1 * n + 0) * n + y];  // p(y2=0, y)
    m[y] = a[y] + p[(1 * n + 0) * n + y] + p[(1 * n + 1) * n + y];
    lo[y] = std::max(0.0, a[y] + b[y] - m[y]);
    hi[y] = std::min(a[y], b[y]);
  }
  auto build = [&](double t0, double t1) {
    Cube q(8, 0.0);
    const std::array<double, 2> t{t0, t1};
    for (std::size_t y = 0; y < 2; ++y) {
      q[(0 * n + 0) * n + y] = t[y];
      q[(0 * n + 1) * n + y] = std::max(0.0, a[y] - t[y]);
      q[(1 * n + 0) * n + y] = std::max(0.0, b[y] - t[y]);
      q[(1 * n + 1) * n + y] = std::max(0.0, m[y] - a[y] - b[y] + t[y]);
    }
    return q;
  };
  auto inner = [&](double t0) {
    return golden_max([&](double t1) { return cond_entropy(build(t0, t1), n); }, lo[1], hi[1]);
  };
  const double t0 = golden_max([&](double t) { return cond_entropy(build(t, inner(t)), n); }, lo[0], hi[0]);
  return build(t0, inner(t0));
}

/// Krippendorff's alpha from value pairs directly:
///   alpha = 1 - (N - 1) * sum_u sum_{i != j in u} d(v_i, v_j) / (m_u - 1)
///               / sum_{i != j over all pairable values} d(v_i, v_j).
/// `metric` 0 nominal, 1 ordinal, 2 interval. Returns nullopt when undefined.
inline std::optional<double> alpha(const std::vector<std::vector<std::optional<double>>>& grid, int metric) {
  std::vector<std::vector<double>> units;
  for (const auto& row : grid) {
    std::vector<double> u;
    for (const auto& v : row)
      if (v) u.push_back(*v);
    if (u.size() >= 2) units.push_back(u);
  }
  std::vector<double> all;
  for (const auto& u : units) all.insert(all.end(), u.begin(), u.end());
  if (all.empty()) return std::nullopt;
  std::map<double, double> count;
  for (double v : all) count[v] += 1.0;
  auto d = [&](double x, double y) -> double {
    if (x == y) return 0.0;
    if (metric == 0) return 1.0;
    if (metric == 2) return (x - y) * (x - y);
    const double lo = std::min(x, y), hi = std::max(x, y);
    double span = 0.0;
    for (const auto& [v, c] : count)
      if (v >= lo && v <= hi) span += c;
    span -= (count[x] + count[y]) / 2.0;
    return span * span;
  };
  double within = 0.0;
  for (const auto& u : units) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j)
        if (i != j) s += d(u[i], u[j]);
    within += s / static_cast<double>(u.size() - 1);
  }
  double between = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j)
      if (i != j) between += d(all[i], all[j]);
  if (between <= 0.0) return std::nullopt;
  return 1.0 - (static_cast<double>(all.size()) - 1.0) * within / between;
}

}  // namespace oracle

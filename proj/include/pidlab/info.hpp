#pragma once

// Discrete information measures over two- and three-variable joints.
// Every quantity is reported in bits; 0 log 0 is taken as 0.

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "pidlab/error.hpp"
#include "pidlab/triple_dataset.hpp"

namespace pidlab {

inline constexpr double kMassTolerance = 1e-9;

namespace detail {

inline void validate_mass(std::span<const double> mass) {
  double total = 0.0;
  for (double m : mass) {
    if (!std::isfinite(m) || m < 0.0) {
      throw Error(ErrorCode::invalid_distribution, "distribution has a negative or non-finite entry");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::invalid_distribution,
                "distribution mass is " + std::to_string(total) + ", expected 1");
  }
}

/// p * log2(p / q), zero when p is zero.
inline double plogpq(double p, double q) { return p > 0.0 ? p * std::log2(p / q) : 0.0; }

}  // namespace detail

/// Two-variable joint p(a, b), row-major n1 x n2.
class Joint2 {
 public:
  Joint2(std::size_t n1, std::size_t n2, std::vector<double> mass)
      : n1_(n1), n2_(n2), mass_(std::move(mass)) {
    if (n1_ == 0 || n2_ == 0 || mass_.size() != n1_ * n2_) {
      throw Error(ErrorCode::invalid_distribution, "Joint2 shape does not match mass length");
    }
    detail::validate_mass(mass_);
  }

  std::size_t rows() const noexcept { return n1_; }
  std::size_t cols() const noexcept { return n2_; }
  double operator()(std::size_t a, std::size_t b) const { return mass_[a * n2_ + b]; }
  std::span<const double> mass() const noexcept { return mass_; }

  std::vector<double> row_marginal() const {
    std::vector<double> m(n1_, 0.0);
    for (std::size_t a = 0; a < n1_; ++a)
      for (std::size_t b = 0; b < n2_; ++b) m[a] += (*this)(a, b);
    return m;
  }

  std::vector<double> col_marginal() const {
    std::vector<double> m(n2_, 0.0);
    for (std::size_t a = 0; a < n1_; ++a)
      for (std::size_t b = 0; b < n2_; ++b) m[b] += (*this)(a, b);
    return m;
  }

 private:
  std::size_t n1_;
  std::size_t n2_;
  std::vector<double> mass_;
};

enum class Axis : std::size_t { y1 = 0, y2 = 1, y = 2 };

enum class AxisPair { y1_y, y2_y, y1_y2 };

/// Cubic joint q(y1, y2, y) over a shared support of size n.
/// Flat layout is row-major: index = (y1 * n + y2) * n + y.
class Joint3 {
 public:
  Joint3(std::size_t n, std::vector<double> mass) : n_(n), mass_(std::move(mass)) {
    if (n_ == 0 || mass_.size() != n_ * n_ * n_) {
      throw Error(ErrorCode::invalid_distribution, "Joint3 mass length must be size^3");
    }
    detail::validate_mass(mass_);
  }

  static Joint3 uniform(std::size_t n) {
    return Joint3(n, std::vector<double>(n * n * n, 1.0 / static_cast<double>(n * n * n)));
  }

  static Joint3 point(std::size_t n, std::size_t y1, std::size_t y2, std::size_t y) {
    std::vector<double> mass(n * n * n, 0.0);
    mass[(y1 * n + y2) * n + y] = 1.0;
    return Joint3(n, std::move(mass));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t index(std::size_t y1, std::size_t y2, std::size_t y) const noexcept {
    return (y1 * n_ + y2) * n_ + y;
  }
  double operator()(std::size_t y1, std::size_t y2, std::size_t y) const {
    return mass_[index(y1, y2, y)];
  }
  std::span<const double> mass() const noexcept { return mass_; }

  /// Applies the same label permutation to all three axes.
  Joint3 relabeled(std::span<const std::size_t> perm) const {
    std::vector<double> out(mass_.size());
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < n_; ++b)
        for (std::size_t c = 0; c < n_; ++c) out[index(perm[a], perm[b], perm[c])] = (*this)(a, b, c);
    return Joint3(n_, std::move(out));
  }

  /// Exchanges the roles of Y1 and Y2.
  Joint3 swapped_inputs() const {
    std::vector<double> out(mass_.size());
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < n_; ++b)
        for (std::size_t c = 0; c < n_; ++c) out[index(b, a, c)] = (*this)(a, b, c);
    return Joint3(n_, std::move(out));
  }

 private:
  std::size_t n_;
  std::vector<double> mass_;
};

inline double entropy(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

inline double entropy(const Joint2& j) { return entropy(j.mass()); }
inline double entropy(const Joint3& j) { return entropy(j.mass()); }

inline double mutual_information(const Joint2& j) {
  const auto pa = j.row_marginal();
  const auto pb = j.col_marginal();
  double mi = 0.0;
  for (std::size_t a = 0; a < j.rows(); ++a)
    for (std::size_t b = 0; b < j.cols(); ++b) mi += detail::plogpq(j(a, b), pa[a] * pb[b]);
  return mi;
}

inline Joint2 marginal_pair(const Joint3& j, AxisPair which) {
  const auto n = j.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        const double v = j(a, b, c);
        switch (which) {
          case AxisPair::y1_y: m[a * n + c] += v; break;
          case AxisPair::y2_y: m[b * n + c] += v; break;
          case AxisPair::y1_y2: m[a * n + b] += v; break;
        }
      }
  return Joint2(n, n, std::move(m));
}

/// Single-axis marginal.
inline std::vector<double> marginal(const Joint3& j, Axis axis) {
  const auto n = j.size();
  std::vector<double> m(n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        const std::array<std::size_t, 3> idx{a, b, c};
        m[idx[static_cast<std::size_t>(axis)]] += j(a, b, c);
      }
  return m;
}

/// I(A;B) between two of the three axes.
inline double mutual_information(const Joint3& j, Axis a, Axis b) {
  const auto n = j.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        const std::array<std::size_t, 3> idx{i, k, l};
        m[idx[static_cast<std::size_t>(a)] * n + idx[static_cast<std::size_t>(b)]] += j(i, k, l);
      }
  return mutual_information(Joint2(n, n, std::move(m)));
}

/// I(A;B|C) where {a, b, given} is a permutation of the three axes.
/// Terms with p(c) = 0 contribute nothing.
inline double conditional_mi(const Joint3& j, Axis a, Axis b, Axis given) {
  const auto n = j.size();
  const auto ia = static_cast<std::size_t>(a);
  const auto ib = static_cast<std::size_t>(b);
  const auto ic = static_cast<std::size_t>(given);
  if (ia == ib || ia == ic || ib == ic) {
    throw Error(ErrorCode::invalid_argument, "conditional_mi needs three distinct axes");
  }
  std::vector<double> pac(n * n, 0.0), pbc(n * n, 0.0), pc(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        const std::array<std::size_t, 3> idx{i, k, l};
        const double v = j(i, k, l);
        pac[idx[ia] * n + idx[ic]] += v;
        pbc[idx[ib] * n + idx[ic]] += v;
        pc[idx[ic]] += v;
      }
  double cmi = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        const double v = j(i, k, l);
        if (v <= 0.0) continue;
        const std::array<std::size_t, 3> idx{i, k, l};
        const double denom = pac[idx[ia] * n + idx[ic]] * pbc[idx[ib] * n + idx[ic]];
        cmi += v * std::log2(v * pc[idx[ic]] / denom);
      }
  return cmi;
}

/// I(Y1;Y2;Y) = I(Y1;Y2) - I(Y1;Y2|Y); may be negative.
inline double interaction_information(const Joint3& j) {
  return mutual_information(j, Axis::y1, Axis::y2) - conditional_mi(j, Axis::y1, Axis::y2, Axis::y);
}

/// I(Y1,Y2;Y) with the input pair flattened into one variable.
inline double joint_mi(const Joint3& j) {
  const auto n = j.size();
  const auto pair = marginal_pair(j, AxisPair::y1_y2);
  const auto py = marginal(j, Axis::y);
  double mi = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) mi += detail::plogpq(j(a, b, c), pair(a, b) * py[c]);
  return mi;
}

/// H(Y | Y1, Y2) over a raw flat mass array (not required to sum to 1).
inline double conditional_entropy_of_target(std::span<const double> mass, std::size_t n) {
  double h = 0.0;
  for (std::size_t col = 0; col < n * n; ++col) {
    double col_mass = 0.0;
    for (std::size_t c = 0; c < n; ++c) col_mass += mass[col * n + c];
    if (col_mass <= 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = mass[col * n + c];
      if (v > 0.0) h -= v * std::log2(v / col_mass);
    }
  }
  return h;
}

inline double conditional_entropy_of_target(const Joint3& j) {
  return conditional_entropy_of_target(j.mass(), j.size());
}

/// Cell mass proportional to the summed sample weight plus `smoothing`.
inline Joint3 empirical_joint(const TripleDataset& data, double smoothing = 0.0) {
  if (data.empty()) throw Error(ErrorCode::empty_input, "empirical_joint on an empty dataset");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw Error(ErrorCode::invalid_argument, "smoothing must be a nonnegative real");
  }
  const auto n = data.space().size();
  std::vector<double> mass(n * n * n, smoothing);
  for (const auto& t : data.samples()) mass[(t.y1 * n + t.y2) * n + t.y] += t.weight;
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= total;
  return Joint3(n, std::move(mass));
}

}  // namespace pidlab

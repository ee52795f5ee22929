#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pidlab/info.hpp"
#include "pidlab/synth.hpp"

using namespace pidlab;

namespace {

Joint3 xor_joint() { return canonical_joint({Gate::xor_gate, 2, std::nullopt}); }
Joint3 copy_joint() { return canonical_joint({Gate::copy, 2, std::nullopt}); }

std::vector<double> flat(const Joint3& j) { return {j.mass().begin(), j.mass().end()}; }

/// Reorders the three axes: out axis d takes input axis perm[d].
Joint3 permute_axes(const Joint3& j, std::array<int, 3> perm) {
  const auto n = j.size();
  std::vector<double> out(n * n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        const std::array<std::size_t, 3> v{a, b, c};
        out[(v[perm[0]] * n + v[perm[1]]) * n + v[perm[2]]] = j(a, b, c);
      }
  return Joint3(n, std::move(out));
}

/// Random joint with some exact zeros.
Joint3 sparse_random(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> w(1.0);
  std::vector<double> m(n * n * n);
  for (double& x : m) x = (rng() % 3 == 0) ? 0.0 : w(rng);
  m[rng() % m.size()] += 1.0;
  const double total = std::accumulate(m.begin(), m.end(), 0.0);
  for (double& x : m) x /= total;
  return Joint3(n, std::move(m));
}

}  // namespace

TEST(EmpiricalJoint, TwoEqualCells) {
  TripleDataset d(index_space(2), {{0, 0, 0, 1.0}, {1, 1, 1, 1.0}});
  const auto j = empirical_joint(d);
  EXPECT_DOUBLE_EQ(j(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(j(1, 1, 1), 0.5);
  EXPECT_DOUBLE_EQ(std::accumulate(j.mass().begin(), j.mass().end(), 0.0), 1.0);
}

TEST(EmpiricalJoint, SingleSampleIsPointMass) {
  TripleDataset d(index_space(3), {{2, 0, 1, 1.0}});
  EXPECT_EQ(flat(empirical_joint(d)), flat(Joint3::point(3, 2, 0, 1)));
}

TEST(EmpiricalJoint, WeightsNormalize) {
  TripleDataset d(index_space(2), {{0, 0, 0, 1.0}, {1, 1, 1, 3.0}});
  const auto j = empirical_joint(d);
  EXPECT_DOUBLE_EQ(j(0, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(j(1, 1, 1), 0.75);
}

TEST(EmpiricalJoint, SmoothingAddsToEveryCell) {
  TripleDataset d(index_space(2), {{0, 0, 0, 1.0}});
  const auto j = empirical_joint(d, 1.0);
  EXPECT_DOUBLE_EQ(j(0, 0, 0), 2.0 / 9.0);
  EXPECT_DOUBLE_EQ(j(1, 0, 1), 1.0 / 9.0);
}

TEST(EmpiricalJoint, Errors) {
  EXPECT_THROW(empirical_joint(TripleDataset(index_space(2))), Error);
  TripleDataset d(index_space(2), {{0, 0, 0, 1.0}});
  EXPECT_THROW(empirical_joint(d, -1.0), Error);
}

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(entropy(std::vector<double>{0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>{0.25, 0.75}), 0.811278, 1e-6);
  EXPECT_NEAR(entropy(std::vector<double>{0.25, 0.75}), oracle::h({0.25, 0.75}), 1e-12);
  EXPECT_DOUBLE_EQ(entropy(Joint3::uniform(2)), 3.0);
}

TEST(MutualInformation, Examples) {
  EXPECT_NEAR(mutual_information(Joint2(2, 2, {0.25, 0.25, 0.25, 0.25})), 0.0, 1e-15);
  EXPECT_NEAR(mutual_information(Joint2(2, 2, {0.5, 0.0, 0.0, 0.5})), 1.0, 1e-15);
  EXPECT_NEAR(mutual_information(Joint2(2, 2, {0.4, 0.1, 0.1, 0.4})), 0.278072, 1e-6);
}

TEST(Joint2, ValidatesMass) {
  EXPECT_THROW(Joint2(2, 2, {0.5, 0.5, 0.5, 0.5}), Error);
  EXPECT_THROW(Joint2(2, 2, {1.5, -0.5, 0.0, 0.0}), Error);
  EXPECT_THROW(Joint2(2, 2, {1.0}), Error);
}

TEST(Joint3, ValidatesMass) {
  EXPECT_THROW(Joint3(2, std::vector<double>(8, 0.1)), Error);
  EXPECT_THROW(Joint3(2, std::vector<double>(7, 1.0 / 7)), Error);
  std::vector<double> nan(8, 0.125);
  nan[0] = std::nan("");
  EXPECT_THROW(Joint3(2, nan), Error);
}

TEST(ConditionalMI, Examples) {
  std::vector<double> indep(8);
  // p(y1, y2) arbitrary, y independent uniform
  const std::array<double, 4> pair{0.1, 0.2, 0.3, 0.4};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t c = 0; c < 2; ++c) indep[(a * 2 + b) * 2 + c] = pair[a * 2 + b] * 0.5;
  EXPECT_NEAR(conditional_mi(Joint3(2, indep), Axis::y1, Axis::y, Axis::y2), 0.0, 1e-15);
  EXPECT_NEAR(conditional_mi(xor_joint(), Axis::y1, Axis::y2, Axis::y), 1.0, 1e-15);
  EXPECT_NEAR(conditional_mi(copy_joint(), Axis::y1, Axis::y, Axis::y2), 0.0, 1e-15);
  EXPECT_THROW(conditional_mi(xor_joint(), Axis::y1, Axis::y1, Axis::y), Error);
}

TEST(InteractionInformation, Examples) {
  EXPECT_NEAR(interaction_information(xor_joint()), -1.0, 1e-15);
  EXPECT_NEAR(interaction_information(copy_joint()), 1.0, 1e-15);
  EXPECT_NEAR(interaction_information(Joint3::uniform(3)), 0.0, 1e-15);
}

TEST(JointMI, Examples) {
  EXPECT_NEAR(joint_mi(xor_joint()), 1.0, 1e-15);
  EXPECT_NEAR(joint_mi(Joint3::uniform(2)), 0.0, 1e-15);
  EXPECT_NEAR(joint_mi(copy_joint()), 1.0, 1e-15);
}

TEST(MarginalPair, Examples) {
  const auto m = marginal_pair(Joint3::point(3, 0, 1, 2), AxisPair::y1_y);
  EXPECT_DOUBLE_EQ(m(0, 2), 1.0);
  const auto u = marginal_pair(Joint3::uniform(3), AxisPair::y2_y);
  for (double x : u.mass()) EXPECT_NEAR(x, 1.0 / 9.0, 1e-15);
  const auto x = marginal_pair(xor_joint(), AxisPair::y1_y2);
  for (double v : x.mass()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(InfoProperty, AgreesWithEntropyIdentities) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + t % 3;
    const auto p = t % 2 ? random_joint(n, rng) : sparse_random(n, rng);
    const auto q = flat(p);
    EXPECT_NEAR(entropy(p), oracle::h(q), 1e-12);
    EXPECT_NEAR(mutual_information(p, Axis::y1, Axis::y), oracle::mi(q, n, 0, 2), 1e-12);
    EXPECT_NEAR(mutual_information(p, Axis::y1, Axis::y2), oracle::mi(q, n, 0, 1), 1e-12);
    EXPECT_NEAR(conditional_mi(p, Axis::y1, Axis::y, Axis::y2), oracle::cmi(q, n, 0, 2, 1), 1e-12);
    EXPECT_NEAR(conditional_mi(p, Axis::y2, Axis::y, Axis::y1), oracle::cmi(q, n, 1, 2, 0), 1e-12);
    EXPECT_NEAR(joint_mi(p), oracle::joint_mi(q, n), 1e-12);
    EXPECT_NEAR(conditional_entropy_of_target(p), oracle::cond_entropy(q, n), 1e-12);
  }
}

TEST(InfoProperty, MutualInformationBounds) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 4;
    const auto p = t % 2 ? random_joint(n, rng) : sparse_random(n, rng);
    for (auto [a, b] : {std::pair(Axis::y1, Axis::y), std::pair(Axis::y2, Axis::y), std::pair(Axis::y1, Axis::y2)}) {
      const double i = mutual_information(p, a, b);
      EXPECT_GE(i, -1e-9);
      EXPECT_LE(i, std::min(entropy(marginal(p, a)), entropy(marginal(p, b))) + 1e-9);
    }
  }
}

TEST(InfoProperty, ChainIdentity) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 4;
    const auto p = t % 2 ? random_joint(n, rng) : sparse_random(n, rng);
    EXPECT_NEAR(joint_mi(p), mutual_information(p, Axis::y1, Axis::y) + conditional_mi(p, Axis::y2, Axis::y, Axis::y1),
                1e-9);
  }
}

TEST(InfoProperty, InteractionInformationIsSymmetric) {
  std::mt19937_64 rng(14);
  const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + t % 3;
    const auto p = t % 2 ? random_joint(n, rng) : sparse_random(n, rng);
    const double ref = interaction_information(p);
    for (const auto& perm : perms) EXPECT_NEAR(interaction_information(permute_axes(p, perm)), ref, 1e-9);
  }
}

TEST(InfoProperty, RelabelingInvariance) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + t % 3;
    const auto p = random_joint(n, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto q = p.relabeled(perm);
    EXPECT_NEAR(entropy(q), entropy(p), 1e-12);
    EXPECT_NEAR(joint_mi(q), joint_mi(p), 1e-12);
    EXPECT_NEAR(mutual_information(q, Axis::y1, Axis::y), mutual_information(p, Axis::y1, Axis::y), 1e-12);
    EXPECT_NEAR(conditional_mi(q, Axis::y1, Axis::y2, Axis::y), conditional_mi(p, Axis::y1, Axis::y2, Axis::y), 1e-12);
  }
}

TEST(InfoProperty, TotalMatchesChainBookkeeping) {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_joint(3, rng);
    const double lhs = mutual_information(p, Axis::y1, Axis::y) + conditional_mi(p, Axis::y2, Axis::y, Axis::y1);
    const double rhs = mutual_information(p, Axis::y2, Axis::y) + conditional_mi(p, Axis::y1, Axis::y, Axis::y2);
    EXPECT_NEAR(lhs, joint_mi(p), 1e-9);
    EXPECT_NEAR(rhs, joint_mi(p), 1e-9);
  }
}

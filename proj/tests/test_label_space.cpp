#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pidlab/label_space.hpp"

using namespace pidlab;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(BuildLabelSpace, OrdinalRangeHasSevenValues) {
  LabelSpaceConfig cfg;
  cfg.kind = LabelKind::ordinal;
  cfg.range = std::pair(-3, 3);
  const auto space = build_label_space(cfg);
  EXPECT_EQ(space.size(), 7u);
  EXPECT_EQ(space.values().front(), "-3");
  EXPECT_EQ(space.values().back(), "3");
  EXPECT_TRUE(space.is_ordered());
}

TEST(BuildLabelSpace, NominalTwoClasses) {
  const auto space = build_label_space({LabelKind::nominal, {"not-sarcastic", "sarcastic"}, {}, {}});
  EXPECT_EQ(space.size(), 2u);
  EXPECT_FALSE(space.is_ordered());
}

TEST(BuildLabelSpace, BinnedEdgesGiveOneFewerBins) {
  const auto space = build_label_space({LabelKind::binned_continuous, {}, {-3, -1, 1, 3}, {}});
  EXPECT_EQ(space.size(), 3u);
}

TEST(BuildLabelSpace, QaBinaryIsSameDifferent) {
  const auto space = build_label_space({LabelKind::qa_binary, {}, {}, {}});
  EXPECT_EQ(space.values(), (std::vector<std::string>{"SAME", "DIFFERENT"}));
  EXPECT_EQ(code_of([] { build_label_space({LabelKind::qa_binary, {"yes", "no"}, {}, {}}); }),
            ErrorCode::invalid_argument);
}

TEST(BuildLabelSpace, RejectsInvalidConfigs) {
  EXPECT_EQ(code_of([] { LabelSpace::nominal({"a", "b", "a"}); }), ErrorCode::duplicate);
  EXPECT_EQ(code_of([] { LabelSpace::binned({-3, 1, -1, 3}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { LabelSpace::binned({0, 0, 1}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { LabelSpace::nominal({"only"}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { LabelSpace::ordinal_range(2, 2); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { LabelSpace::binned({0, 1, 2}, {"one"}); }), ErrorCode::invalid_argument);
}

TEST(LabelKindNames, RoundTrip) {
  for (auto k : {LabelKind::nominal, LabelKind::ordinal, LabelKind::binned_continuous, LabelKind::qa_binary})
    EXPECT_EQ(label_kind_from_string(to_string(k)), k);
  EXPECT_EQ(code_of([] { label_kind_from_string("continuous"); }), ErrorCode::unknown_value);
}

TEST(Encode, OrdinalTopValue) {
  const auto space = LabelSpace::ordinal_range(-3, 3);
  EXPECT_EQ(space.encode("+3"), 6u);
  EXPECT_EQ(space.encode("3"), 6u);
  EXPECT_EQ(space.encode(3.0), 6u);
  EXPECT_EQ(space.encode("-3"), 0u);
  EXPECT_EQ(space.encode(" 0 "), 3u);
  EXPECT_EQ(code_of([&] { space.encode("4"); }), ErrorCode::unknown_value);
  EXPECT_EQ(code_of([&] { space.encode(0.5); }), ErrorCode::unknown_value);
}

TEST(Encode, BinnedMiddle) {
  const auto space = default_sentiment_bins();
  EXPECT_EQ(space.encode(0.0), 1u);
  EXPECT_EQ(space.encode("0.0"), 1u);
  EXPECT_EQ(space.decode(1), "neutral");
}

TEST(Encode, BinnedBoundariesGoToLowerBin) {
  const auto space = default_sentiment_bins();
  EXPECT_EQ(space.encode(-3.0), 0u);
  EXPECT_EQ(space.encode(-1.0), 0u);
  EXPECT_EQ(space.encode(std::nextafter(-1.0, 0.0)), 1u);
  EXPECT_EQ(space.encode(1.0), 1u);
  EXPECT_EQ(space.encode(3.0), 2u);
  EXPECT_EQ(code_of([&] { space.encode(3.0001); }), ErrorCode::out_of_range);
  EXPECT_EQ(code_of([&] { space.encode(-3.5); }), ErrorCode::out_of_range);
  EXPECT_EQ(code_of([&] { space.encode("high"); }), ErrorCode::unknown_value);
}

TEST(Encode, NominalUnknownValue) {
  const auto space = LabelSpace::nominal({"no", "yes"});
  EXPECT_EQ(space.encode("yes"), 1u);
  EXPECT_EQ(code_of([&] { space.encode("maybe"); }), ErrorCode::unknown_value);
  EXPECT_EQ(code_of([&] { space.decode(2); }), ErrorCode::out_of_range);
}

TEST(EncodeProperty, EncodeDecodeIsIdentity) {
  const std::vector<LabelSpace> spaces{LabelSpace::nominal({"cat", "dog", "bird"}), LabelSpace::ordinal_range(-3, 3),
                                       LabelSpace::ordinal({"low", "mid", "high"}), LabelSpace::qa_binary()};
  for (const auto& space : spaces)
    for (LabelIndex i = 0; i < space.size(); ++i) EXPECT_EQ(space.encode(space.decode(i)), i);
}

TEST(EncodeProperty, BinnedIsMonotone) {
  std::mt19937_64 rng(7);
  const auto space = LabelSpace::binned({-2.0, -0.5, 0.0, 0.25, 4.0});
  std::uniform_real_distribution<double> draw(-2.0, 4.0);
  std::vector<double> xs(2000);
  for (double& x : xs) x = draw(rng);
  xs.insert(xs.end(), {-2.0, -0.5, 0.0, 0.25, 4.0});
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_LE(space.encode(xs[i - 1]), space.encode(xs[i]));
}

TEST(QaBinarize, Examples) {
  EXPECT_EQ(qa_binarize("Red", "red"), LabelSpace::kSame);
  EXPECT_EQ(qa_binarize("crimson", "red"), LabelSpace::kDifferent);
  EXPECT_EQ(qa_binarize("  two  dogs ", "two dogs"), LabelSpace::kSame);
  EXPECT_EQ(qa_binarize("two\tdogs", "Two Dogs"), LabelSpace::kSame);
  EXPECT_EQ(qa_binarize("a red cube", "red cube"), LabelSpace::kDifferent);
}

TEST(QaBinarize, EmptyAfterNormalizationIsAnError) {
  EXPECT_EQ(code_of([] { qa_binarize("   ", "red"); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { qa_binarize("red", ""); }), ErrorCode::invalid_argument);
}

TEST(QaBinarize, IsSymmetric) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "aAbB  \t";
  auto word = [&] {
    std::string s;
    const auto len = 1 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    return s + "x";
  };
  for (int i = 0; i < 500; ++i) {
    const auto a = word(), b = word();
    EXPECT_EQ(qa_binarize(a, b), qa_binarize(b, a)) << a << " | " << b;
  }
}

TEST(NormalizeAnswer, CollapsesWhitespaceAndCase) {
  EXPECT_EQ(normalize_answer("  The   Big\n\nDog "), "the big dog");
}

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pidlab/error.hpp"

namespace pidlab {

using LabelIndex = std::size_t;

enum class LabelKind { nominal, ordinal, binned_continuous, qa_binary };

inline std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::nominal: return "nominal";
    case LabelKind::ordinal: return "ordinal";
    case LabelKind::binned_continuous: return "binned-continuous";
    case LabelKind::qa_binary: return "qa-binary";
  }
  return "nominal";
}

inline LabelKind label_kind_from_string(std::string_view s) {
  if (s == "nominal") return LabelKind::nominal;
  if (s == "ordinal") return LabelKind::ordinal;
  if (s == "binned-continuous") return LabelKind::binned_continuous;
  if (s == "qa-binary") return LabelKind::qa_binary;
  throw Error(ErrorCode::unknown_value, "unknown label-space kind '" + std::string(s) + "'");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// Parses the whole (trimmed) string as a real; a leading '+' is accepted.
inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

/// Configuration for build_label_space. For ordinal spaces either `values`
/// or an integer `range` (inclusive) may be given.
struct LabelSpaceConfig {
  LabelKind kind = LabelKind::nominal;
  std::vector<std::string> values;
  std::vector<double> bin_edges;
  std::optional<std::pair<int, int>> range;
};

/// Finite ordered label support shared by Y1, Y2 and Y.
class LabelSpace {
 public:
  static constexpr LabelIndex kSame = 0;
  static constexpr LabelIndex kDifferent = 1;

  static LabelSpace nominal(std::vector<std::string> values) {
    return LabelSpace(LabelKind::nominal, std::move(values), {});
  }

  static LabelSpace ordinal(std::vector<std::string> values) {
    return LabelSpace(LabelKind::ordinal, std::move(values), {});
  }

  static LabelSpace ordinal_range(int lo, int hi) {
    if (hi < lo) {
      throw Error(ErrorCode::invalid_argument, "ordinal range upper bound below lower bound");
    }
    std::vector<std::string> values;
    for (int v = lo; v <= hi; ++v) values.push_back(std::to_string(v));
    return ordinal(std::move(values));
  }

  /// Bins are named "bin0", "bin1", ... unless names are supplied.
  static LabelSpace binned(std::vector<double> edges, std::vector<std::string> names = {}) {
    if (names.empty() && edges.size() >= 2) {
      for (std::size_t i = 0; i + 1 < edges.size(); ++i) names.push_back("bin" + std::to_string(i));
    }
    return LabelSpace(LabelKind::binned_continuous, std::move(names), std::move(edges));
  }

  static LabelSpace qa_binary() { return LabelSpace(LabelKind::qa_binary, {"SAME", "DIFFERENT"}, {}); }

  LabelKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<std::string>& values() const noexcept { return values_; }
  const std::vector<double>& bin_edges() const noexcept { return edges_; }

  /// True for spaces whose indices carry an order (ordinal, binned).
  bool is_ordered() const noexcept {
    return kind_ == LabelKind::ordinal || kind_ == LabelKind::binned_continuous;
  }

  const std::string& decode(LabelIndex index) const {
    if (index >= size()) throw Error(ErrorCode::out_of_range, "label index out of range");
    return values_[index];
  }

  LabelIndex encode(std::string_view raw) const {
    const auto text = detail::trim(raw);
    if (kind_ == LabelKind::binned_continuous) {
      if (auto x = detail::parse_real(text)) return encode(*x);
      throw Error(ErrorCode::unknown_value, "'" + std::string(raw) + "' is not a real number");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] == text) return i;
    }
    if (kind_ == LabelKind::ordinal) {
      if (auto x = detail::parse_real(text)) return encode(*x);
    }
    throw Error(ErrorCode::unknown_value, "unknown label value '" + std::string(raw) + "'");
  }

  LabelIndex encode(double raw) const {
    if (kind_ == LabelKind::binned_continuous) {
      if (!(raw >= edges_.front() && raw <= edges_.back())) {
        throw Error(ErrorCode::out_of_range, "value " + std::to_string(raw) + " outside bin edges");
      }
      // Boundary ties go to the lower bin.
      for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        if (raw <= edges_[i + 1]) return i;
      }
      return size() - 1;
    }
    if (kind_ == LabelKind::ordinal) {
      for (std::size_t i = 0; i < numeric_.size(); ++i) {
        if (numeric_[i] && *numeric_[i] == raw) return i;
      }
    }
    throw Error(ErrorCode::unknown_value, "unknown label value " + std::to_string(raw));
  }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  LabelSpace(LabelKind kind, std::vector<std::string> values, std::vector<double> edges)
      : kind_(kind), values_(std::move(values)), edges_(std::move(edges)) {
    validate();
    for (const auto& v : values_) numeric_.push_back(detail::parse_real(v));
  }

  void validate() const {
    if (kind_ == LabelKind::binned_continuous) {
      if (edges_.size() < 3) {
        throw Error(ErrorCode::invalid_argument, "binned label space needs at least 3 edges");
      }
      for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        if (!(edges_[i] < edges_[i + 1])) {
          throw Error(ErrorCode::invalid_argument, "bin edges must be strictly ascending");
        }
      }
      if (values_.size() + 1 != edges_.size()) {
        throw Error(ErrorCode::invalid_argument, "bin names must number edges minus one");
      }
    } else if (!edges_.empty()) {
      throw Error(ErrorCode::invalid_argument, "bin edges only apply to binned-continuous spaces");
    }
    if (values_.size() < 2) {
      throw Error(ErrorCode::invalid_argument, "label space needs at least 2 labels");
    }
    std::set<std::string> seen;
    for (const auto& v : values_) {
      if (!seen.insert(v).second) {
        throw Error(ErrorCode::duplicate, "duplicate label value '" + v + "'");
      }
    }
    if (kind_ == LabelKind::qa_binary &&
        (values_ != std::vector<std::string>{"SAME", "DIFFERENT"})) {
      throw Error(ErrorCode::invalid_argument, "qa-binary space must be [SAME, DIFFERENT]");
    }
  }

  LabelKind kind_;
  std::vector<std::string> values_;
  std::vector<double> edges_;
  std::vector<std::optional<double>> numeric_;
};

inline LabelSpace build_label_space(const LabelSpaceConfig& config) {
  switch (config.kind) {
    case LabelKind::nominal:
      return LabelSpace::nominal(config.values);
    case LabelKind::ordinal:
      if (config.range && config.values.empty()) {
        return LabelSpace::ordinal_range(config.range->first, config.range->second);
      }
      return LabelSpace::ordinal(config.values);
    case LabelKind::binned_continuous:
      return LabelSpace::binned(config.bin_edges, config.values);
    case LabelKind::qa_binary:
      if (!config.values.empty() &&
          config.values != std::vector<std::string>{"SAME", "DIFFERENT"}) {
        throw Error(ErrorCode::invalid_argument, "qa-binary space must be [SAME, DIFFERENT]");
      }
      return LabelSpace::qa_binary();
  }
  throw Error(ErrorCode::invalid_argument, "unsupported label-space kind");
}

/// Default preset for continuous sentiment scores in [-3, 3]:
/// negative / neutral / positive.
inline LabelSpace default_sentiment_bins() {
  return LabelSpace::binned({-3.0, -1.0, 1.0, 3.0}, {"negative", "neutral", "positive"});
}

/// Lowercases, trims and collapses runs of whitespace to one space.
inline std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : detail::trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

/// Maps a free-text answer onto {SAME, DIFFERENT} relative to a reference answer.
inline LabelIndex qa_binarize(std::string_view answer, std::string_view reference) {
  const auto a = normalize_answer(answer);
  const auto b = normalize_answer(reference);
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::invalid_argument, "empty answer after normalization");
  }
  return a == b ? LabelSpace::kSame : LabelSpace::kDifferent;
}

}  // namespace pidlab

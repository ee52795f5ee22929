#pragma once

// Krippendorff's alpha over an item x annotator grid, and confidence means.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <ranges>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "pidlab/dataset.hpp"
#include "pidlab/error.hpp"
#include "pidlab/label_space.hpp"

namespace pidlab {

enum class AlphaMetric { nominal, ordinal, interval };

inline std::string_view to_string(AlphaMetric m) {
  switch (m) {
    case AlphaMetric::nominal: return "nominal";
    case AlphaMetric::ordinal: return "ordinal";
    case AlphaMetric::interval: return "interval";
  }
  return "nominal";
}

inline AlphaMetric alpha_metric_from_string(std::string_view s) {
  for (AlphaMetric m : {AlphaMetric::nominal, AlphaMetric::ordinal, AlphaMetric::interval})
    if (to_string(m) == s) return m;
  throw Error(ErrorCode::unknown_value, "unknown metric '" + std::string(s) + "'");
}

/// Item x annotator grid of optional values. Nominal and ordinal metrics
/// treat values as category codes (ordinal uses their numeric order);
/// the interval metric uses them as numbers.
class RatingsMatrix {
 public:
  using Cell = std::optional<double>;

  RatingsMatrix(std::vector<std::string> items, std::vector<std::string> annotators,
                std::vector<std::vector<Cell>> values, AlphaMetric metric)
      : items_(std::move(items)), annotators_(std::move(annotators)), values_(std::move(values)), metric_(metric) {
    if (values_.size() != items_.size()) throw Error(ErrorCode::invalid_argument, "ratings: one row per item");
    for (const auto& row : values_) {
      if (row.size() != annotators_.size()) throw Error(ErrorCode::invalid_argument, "ratings: one column per annotator");
      for (const auto& v : row)
        if (v && !std::isfinite(*v)) throw Error(ErrorCode::invalid_argument, "ratings: non-finite value");
    }
    for (const auto* ids : {&items_, &annotators_}) {
      if (std::set<std::string>(ids->begin(), ids->end()).size() != ids->size()) {
        throw Error(ErrorCode::duplicate, "ratings: repeated item or annotator id");
      }
    }
  }

  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::vector<std::string>& annotators() const noexcept { return annotators_; }
  const std::vector<std::vector<Cell>>& values() const noexcept { return values_; }
  AlphaMetric metric() const noexcept { return metric_; }

 private:
  std::vector<std::string> items_;
  std::vector<std::string> annotators_;
  std::vector<std::vector<Cell>> values_;
  AlphaMetric metric_;
};

enum class AlphaStatus { ok, no_variation, no_pairable_units };

struct AlphaResult {
  std::optional<double> alpha;  // empty unless status is ok
  AlphaStatus status = AlphaStatus::ok;
  std::size_t n_units = 0;
  std::size_t n_pairable = 0;

  bool defined() const noexcept { return alpha.has_value(); }

  std::string message() const {
    switch (status) {
      case AlphaStatus::ok: return "ok";
      case AlphaStatus::no_variation: return "all pairable values are identical, so expected disagreement is zero";
      case AlphaStatus::no_pairable_units: return "no unit has two or more ratings";
    }
    return "";
  }
};

/// Alpha = 1 - D_o / D_e from the coincidence matrix. Units with fewer than
/// two ratings are left out; each pair inside a unit of m ratings counts
/// 1 / (m - 1). Ordinal distances use cumulative frequencies:
/// delta(c, k) = (sum_{g=c..k} n_g - (n_c + n_k) / 2)^2.
inline AlphaResult krippendorff_alpha(const RatingsMatrix& m) {
  AlphaResult result;
  result.n_units = m.items().size();

  std::vector<std::vector<double>> units;
  for (const auto& row : m.values()) {
    std::vector<double> unit;
    for (const auto& v : row)
      if (v) unit.push_back(*v);
    if (unit.size() >= 2) units.push_back(std::move(unit));
  }
  result.n_pairable = units.size();
  if (units.empty()) {
    result.status = AlphaStatus::no_pairable_units;
    return result;
  }

  std::vector<double> categories;
  for (const auto& unit : units) categories.insert(categories.end(), unit.begin(), unit.end());
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  if (categories.size() < 2) {
    result.status = AlphaStatus::no_variation;
    return result;
  }
  const std::size_t V = categories.size();
  auto code = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(categories.begin(), categories.end(), v) - categories.begin());
  };

  std::vector<double> coincidence(V * V, 0.0);
  for (const auto& unit : units) {
    const double w = 1.0 / static_cast<double>(unit.size() - 1);
    for (std::size_t a = 0; a < unit.size(); ++a)
      for (std::size_t b = 0; b < unit.size(); ++b)
        if (a != b) coincidence[code(unit[a]) * V + code(unit[b])] += w;
  }
  std::vector<double> marginal(V, 0.0);
  for (std::size_t c = 0; c < V; ++c)
    for (std::size_t k = 0; k < V; ++k) marginal[c] += coincidence[c * V + k];
  double n = 0.0;
  for (double x : marginal) n += x;

  auto delta = [&](std::size_t c, std::size_t k) {
    if (c == k) return 0.0;
    switch (m.metric()) {
      case AlphaMetric::nominal: return 1.0;
      case AlphaMetric::interval: {
        const double d = categories[c] - categories[k];
        return d * d;
      }
      case AlphaMetric::ordinal: {
        const auto lo = std::min(c, k);
        const auto hi = std::max(c, k);
        double span = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) span += marginal[g];
        const double d = span - 0.5 * (marginal[c] + marginal[k]);
        return d * d;
      }
    }
    return 1.0;
  };

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < V; ++c) {
    for (std::size_t k = 0; k < V; ++k) {
      const double d = delta(c, k);
      observed += coincidence[c * V + k] * d;
      expected += marginal[c] * marginal[k] * d;
    }
  }
  observed /= n;
  expected /= n * (n - 1.0);
  if (!(expected > 0.0)) {
    result.status = AlphaStatus::no_variation;
    return result;
  }
  result.alpha = 1.0 - observed / expected;
  return result;
}

namespace detail {

/// Collects (item, annotator, value) into a grid with ids in sorted order.
inline RatingsMatrix grid(const std::vector<std::tuple<std::string, std::string, double>>& cells, AlphaMetric metric) {
  std::map<std::string, std::size_t> items, annotators;
  for (const auto& [item, annotator, value] : cells) {
    items.emplace(item, 0);
    annotators.emplace(annotator, 0);
  }
  std::size_t i = 0;
  for (auto& entry : items) entry.second = i++;
  i = 0;
  for (auto& entry : annotators) entry.second = i++;
  std::vector<std::vector<RatingsMatrix::Cell>> values(items.size(),
                                                       std::vector<RatingsMatrix::Cell>(annotators.size()));
  for (const auto& [item, annotator, value] : cells) {
    auto& cell = values[items[item]][annotators[annotator]];
    if (cell) throw Error(ErrorCode::duplicate, "item '" + item + "' rated twice by '" + annotator + "'");
    cell = value;
  }
  std::vector<std::string> item_ids, annotator_ids;
  for (const auto& entry : items) item_ids.push_back(entry.first);
  for (const auto& entry : annotators) annotator_ids.push_back(entry.first);
  return RatingsMatrix(std::move(item_ids), std::move(annotator_ids), std::move(values), metric);
}

}  // namespace detail

/// Labels of one condition, encoded as label indices.
inline RatingsMatrix ratings_from_partial(const std::vector<PartialRecord>& records, const LabelSpace& space,
                                          Condition condition, AlphaMetric metric) {
  std::vector<std::tuple<std::string, std::string, double>> cells;
  for (const auto& r : records) {
    if (r.condition != condition) continue;
    cells.emplace_back(r.item_id, r.annotator_id, static_cast<double>(detail::encode_label(space, r.label, r.item_id)));
  }
  return detail::grid(cells, metric);
}

/// Which label of a counterfactual record to compare across annotators.
enum class CounterfactualField { first, both };

inline RatingsMatrix ratings_from_counterfactual(const std::vector<CounterfactualRecord>& records,
                                                 const LabelSpace& space, Order order, CounterfactualField field,
                                                 AlphaMetric metric) {
  std::vector<std::tuple<std::string, std::string, double>> cells;
  for (const auto& r : records) {
    if (r.order != order) continue;
    const auto& label = field == CounterfactualField::first ? r.label_first : r.label_both;
    cells.emplace_back(r.item_id, r.annotator_id, static_cast<double>(detail::encode_label(space, label, r.item_id)));
  }
  return detail::grid(cells, metric);
}

/// One rating column (e.g. &DecompositionRecord::s) as numbers.
inline RatingsMatrix ratings_from_decomposition(const std::vector<DecompositionRecord>& records,
                                                int DecompositionRecord::*field, AlphaMetric metric) {
  std::vector<std::tuple<std::string, std::string, double>> cells;
  for (const auto& r : records) cells.emplace_back(r.item_id, r.annotator_id, static_cast<double>(r.*field));
  return detail::grid(cells, metric);
}

/// Mean of a confidence field. The projection returns a number, or an
/// optional number where nullopt leaves the record out of the selection.
template <std::ranges::input_range Records, class Projection>
double mean_confidence(const Records& records, Projection proj) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& r : records) {
    const auto v = std::invoke(proj, r);
    if constexpr (requires { v.has_value(); }) {
      if (!v) continue;
      total += static_cast<double>(*v);
    } else {
      total += static_cast<double>(v);
    }
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::empty_input, "no confidences selected");
  return total / static_cast<double>(count);
}

}  // namespace pidlab

#pragma once

// Annotation records (partial labels, counterfactual labels, direct
// decomposition ratings), their CSV/JSON forms, and aggregation into
// weighted (y1, y2, y) triples.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "pidlab/csv.hpp"
#include "pidlab/error.hpp"
#include "pidlab/label_space.hpp"
#include "pidlab/triple_dataset.hpp"

namespace pidlab {

enum class Format { csv, json };

inline Format format_from_string(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw Error(ErrorCode::unknown_value, "unknown format '" + std::string(s) + "'");
}

enum class Condition { m1, m2, both };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::m1: return "m1";
    case Condition::m2: return "m2";
    case Condition::both: return "both";
  }
  return "m1";
}

inline Condition condition_from_string(std::string_view s) {
  for (Condition c : {Condition::m1, Condition::m2, Condition::both})
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::unknown_value, "unknown condition '" + std::string(s) + "'");
}

enum class Order { first_m1, first_m2 };

inline std::string_view to_string(Order o) { return o == Order::first_m1 ? "first-m1" : "first-m2"; }

inline Order order_from_string(std::string_view s) {
  if (s == "first-m1") return Order::first_m1;
  if (s == "first-m2") return Order::first_m2;
  throw Error(ErrorCode::unknown_value, "unknown order '" + std::string(s) + "'");
}

/// One annotator's label for one item under one modality condition.
struct PartialRecord {
  std::string item_id;
  std::string annotator_id;
  Condition condition = Condition::m1;
  std::string label;
  int confidence = 0;

  friend bool operator==(const PartialRecord&, const PartialRecord&) = default;
};

/// A label from one modality, then the revised label after seeing both.
struct CounterfactualRecord {
  std::string item_id;
  std::string annotator_id;
  Order order = Order::first_m1;
  std::string label_first;
  std::string label_both;
  int confidence_first = 0;
  int confidence_both = 0;

  friend bool operator==(const CounterfactualRecord&, const CounterfactualRecord&) = default;
};

/// Direct 0-5 ratings of each interaction, with a confidence for each.
struct DecompositionRecord {
  std::string item_id;
  std::string annotator_id;
  int r = 0;
  int u1 = 0;
  int u2 = 0;
  int s = 0;
  int conf_r = 0;
  int conf_u1 = 0;
  int conf_u2 = 0;
  int conf_s = 0;

  friend bool operator==(const DecompositionRecord&, const DecompositionRecord&) = default;
};

template <class Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<std::string> warnings;
};

namespace detail {

inline constexpr std::array<std::string_view, 5> kPartialColumns{"item_id", "annotator_id", "condition", "label",
                                                                  "confidence"};
inline constexpr std::array<std::string_view, 7> kCounterfactualColumns{
    "item_id", "annotator_id", "order", "label_first", "label_both", "confidence_first", "confidence_both"};
inline constexpr std::array<std::string_view, 10> kDecompositionColumns{
    "item_id", "annotator_id", "r", "u1", "u2", "s", "conf_r", "conf_u1", "conf_u2", "conf_s"};

/// A row with named string fields, whatever the source format.
struct RawRow {
  std::string where;
  std::map<std::string, std::string, std::less<>> fields;

  const std::string& get(std::string_view name) const {
    auto it = fields.find(name);
    if (it == fields.end()) throw Error(ErrorCode::schema, where + ": missing field '" + std::string(name) + "'");
    return it->second;
  }

  std::string text(std::string_view name) const {
    std::string v(trim(get(name)));
    if (v.empty()) throw Error(ErrorCode::schema, where + ": field '" + std::string(name) + "' is empty");
    return v;
  }

  int rating(std::string_view name) const {
    const auto& raw = get(name);
    const auto v = parse_real(raw);
    if (!v || *v != std::floor(*v)) {
      throw Error(ErrorCode::schema,
                  where + ": field '" + std::string(name) + "' must be an integer, got '" + raw + "'");
    }
    if (*v < 0.0 || *v > 5.0) {
      throw Error(ErrorCode::out_of_range,
                  where + ": field '" + std::string(name) + "' must lie in 0..5, got '" + raw + "'");
    }
    return static_cast<int>(*v);
  }
};

template <std::size_t N>
std::vector<RawRow> read_rows(std::istream& in, Format format, const std::array<std::string_view, N>& columns) {
  std::vector<RawRow> out;
  if (format == Format::csv) {
    const auto rows = csv::read(in);
    if (rows.empty()) return out;
    const auto& header = rows.front().fields;
    std::map<std::string, std::size_t, std::less<>> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!position.emplace(std::string(trim(header[i])), i).second) {
        throw Error(ErrorCode::schema, "csv header repeats column '" + header[i] + "'");
      }
    }
    for (auto name : columns) {
      if (!position.contains(name)) throw Error(ErrorCode::schema, "csv header lacks column '" + std::string(name) + "'");
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      RawRow raw{"line " + std::to_string(row.line), {}};
      if (row.fields.size() != header.size()) {
        throw Error(ErrorCode::schema, raw.where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                           std::to_string(row.fields.size()));
      }
      for (auto name : columns) raw.fields.emplace(std::string(name), row.fields[position.find(name)->second]);
      out.push_back(std::move(raw));
    }
    return out;
  }

  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (trim(text).empty()) return out;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::schema, std::string("json parse error: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::schema, "json records must be an array of objects");
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    RawRow raw{"record " + std::to_string(r), {}};
    if (!obj.is_object()) throw Error(ErrorCode::schema, raw.where + ": not an object");
    for (auto name : columns) {
      auto it = obj.find(std::string(name));
      if (it == obj.end()) continue;  // reported by RawRow::get
      if (it->is_string()) {
        raw.fields.emplace(std::string(name), it->get<std::string>());
      } else if (it->is_number()) {
        raw.fields.emplace(std::string(name), it->dump());
      } else {
        throw Error(ErrorCode::schema, raw.where + ": field '" + std::string(name) + "' must be a string or number");
      }
    }
    out.push_back(std::move(raw));
  }
  return out;
}

template <class Record, class Key>
ParseResult<Record> finish_parse(std::vector<Record> records, Key key, std::string_view what) {
  ParseResult<Record> result{std::move(records), {}};
  std::set<decltype(key(result.records.front()))> seen;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    if (!seen.insert(key(result.records[i])).second) {
      throw Error(ErrorCode::duplicate, "record " + std::to_string(i) + ": duplicate " + std::string(what) + " key");
    }
  }
  if (result.records.empty()) result.warnings.push_back("input contains no records");
  return result;
}

inline void write_json_rows(std::ostream& out, const nlohmann::json& rows) { out << rows.dump(2) << '\n'; }

}  // namespace detail

inline ParseResult<PartialRecord> parse_partial(std::istream& in, Format format) {
  std::vector<PartialRecord> records;
  for (const auto& row : detail::read_rows(in, format, detail::kPartialColumns)) {
    records.push_back({row.text("item_id"), row.text("annotator_id"),
                       condition_from_string(detail::trim(row.get("condition"))), row.text("label"),
                       row.rating("confidence")});
  }
  return detail::finish_parse(
      std::move(records), [](const PartialRecord& r) { return std::tuple(r.item_id, r.annotator_id, r.condition); },
      "(item, annotator, condition)");
}

inline ParseResult<CounterfactualRecord> parse_counterfactual(std::istream& in, Format format) {
  std::vector<CounterfactualRecord> records;
  for (const auto& row : detail::read_rows(in, format, detail::kCounterfactualColumns)) {
    records.push_back({row.text("item_id"), row.text("annotator_id"), order_from_string(detail::trim(row.get("order"))),
                       row.text("label_first"), row.text("label_both"), row.rating("confidence_first"),
                       row.rating("confidence_both")});
  }
  return detail::finish_parse(
      std::move(records), [](const CounterfactualRecord& r) { return std::tuple(r.item_id, r.annotator_id, r.order); },
      "(item, annotator, order)");
}

inline ParseResult<DecompositionRecord> parse_decomposition(std::istream& in, Format format) {
  std::vector<DecompositionRecord> records;
  for (const auto& row : detail::read_rows(in, format, detail::kDecompositionColumns)) {
    records.push_back({row.text("item_id"), row.text("annotator_id"), row.rating("r"), row.rating("u1"),
                       row.rating("u2"), row.rating("s"), row.rating("conf_r"), row.rating("conf_u1"),
                       row.rating("conf_u2"), row.rating("conf_s")});
  }
  return detail::finish_parse(
      std::move(records), [](const DecompositionRecord& r) { return std::pair(r.item_id, r.annotator_id); },
      "(item, annotator)");
}

inline void write_partial(std::ostream& out, const std::vector<PartialRecord>& records, Format format) {
  if (format == Format::csv) {
    csv::write_row(out, {detail::kPartialColumns.begin(), detail::kPartialColumns.end()});
    for (const auto& r : records)
      csv::write_row(out, {r.item_id, r.annotator_id, std::string(to_string(r.condition)), r.label,
                           std::to_string(r.confidence)});
    return;
  }
  auto rows = nlohmann::json::array();
  for (const auto& r : records) {
    rows.push_back({{"item_id", r.item_id},
                    {"annotator_id", r.annotator_id},
                    {"condition", to_string(r.condition)},
                    {"label", r.label},
                    {"confidence", r.confidence}});
  }
  detail::write_json_rows(out, rows);
}

inline void write_counterfactual(std::ostream& out, const std::vector<CounterfactualRecord>& records, Format format) {
  if (format == Format::csv) {
    csv::write_row(out, {detail::kCounterfactualColumns.begin(), detail::kCounterfactualColumns.end()});
    for (const auto& r : records)
      csv::write_row(out, {r.item_id, r.annotator_id, std::string(to_string(r.order)), r.label_first, r.label_both,
                           std::to_string(r.confidence_first), std::to_string(r.confidence_both)});
    return;
  }
  auto rows = nlohmann::json::array();
  for (const auto& r : records) {
    rows.push_back({{"item_id", r.item_id},
                    {"annotator_id", r.annotator_id},
                    {"order", to_string(r.order)},
                    {"label_first", r.label_first},
                    {"label_both", r.label_both},
                    {"confidence_first", r.confidence_first},
                    {"confidence_both", r.confidence_both}});
  }
  detail::write_json_rows(out, rows);
}

inline void write_decomposition(std::ostream& out, const std::vector<DecompositionRecord>& records, Format format) {
  if (format == Format::csv) {
    csv::write_row(out, {detail::kDecompositionColumns.begin(), detail::kDecompositionColumns.end()});
    for (const auto& r : records) {
      std::vector<std::string> row{r.item_id, r.annotator_id};
      for (int v : {r.r, r.u1, r.u2, r.s, r.conf_r, r.conf_u1, r.conf_u2, r.conf_s}) row.push_back(std::to_string(v));
      csv::write_row(out, row);
    }
    return;
  }
  auto rows = nlohmann::json::array();
  for (const auto& r : records) {
    rows.push_back({{"item_id", r.item_id}, {"annotator_id", r.annotator_id}, {"r", r.r}, {"u1", r.u1},
                    {"u2", r.u2}, {"s", r.s}, {"conf_r", r.conf_r}, {"conf_u1", r.conf_u1},
                    {"conf_u2", r.conf_u2}, {"conf_s", r.conf_s}});
  }
  detail::write_json_rows(out, rows);
}

enum class Pairing { rotation, all_pairs };

inline std::string_view to_string(Pairing p) { return p == Pairing::rotation ? "rotation" : "all-pairs"; }

inline Pairing pairing_from_string(std::string_view s) {
  if (s == "rotation") return Pairing::rotation;
  if (s == "all-pairs") return Pairing::all_pairs;
  throw Error(ErrorCode::unknown_value, "unknown pairing '" + std::string(s) + "'");
}

namespace detail {

inline LabelIndex encode_label(const LabelSpace& space, const std::string& raw, const std::string& item) {
  try {
    return space.encode(raw);
  } catch (const Error& e) {
    throw Error(e.code(), "item '" + item + "': " + e.what());
  }
}

}  // namespace detail

/// Builds triples from partial labels. Within each item the annotators of
/// every condition are sorted by id. Rotation pairing emits, for
/// r = 0..k-1 with k the largest per-condition count, the triple
/// (m1[r], m2[r+1], both[r+2]) with indices taken modulo each list's
/// length, weight 1; with annotators A, B, C on every condition this gives
/// (A,B,C), (B,C,A), (C,A,B). All-pairs emits the full product of the three
/// lists, each weighted 1 / (product size), so every item has weight 1.
inline TripleDataset triples_from_partial(const std::vector<PartialRecord>& records, const LabelSpace& space,
                                          Pairing pairing) {
  // item -> condition -> annotator -> label index
  std::map<std::string, std::array<std::map<std::string, LabelIndex>, 3>> items;
  for (const auto& r : records) {
    auto& slot = items[r.item_id][static_cast<std::size_t>(r.condition)];
    if (!slot.emplace(r.annotator_id, detail::encode_label(space, r.label, r.item_id)).second) {
      throw Error(ErrorCode::duplicate, "item '" + r.item_id + "': annotator '" + r.annotator_id +
                                            "' labels condition " + std::string(to_string(r.condition)) + " twice");
    }
  }

  TripleDataset data(space);
  for (const auto& [item, conditions] : items) {
    std::array<std::vector<LabelIndex>, 3> lists;
    for (std::size_t c = 0; c < 3; ++c) {
      if (conditions[c].empty()) {
        throw Error(ErrorCode::missing_condition, "item '" + item + "' has no label for condition " +
                                                      std::string(to_string(static_cast<Condition>(c))));
      }
      for (const auto& entry : conditions[c]) lists[c].push_back(entry.second);
    }
    const auto& [l1, l2, l12] = lists;
    if (pairing == Pairing::rotation) {
      const std::size_t k = std::max({l1.size(), l2.size(), l12.size()});
      for (std::size_t r = 0; r < k; ++r)
        data.add(l1[r % l1.size()], l2[(r + 1) % l2.size()], l12[(r + 2) % l12.size()]);
    } else {
      const double w = 1.0 / static_cast<double>(l1.size() * l2.size() * l12.size());
      for (auto a : l1)
        for (auto b : l2)
          for (auto c : l12) data.add(a, b, c, w);
    }
  }
  return data;
}

/// Rounds the mean of two ordered label indices. Halves round away from the
/// middle index (size - 1) / 2; a half that sits exactly on the middle rounds up.
inline LabelIndex average_ordered(LabelIndex a, LabelIndex b, std::size_t size) {
  const std::size_t sum = a + b;
  if (sum % 2 == 0) return sum / 2;
  const std::size_t twice_middle = size - 1;
  return sum >= twice_middle ? sum / 2 + 1 : sum / 2;
}

/// Builds triples from counterfactual labels. Within each item the first-m1
/// and first-m2 records are sorted by annotator id and paired by rank (the
/// shorter list wraps around). Each pair gives y1 and y2 from the two first
/// labels. On ordered spaces y is the rounded mean of the two revised labels
/// (weight 1); otherwise each revised label becomes its own triple of weight 0.5.
inline TripleDataset triples_from_counterfactual(const std::vector<CounterfactualRecord>& records,
                                                 const LabelSpace& space) {
  std::map<std::string, std::array<std::map<std::string, const CounterfactualRecord*>, 2>> items;
  for (const auto& r : records) {
    auto& slot = items[r.item_id][static_cast<std::size_t>(r.order)];
    if (!slot.emplace(r.annotator_id, &r).second) {
      throw Error(ErrorCode::duplicate, "item '" + r.item_id + "': annotator '" + r.annotator_id + "' repeats order " +
                                            std::string(to_string(r.order)));
    }
  }

  TripleDataset data(space);
  for (const auto& [item, orders] : items) {
    std::array<std::vector<const CounterfactualRecord*>, 2> lists;
    for (std::size_t o = 0; o < 2; ++o) {
      if (orders[o].empty()) {
        throw Error(ErrorCode::missing_condition,
                    "item '" + item + "' has no " + std::string(to_string(static_cast<Order>(o))) + " record");
      }
      for (const auto& entry : orders[o]) lists[o].push_back(entry.second);
    }
    const std::size_t k = std::max(lists[0].size(), lists[1].size());
    for (std::size_t r = 0; r < k; ++r) {
      const auto& a = *lists[0][r % lists[0].size()];
      const auto& b = *lists[1][r % lists[1].size()];
      const auto y1 = detail::encode_label(space, a.label_first, item);
      const auto y2 = detail::encode_label(space, b.label_first, item);
      const auto y12 = detail::encode_label(space, a.label_both, item);
      const auto y21 = detail::encode_label(space, b.label_both, item);
      if (space.is_ordered()) {
        data.add(y1, y2, average_ordered(y12, y21, space.size()));
      } else {
        data.add(y1, y2, y12, 0.5);
        data.add(y1, y2, y21, 0.5);
      }
    }
  }
  return data;
}

/// Means over all records of each rating and each confidence.
struct DecompositionSummary {
  std::size_t count = 0;
  double r = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double s = 0.0;
  double conf_r = 0.0;
  double conf_u1 = 0.0;
  double conf_u2 = 0.0;
  double conf_s = 0.0;
};

inline DecompositionSummary summarize_decomposition(const std::vector<DecompositionRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::empty_input, "no decomposition records to summarize");
  DecompositionSummary out;
  out.count = records.size();
  for (const auto& rec : records) {
    out.r += rec.r;
    out.u1 += rec.u1;
    out.u2 += rec.u2;
    out.s += rec.s;
    out.conf_r += rec.conf_r;
    out.conf_u1 += rec.conf_u1;
    out.conf_u2 += rec.conf_u2;
    out.conf_s += rec.conf_s;
  }
  const auto n = static_cast<double>(records.size());
  for (double* v : {&out.r, &out.u1, &out.u2, &out.s, &out.conf_r, &out.conf_u1, &out.conf_u2, &out.conf_s}) *v /= n;
  return out;
}

}  // namespace pidlab

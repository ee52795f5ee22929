#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pidlab/dataset.hpp"
#include "pidlab/error.hpp"
#include "pidlab/info.hpp"
#include "pidlab/triple_dataset.hpp"

namespace pidlab {

enum class Gate { xor_gate, and_gate, or_gate, copy, unique1, unique2 };

inline std::string_view to_string(Gate g) {
  switch (g) {
    case Gate::xor_gate: return "XOR";
    case Gate::and_gate: return "AND";
    case Gate::or_gate: return "OR";
    case Gate::copy: return "COPY";
    case Gate::unique1: return "UNIQUE1";
    case Gate::unique2: return "UNIQUE2";
  }
  return "XOR";
}

inline Gate gate_from_string(std::string_view s) {
  for (Gate g : {Gate::xor_gate, Gate::and_gate, Gate::or_gate, Gate::copy, Gate::unique1, Gate::unique2}) {
    if (to_string(g) == s) return g;
  }
  throw Error(ErrorCode::unknown_value, "unknown gate '" + std::string(s) + "'");
}

/// A canonical gate over labels {0..size-1}, optionally with label-flip noise.
/// For size > 2 the gates generalize as XOR: (y1 + y2) mod n, AND: min,
/// OR: max; a flip moves y uniformly to one of the other labels.
struct GateSpec {
  Gate gate = Gate::xor_gate;
  std::size_t size = 2;
  std::optional<double> flip;  // NOISY(gate, flip) when set

  void validate() const {
    if (size < 2) throw Error(ErrorCode::invalid_argument, "gate size must be at least 2");
    if (flip && !(*flip >= 0.0 && *flip < 0.5)) {
      throw Error(ErrorCode::invalid_argument, "flip probability must lie in [0, 0.5)");
    }
  }
};

inline Joint3 canonical_joint(const GateSpec& spec) {
  spec.validate();
  const auto n = spec.size;
  const double eps = spec.flip.value_or(0.0);
  std::vector<double> mass(n * n * n, 0.0);
  auto put = [&](std::size_t y1, std::size_t y2, std::size_t y, double w) {
    for (std::size_t out = 0; out < n; ++out) {
      const double p = out == y ? 1.0 - eps : eps / static_cast<double>(n - 1);
      mass[(y1 * n + y2) * n + out] += w * p;
    }
  };
  const double pair = 1.0 / static_cast<double>(n * n);
  const double single = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < n; ++a) {
    if (spec.gate == Gate::copy) {
      put(a, a, a, single);
      continue;
    }
    for (std::size_t b = 0; b < n; ++b) {
      std::size_t y = 0;
      switch (spec.gate) {
        case Gate::xor_gate: y = (a + b) % n; break;
        case Gate::and_gate: y = std::min(a, b); break;
        case Gate::or_gate: y = std::max(a, b); break;
        case Gate::unique1: y = a; break;
        case Gate::unique2: y = b; break;
        case Gate::copy: break;
      }
      put(a, b, y, pair);
    }
  }
  return Joint3(n, std::move(mass));
}

/// Draws `count` i.i.d. triples from p by inverse CDF over the flattened
/// cells. The generator is std::mt19937_64 seeded with `seed`; uniforms are
/// formed from the top 53 bits of each draw, so output is reproducible for a
/// given (p, count, seed).
inline TripleDataset sample(const Joint3& p, std::size_t count, std::uint64_t seed, const LabelSpace& space) {
  if (count == 0) throw Error(ErrorCode::invalid_argument, "sample count must be positive");
  if (space.size() != p.size()) throw Error(ErrorCode::invalid_argument, "label space size differs from joint");
  const auto n = p.size();
  const auto mass = p.mass();
  std::vector<double> cdf(mass.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < mass.size(); ++c) cdf[c] = (acc += mass[c]);
  std::size_t last_positive = 0;
  for (std::size_t c = 0; c < mass.size(); ++c)
    if (mass[c] > 0.0) last_positive = c;

  std::mt19937_64 rng(seed);
  std::vector<Triple> samples;
  samples.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    cell = std::min(cell, last_positive);
    samples.push_back({cell / (n * n), (cell / n) % n, cell % n, 1.0});
  }
  return TripleDataset(space, std::move(samples));
}

/// Integer labels "0".."n-1" as a nominal space, for synthetic data.
inline LabelSpace index_space(std::size_t n) {
  std::vector<std::string> values;
  for (std::size_t i = 0; i < n; ++i) values.push_back(std::to_string(i));
  return LabelSpace::nominal(std::move(values));
}

inline TripleDataset sample(const Joint3& p, std::size_t count, std::uint64_t seed) {
  return sample(p, count, seed, index_space(p.size()));
}

/// Random full-support joint with i.i.d. exponential cell weights.
inline Joint3 random_joint(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> draw(1.0);
  std::vector<double> mass(n * n * n);
  double total = 0.0;
  for (double& m : mass) total += (m = draw(rng) + 1e-12);
  for (double& m : mass) m /= total;
  return Joint3(n, std::move(mass));
}

/// Lays triples out as partial-label records that rotation pairing turns
/// back into the same triples. Consecutive triples are grouped into items
/// of `group` (the last item may be smaller); within an item of k triples,
/// triple r is written as annotator r's m1 label, annotator (r+1)'s m2 label
/// and annotator (r+2)'s multimodal label, indices mod k.
inline std::vector<PartialRecord> partial_records_from_triples(const TripleDataset& data, std::size_t group = 3,
                                                               int confidence = 5) {
  if (group == 0) throw Error(ErrorCode::invalid_argument, "group size must be positive");
  const auto& space = data.space();
  const auto& samples = data.samples();
  std::vector<PartialRecord> out;
  for (std::size_t start = 0, item = 0; start < samples.size(); start += group, ++item) {
    const std::size_t k = std::min(group, samples.size() - start);
    const std::string id = "item" + std::to_string(item);
    auto annotator = [](std::size_t a) { return "ann" + std::to_string(a); };
    for (std::size_t r = 0; r < k; ++r) {
      const auto& t = samples[start + r];
      out.push_back({id, annotator(r), Condition::m1, space.decode(t.y1), confidence});
      out.push_back({id, annotator((r + 1) % k), Condition::m2, space.decode(t.y2), confidence});
      out.push_back({id, annotator((r + 2) % k), Condition::both, space.decode(t.y), confidence});
    }
  }
  return out;
}

/// One item per triple: a first-m1 record (y1, then y) and a first-m2
/// record (y2, then y), so counterfactual aggregation recovers the triple.
inline std::vector<CounterfactualRecord> counterfactual_records_from_triples(const TripleDataset& data,
                                                                             int confidence = 5) {
  const auto& space = data.space();
  std::vector<CounterfactualRecord> out;
  std::size_t item = 0;
  for (const auto& t : data.samples()) {
    const std::string id = "item" + std::to_string(item++);
    out.push_back({id, "ann0", Order::first_m1, space.decode(t.y1), space.decode(t.y), confidence, confidence});
    out.push_back({id, "ann1", Order::first_m2, space.decode(t.y2), space.decode(t.y), confidence, confidence});
  }
  return out;
}

/// CSV with header y1,y2,y,weight; labels are written by name.
inline void write_triples_csv(std::ostream& out, const TripleDataset& data) {
  csv::write_row(out, {"y1", "y2", "y", "weight"});
  for (const auto& t : data.samples()) {
    std::ostringstream w;
    w.precision(17);
    w << t.weight;
    csv::write_row(out, {data.space().decode(t.y1), data.space().decode(t.y2), data.space().decode(t.y), w.str()});
  }
}

}  // namespace pidlab

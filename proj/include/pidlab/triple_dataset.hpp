#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pidlab/error.hpp"
#include "pidlab/label_space.hpp"

namespace pidlab {

/// One (y1, y2, y) observation carrying a positive weight.
struct Triple {
  LabelIndex y1 = 0;
  LabelIndex y2 = 0;
  LabelIndex y = 0;
  double weight = 1.0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

/// Weighted samples over a shared label space, read as a joint distribution.
class TripleDataset {
 public:
  explicit TripleDataset(LabelSpace space) : space_(std::move(space)) {}

  TripleDataset(LabelSpace space, std::vector<Triple> samples) : space_(std::move(space)) {
    samples_.reserve(samples.size());
    for (const auto& t : samples) add(t);
  }

  void add(const Triple& t) {
    const auto n = space_.size();
    if (t.y1 >= n || t.y2 >= n || t.y >= n) {
      throw Error(ErrorCode::out_of_range, "triple label index outside the label space");
    }
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
      throw Error(ErrorCode::out_of_range, "triple weight must be positive and finite");
    }
    samples_.push_back(t);
  }

  void add(LabelIndex y1, LabelIndex y2, LabelIndex y, double weight = 1.0) {
    add(Triple{y1, y2, y, weight});
  }

  const LabelSpace& space() const noexcept { return space_; }
  const std::vector<Triple>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  double total_weight() const noexcept {
    double total = 0.0;
    for (const auto& t : samples_) total += t.weight;
    return total;
  }

 private:
  LabelSpace space_;
  std::vector<Triple> samples_;
};

}  // namespace pidlab

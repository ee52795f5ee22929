// Decomposes the canonical gates, then runs a small partial-label file
// through the annotation pipeline.
//
//   pidlab_demo [path/to/partial.csv]

#include <cstdio>
#include <fstream>
#include <iostream>

#include "pidlab/pidlab.hpp"

int main(int argc, char** argv) {
  using namespace pidlab;

  std::printf("%-8s %8s %8s %8s %8s %8s\n", "gate", "R", "U1", "U2", "S", "total");
  for (Gate g : {Gate::xor_gate, Gate::and_gate, Gate::or_gate, Gate::copy, Gate::unique1, Gate::unique2}) {
    const auto r = decompose(canonical_joint({g, 2, std::nullopt}));
    std::printf("%-8s %8.4f %8.4f %8.4f %8.4f %8.4f\n", std::string(to_string(g)).c_str(), r.r, r.u1, r.u2, r.s,
                r.total);
  }

  if (argc < 2) return 0;
  std::ifstream in(argv[1]);
  if (!in) {
    std::cerr << "cannot open " << argv[1] << "\n";
    return 2;
  }
  const auto parsed = parse_partial(in, Format::csv);
  const auto space = LabelSpace::ordinal_range(-3, 3);
  const auto data = triples_from_partial(parsed.records, space, Pairing::rotation);
  const auto result = convert(data);
  std::cout << "\n" << argv[1] << ": " << data.size() << " triples\n" << to_json(result).dump(2) << "\n";

  const auto alpha = krippendorff_alpha(ratings_from_partial(parsed.records, space, Condition::both,
                                                             AlphaMetric::ordinal));
  std::cout << "multimodal label agreement: " << to_json(alpha).dump() << "\n";
  return 0;
}

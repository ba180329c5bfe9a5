#pragma once

#include <string>
#include <vector>

#include "mstep/core/pomdp.hpp"
#include "mstep/environments/environments.hpp"

namespace mstep::testing {

struct CorpusEntry {
  std::string name;
  Pomdp pomdp;
  bool generated = false;
};

struct RandomShape {
  int S, O, A, H, m;
};

inline const std::vector<RandomShape>& random_shapes() {
  static const std::vector<RandomShape> shapes{
      {2, 2, 2, 3, 2}, {3, 3, 2, 4, 2}, {3, 3, 2, 3, 2}, {4, 4, 2, 4, 2},
      {2, 3, 2, 4, 3}, {3, 4, 2, 4, 3}, {4, 5, 2, 3, 2}, {3, 2, 2, 4, 2},
      {3, 3, 2, 4, 1}, {4, 3, 2, 4, 3}, {2, 4, 2, 4, 2}, {4, 4, 2, 3, 3}};
  return shapes;
}

// Built-in locks plus `generated` random decodable instances.
inline std::vector<CorpusEntry> make_corpus(int generated) {
  std::vector<CorpusEntry> corpus;
  corpus.push_back({"lock_m2", make_combination_lock(2, 2), false});
  corpus.push_back({"lock_m3", make_combination_lock(3, 2), false});
  const auto& shapes = random_shapes();
  for (int i = 0; i < generated; ++i) {
    const auto& sh = shapes[i % shapes.size()];
    const auto seed = static_cast<std::uint64_t>(1000 + i);
    corpus.push_back({"random_" + std::to_string(i) + "_S" + std::to_string(sh.S) + "O" +
                          std::to_string(sh.O) + "H" + std::to_string(sh.H) + "m" +
                          std::to_string(sh.m),
                      make_random_decodable(sh.S, sh.O, sh.A, sh.H, sh.m, seed), true});
  }
  return corpus;
}

}  // namespace mstep::testing

#pragma once

#include <cstdint>
#include <vector>

#include "mstep/core/pomdp.hpp"
#include "mstep/oracle/oracle.hpp"
#include "mstep/oracle/qfunction.hpp"

namespace mstep {

// Observation ids used by the combination lock.
struct LockObservations {
  static constexpr int kDummy = 0;
  static constexpr int kGood = 1;
  static constexpr int kBad = 2;
};

// Combination lock with memory m and A actions. Latent states good = 0, bad = 1. Steps 1..m-1
// each have a special action a*_h = h mod A that keeps the agent in the good state; step m
// moves deterministically to step m + 1, whose observation reveals good/bad and pays 1 for
// good. Horizon m + 1; decodable with memory m but not m - 1. The decoder is attached.
Pomdp make_combination_lock(int m, int action_count);
int lock_special_action(int h, int action_count);

// Sylvester construction of the 2^s x 2^s Hadamard matrix (entries +-1).
std::vector<std::vector<int>> sylvester_hadamard(int s);

struct HadamardInstance {
  Pomdp pomdp;
  int contexts = 0;                         // O = 2^s
  std::vector<std::vector<int>> vectors;    // v_0..v_{O-1}
  std::vector<std::vector<int>> sets;       // S_1..S_{O-1}, sorted members
  std::vector<QFunction> f;                 // f_1..f_{O-1}
  FunctionClassPair classes;                // F = [Q*, f_1..f_{O-1}], G = F + backups

  int bottom() const { return contexts; }
  int terminal_low() const { return contexts + 1; }   // r = 1/2, emitted by s_1
  int terminal_high() const { return contexts + 2; }  // r = 3/4, emitted by s_2
};

// Contextual instance with O = 2^s uniform contexts, states s_0 / s_1 / s_2 (ids 0, 1, 2),
// actions a_1 / a_2 (ids 0, 1), horizon 3 and memory 2. Step 1 shows a context from s_0; the
// first action moves to s_1 or s_2; step 2 shows the blank observation; step 3 shows a
// terminal observation carrying the reward of the reached state. Set-system invariants are
// checked on construction (ModelError on failure).
HadamardInstance make_hadamard_instance(int s);

// Rejection-sampled random instance: sparse supports, weights in {1..4}, rewards k/(4H).
// Accepted when decodable at m, not decodable at m - 1 (for m >= 2) and small enough for exact
// enumeration. The decoder is attached. Throws ModelError after max_retries attempts.
Pomdp make_random_decodable(int S, int O, int A, int H, int m, std::uint64_t seed,
                            int max_retries = 10000);

// F = [decoys..., Q*] with decoys cycling through: optimistic f = 1 (0 at the last step),
// Q* with permuted actions, and Q* with randomly corrupted cells. G adds exact backups.
FunctionClassPair make_decoy_class(const ModelOracle& oracle, int decoys, std::uint64_t seed);

}  // namespace mstep

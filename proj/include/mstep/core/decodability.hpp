#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "mstep/core/pomdp.hpp"

namespace mstep {

struct DecodabilityResult {
  bool decodable = false;
  std::optional<Suffix> witness;  // a reachable suffix with two latent states
  std::vector<int> witness_states;
  std::optional<Decoder> decoder;
};

// Reachable (latent state, suffix code) pairs per step under memory m; [h-1] is step h.
std::vector<std::set<std::pair<int, SuffixCode>>> reachable_state_suffix_pairs(const Pomdp& pomdp,
                                                                              int m);

// Exhaustive check that every reachable suffix of length m pins down the latent state.
// Throws CapExceeded when the pair space is larger than the oracle cap.
DecodabilityResult verify_decodability(const Pomdp& pomdp, int m);

// Largest total reward over reachable trajectories.
double max_reachable_return(const Pomdp& pomdp);

// Reachable latent states per step.
std::vector<std::vector<int>> reachable_states(const Pomdp& pomdp);

}  // namespace mstep

#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mstep/core/suffix.hpp"

namespace mstep {

inline constexpr double kProbabilityTolerance = 1e-12;

// Ground-truth phi*_h over reachable suffixes (indexed with the decoder's own memory).
struct Decoder {
  int memory = 1;
  std::vector<std::map<SuffixCode, int>> states;  // [h-1]: suffix code -> latent state

  std::optional<int> lookup(int h, SuffixCode code) const;
  bool operator==(const Decoder&) const = default;
};

// Layered tabular POMDP. Steps are 1-based in every accessor; ids are 0-based.
struct Pomdp {
  int horizon = 0;
  int memory = 1;
  int state_count = 0;
  int observation_count = 0;
  int action_count = 0;

  std::vector<double> initial;      // [S]
  std::vector<double> transitions;  // [(H-1) x S x A x S]
  std::vector<double> emissions;    // [H x S x O]
  std::vector<double> rewards;      // [H x O]
  std::optional<Decoder> decoder;

  // Zero-filled model of the given shape.
  static Pomdp shaped(int horizon, int memory, int states, int observations, int actions);

  std::span<const double> transition(int h, int s, int a) const;
  std::span<double> transition(int h, int s, int a);
  std::span<const double> emission(int h, int s) const;
  std::span<double> emission(int h, int s);
  double reward(int h, int o) const { return rewards[(h - 1) * observation_count + o]; }
  double& reward(int h, int o) { return rewards[(h - 1) * observation_count + o]; }

  SuffixSpace suffix_space() const {
    return {horizon, memory, observation_count, action_count};
  }
  SuffixSpace suffix_space(int m) const { return {horizon, m, observation_count, action_count}; }

  // Shape, probability and reward-range checks. Throws ModelError; never renormalizes.
  void validate() const;

  bool operator==(const Pomdp&) const = default;
};

}  // namespace mstep

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mstep {

using SuffixCode = std::uint64_t;

// First step of the memory window ending at h: max(h - m + 1, 1).
constexpr int window_start(int h, int m) { return h - m + 1 > 1 ? h - m + 1 : 1; }
// Number of observations in z_h: min(h, m).
constexpr int window_length(int h, int m) { return h < m ? h : m; }

// z_h = (o_{m(h)}, a_{m(h)}, ..., a_{h-1}, o_h), ids 0-based, step 1-based.
struct Suffix {
  int step = 0;
  std::vector<int> observations;
  std::vector<int> actions;

  auto operator<=>(const Suffix&) const = default;
  bool operator==(const Suffix&) const = default;
  std::string to_string() const;
};

// Last min(h, m) observations and min(h, m) - 1 actions of the history o_{1:h}, a_{1:h-1}.
// `observations` and `actions` may be longer than h; only the prefix up to step h is read.
Suffix extract_suffix(std::span<const int> observations, std::span<const int> actions, int h,
                      int m);

// Dense mixed-radix indexing of the suffix set Z_h. The oldest observation is the most
// significant digit, so dropping the oldest (o, a) pair is a modulo.
class SuffixSpace {
 public:
  SuffixSpace() = default;
  SuffixSpace(int horizon, int memory, int observation_count, int action_count);

  int horizon() const { return horizon_; }
  int memory() const { return memory_; }
  int observation_count() const { return observation_count_; }
  int action_count() const { return action_count_; }

  SuffixCode size(int h) const { return sizes_.at(h - 1); }
  SuffixCode encode(const Suffix& z) const;
  // Encodes z_h of a full history prefix (observations o_1..o_h, actions a_1..a_{h-1}).
  SuffixCode encode_history(int h, std::span<const int> observations,
                            std::span<const int> actions) const;
  Suffix decode(int h, SuffixCode code) const;
  // z_{h+1} formed from z_h, a_h and o_{h+1}.
  SuffixCode shift(int h, SuffixCode code, int action, int next_observation) const;
  int last_observation(SuffixCode code) const {
    return static_cast<int>(code % static_cast<SuffixCode>(observation_count_));
  }

  bool operator==(const SuffixSpace&) const = default;

 private:
  int horizon_ = 0;
  int memory_ = 1;
  int observation_count_ = 0;
  int action_count_ = 0;
  std::vector<SuffixCode> sizes_;
};

}  // namespace mstep

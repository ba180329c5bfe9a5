#include "mstep/core/suffix.hpp"

#include <limits>
#include <sstream>

#include "mstep/core/errors.hpp"

namespace mstep {

std::string Suffix::to_string() const {
  std::ostringstream os;
  os << "z_" << step << "=(";
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (i > 0) os << ", a" << actions[i - 1] << ", ";
    os << "o" << observations[i];
  }
  os << ")";
  return os.str();
}

Suffix extract_suffix(std::span<const int> observations, std::span<const int> actions, int h,
                      int m) {
  Suffix z;
  z.step = h;
  const int begin = window_start(h, m);
  for (int t = begin; t <= h; ++t) {
    z.observations.push_back(observations[t - 1]);
    if (t < h) z.actions.push_back(actions[t - 1]);
  }
  return z;
}

SuffixSpace::SuffixSpace(int horizon, int memory, int observation_count, int action_count)
    : horizon_(horizon),
      memory_(memory),
      observation_count_(observation_count),
      action_count_(action_count) {
  if (horizon < 1 || memory < 1 || observation_count < 1 || action_count < 1) {
    throw ModelError("suffix space needs positive horizon, memory and alphabet sizes");
  }
  const auto limit = std::numeric_limits<SuffixCode>::max() / 4;
  for (int h = 1; h <= horizon; ++h) {
    SuffixCode n = static_cast<SuffixCode>(observation_count);
    for (int i = 1; i < window_length(h, memory); ++i) {
      if (n > limit / static_cast<SuffixCode>(observation_count * action_count)) {
        throw CapExceeded("suffix space", static_cast<double>(n) * observation_count *
                                              action_count,
                          limit);
      }
      n *= static_cast<SuffixCode>(observation_count) * static_cast<SuffixCode>(action_count);
    }
    sizes_.push_back(n);
  }
}

SuffixCode SuffixSpace::encode(const Suffix& z) const {
  const int len = window_length(z.step, memory_);
  if (static_cast<int>(z.observations.size()) != len ||
      static_cast<int>(z.actions.size()) != len - 1) {
    throw ModelError("malformed suffix " + z.to_string());
  }
  SuffixCode code = static_cast<SuffixCode>(z.observations[0]);
  for (int i = 1; i < len; ++i) {
    code = (code * action_count_ + static_cast<SuffixCode>(z.actions[i - 1])) *
               observation_count_ +
           static_cast<SuffixCode>(z.observations[i]);
  }
  return code;
}

SuffixCode SuffixSpace::encode_history(int h, std::span<const int> observations,
                                       std::span<const int> actions) const {
  const int begin = window_start(h, memory_);
  SuffixCode code = static_cast<SuffixCode>(observations[begin - 1]);
  for (int t = begin + 1; t <= h; ++t) {
    code = (code * action_count_ + static_cast<SuffixCode>(actions[t - 2])) *
               observation_count_ +
           static_cast<SuffixCode>(observations[t - 1]);
  }
  return code;
}

Suffix SuffixSpace::decode(int h, SuffixCode code) const {
  const int len = window_length(h, memory_);
  Suffix z;
  z.step = h;
  z.observations.assign(len, 0);
  z.actions.assign(len - 1, 0);
  for (int i = len - 1; i >= 0; --i) {
    z.observations[i] = static_cast<int>(code % observation_count_);
    code /= observation_count_;
    if (i > 0) {
      z.actions[i - 1] = static_cast<int>(code % action_count_);
      code /= action_count_;
    }
  }
  return z;
}

SuffixCode SuffixSpace::shift(int h, SuffixCode code, int action, int next_observation) const {
  const int len = window_length(h, memory_);
  if (len == memory_) {
    if (memory_ == 1) return static_cast<SuffixCode>(next_observation);
    // drop the oldest (o, a): keep the length-(m-1) tail
    code %= sizes_[memory_ - 2];
  }
  return (code * action_count_ + static_cast<SuffixCode>(action)) * observation_count_ +
         static_cast<SuffixCode>(next_observation);
}

}  // namespace mstep

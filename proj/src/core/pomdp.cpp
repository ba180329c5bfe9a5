#include "mstep/core/pomdp.hpp"

#include <cmath>
#include <string>

#include "mstep/core/errors.hpp"

namespace mstep {
namespace {

void check_distribution(std::span<const double> p, const std::string& where) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ModelError(where + ": negative or non-finite probability");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw ModelError(where + ": probabilities sum to " + std::to_string(total));
  }
}

}  // namespace

std::optional<int> Decoder::lookup(int h, SuffixCode code) const {
  if (h < 1 || h > static_cast<int>(states.size())) return std::nullopt;
  const auto& layer = states[h - 1];
  auto it = layer.find(code);
  if (it == layer.end()) return std::nullopt;
  return it->second;
}

Pomdp Pomdp::shaped(int horizon, int memory, int states, int observations, int actions) {
  if (horizon < 1 || states < 1 || observations < 1 || actions < 1) {
    throw ModelError("POMDP sizes must be positive");
  }
  if (memory < 1 || memory > horizon) throw ModelError("memory length must lie in [1, H]");
  Pomdp p;
  p.horizon = horizon;
  p.memory = memory;
  p.state_count = states;
  p.observation_count = observations;
  p.action_count = actions;
  p.initial.assign(states, 0.0);
  p.transitions.assign(static_cast<std::size_t>(horizon - 1) * states * actions * states, 0.0);
  p.emissions.assign(static_cast<std::size_t>(horizon) * states * observations, 0.0);
  p.rewards.assign(static_cast<std::size_t>(horizon) * observations, 0.0);
  return p;
}

std::span<const double> Pomdp::transition(int h, int s, int a) const {
  const std::size_t off =
      ((static_cast<std::size_t>(h - 1) * state_count + s) * action_count + a) * state_count;
  return {transitions.data() + off, static_cast<std::size_t>(state_count)};
}

std::span<double> Pomdp::transition(int h, int s, int a) {
  const std::size_t off =
      ((static_cast<std::size_t>(h - 1) * state_count + s) * action_count + a) * state_count;
  return {transitions.data() + off, static_cast<std::size_t>(state_count)};
}

std::span<const double> Pomdp::emission(int h, int s) const {
  const std::size_t off = (static_cast<std::size_t>(h - 1) * state_count + s) * observation_count;
  return {emissions.data() + off, static_cast<std::size_t>(observation_count)};
}

std::span<double> Pomdp::emission(int h, int s) {
  const std::size_t off = (static_cast<std::size_t>(h - 1) * state_count + s) * observation_count;
  return {emissions.data() + off, static_cast<std::size_t>(observation_count)};
}

void Pomdp::validate() const {
  if (horizon < 1 || state_count < 1 || observation_count < 1 || action_count < 1) {
    throw ModelError("POMDP sizes must be positive");
  }
  if (memory < 1 || memory > horizon) throw ModelError("memory length must lie in [1, H]");
  const std::size_t S = state_count, O = observation_count, A = action_count, H = horizon;
  if (initial.size() != S || transitions.size() != (H - 1) * S * A * S ||
      emissions.size() != H * S * O || rewards.size() != H * O) {
    throw ModelError("POMDP table shapes do not match the declared sizes");
  }
  check_distribution(initial, "init");
  for (int h = 1; h < horizon; ++h)
    for (int s = 0; s < state_count; ++s)
      for (int a = 0; a < action_count; ++a)
        check_distribution(transition(h, s, a), "transitions[" + std::to_string(h) + "][" +
                                                    std::to_string(s) + "][" +
                                                    std::to_string(a) + "]");
  for (int h = 1; h <= horizon; ++h)
    for (int s = 0; s < state_count; ++s)
      check_distribution(emission(h, s),
                         "emissions[" + std::to_string(h) + "][" + std::to_string(s) + "]");
  for (double r : rewards) {
    if (!(r >= 0.0 && r <= 1.0)) throw ModelError("rewards must lie in [0, 1]");
  }
  if (decoder) {
    if (decoder->memory != memory || static_cast<int>(decoder->states.size()) != horizon) {
      throw ModelError("decoder shape does not match the model");
    }
    for (const auto& layer : decoder->states)
      for (const auto& [code, s] : layer)
        if (s < 0 || s >= state_count) throw ModelError("decoder maps to an invalid state");
  }
}

}  // namespace mstep

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mstep {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The model (or a built-in construction) violates one of its invariants.
class ModelError : public Error {
 public:
  using Error::Error;
};

class PolicyUndefined : public Error {
 public:
  PolicyUndefined(int step, const std::string& history);
  int step() const { return step_; }

 private:
  int step_;
};

// An exact computation would exceed the configured enumeration cap.
class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, double estimate, std::uint64_t cap);
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultOracleCap = 10'000'000;

// Enumeration cap for exact computations; MSTEP_ORACLE_CAP overrides the default.
std::uint64_t oracle_cap();

}  // namespace mstep

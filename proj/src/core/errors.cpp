#include "mstep/core/errors.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace mstep {

PolicyUndefined::PolicyUndefined(int step, const std::string& history)
    : Error("policy undefined at step " + std::to_string(step) + " for history " + history),
      step_(step) {}

CapExceeded::CapExceeded(const std::string& what, double estimate, std::uint64_t cap)
    : Error(what + ": estimated enumeration size " + std::to_string(estimate) +
            " exceeds cap " + std::to_string(cap)),
      estimate_(estimate) {}

std::uint64_t oracle_cap() {
  const char* env = std::getenv("MSTEP_ORACLE_CAP");
  if (env == nullptr || *env == '\0') return kDefaultOracleCap;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
  if (ec != std::errc() || *ptr != '\0' || value == 0) {
    throw ConfigError(std::string("invalid MSTEP_ORACLE_CAP value: ") + env);
  }
  return value;
}

}  // namespace mstep

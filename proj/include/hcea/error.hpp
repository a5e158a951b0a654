#pragma once

#include <stdexcept>
#include <string>

namespace hcea {

/// Malformed data, configuration or arguments supplied by the caller.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside the support of the distribution it is evaluated under.
class SupportError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The sampler could not start or continue; `block()` names the offending block.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(std::string block, const std::string& what)
      : std::runtime_error(block + ": " + what), block_(std::move(block)) {}
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

}  // namespace hcea

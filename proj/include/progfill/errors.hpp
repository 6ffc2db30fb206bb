#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace progfill {

// Caller passed something outside an operation's contract (shape mismatch,
// odd dimensions, unknown attribute name, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The random mask sampler could not meet its coverage band within budget.
class SamplingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, std::vector<std::string> offenders)
      : std::runtime_error(what), offenders_(std::move(offenders)) {}
  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss term evaluated to NaN or infinity. `term()` names the offender.
class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(std::string term)
      : std::runtime_error("non-finite loss term: " + term), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

}  // namespace progfill

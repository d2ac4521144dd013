#pragma once

#include <stdexcept>
#include <string>

namespace ksred {

/// A pair separation is exactly zero where a division by it is required.
class CollisionPoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An integrator drift guard fired.
class StepTooLarge : public std::runtime_error {
 public:
  StepTooLarge(const std::string& what, double s_at_failure, double drift)
      : std::runtime_error(what), s_(s_at_failure), drift_(drift) {}

  double s() const noexcept { return s_; }
  double drift() const noexcept { return drift_; }

 private:
  double s_;
  double drift_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace ksred

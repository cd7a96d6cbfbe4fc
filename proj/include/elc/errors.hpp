#pragma once

#include <stdexcept>
#include <string>

namespace elc {

/// Input outside the domain of a formula (non-positive depth, bad index, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// |Delta_j| >= 1: the superexchange coupling diverges or flips sign.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed configuration, pattern, or mismatched array lengths.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fewer lattice minima than chain sites could be located in a potential.
class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace elc

#pragma once

#include <stdexcept>
#include <string>

namespace zonesim {

struct InvalidEdge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DisconnectedGraph : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConnectivityRetryExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UnsupportedKind : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionTooLarge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A non-finite iterate aborted the trial.
struct NumericalOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace zonesim

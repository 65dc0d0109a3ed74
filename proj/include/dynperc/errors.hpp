#pragma once

#include <stdexcept>
#include <string>

namespace dynperc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter outside its admissible range (degenerate p, n < 3, bad grid, ...).
struct InvalidParams : Error {
  using Error::Error;
};

// edge_between called on a non-adjacent vertex pair.
struct NotAdjacent : Error {
  using Error::Error;
};

// State space, edge count, or requested enumeration exceeds a hard budget.
struct TooLarge : Error {
  using Error::Error;
};

// Too few samples survive to fit or summarize.
struct InsufficientData : Error {
  using Error::Error;
};

// A bounded search (regeneration, meeting, absorption) ran out of budget.
struct Timeout : Error {
  using Error::Error;
};

// Malformed or inconsistent experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dynperc

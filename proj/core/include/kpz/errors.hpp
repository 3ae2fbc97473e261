#pragma once

#include <stdexcept>
#include <string>

namespace kpz {

// Exit-code classes used by the CLI: argument and domain problems map to usage
// errors, numeric ones to numeric failures.
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

struct argument_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct truncation_error : numeric_error {
  using numeric_error::numeric_error;
};

struct consistency_error : numeric_error {
  using numeric_error::numeric_error;
};

struct unsupported_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace kpz

#pragma once

#include <stdexcept>
#include <string>

namespace gctm {

// Error taxonomy mirrors the CLI exit-code contract:
//   ConfigError / FormatError / CoverageError -> exit 2 (bad input)
//   StaleArtifactError                        -> exit 3 (rerun upstream)
//   NumericError                              -> exit 4 (numeric fault)
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Malformed file contents (wrong dimensions, bad header, unparsable line).
struct FormatError : Error {
  using Error::Error;
};

// Required ids missing from a table (e.g. contextual embeddings).
struct CoverageError : Error {
  using Error::Error;
};

struct StaleArtifactError : Error {
  using Error::Error;
};

// Non-finite activations or losses; carries batch diagnostics in the message.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace gctm

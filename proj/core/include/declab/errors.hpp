#pragma once

#include <stdexcept>
#include <string>

namespace declab {

/// Bad caller input: malformed arguments, out-of-range hyperparameters,
/// unsatisfiable requests. Mapped to exit code 2 by the CLI.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed model or data file. The message names the offending node/field.
class ParseError : public InputError {
public:
  explicit ParseError(const std::string& what) : InputError(what) {}
};

/// A cutoff or filter excluded every sequence in the support.
class EmptySupportError : public InputError {
public:
  explicit EmptySupportError(const std::string& what) : InputError(what) {}
};

/// Remote-model wire format violation (non-finite or non-normalizing
/// response, truncated stream, malformed record).
class ProtocolError : public std::runtime_error {
public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// "Cannot happen" contradiction, e.g. a sampler reporting zero density for
/// its own sample. Indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace declab

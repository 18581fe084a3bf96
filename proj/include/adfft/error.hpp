#pragma once

#include <stdexcept>
#include <string>

namespace adfft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A coordinate or linear index outside its grid.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Rank count outside the range the adaptive decomposition supports
/// (np > product of the first two permuted lengths, or np < 1).
class UnsupportedScaleError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an API precondition (size mismatch, use after finalize, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Failure while moving data between ranks. Carries the peer involved when known.
class CommError : public Error {
 public:
  CommError(const std::string& what, int peer = -1)
      : Error(peer >= 0 ? what + " (peer " + std::to_string(peer) + ")" : what), detail_(what), peer_(peer) {}

  int peer() const noexcept { return peer_; }
  /// The message without the peer suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  int peer_;
};

/// Malformed frame on the socket wire.
class FramingError : public CommError {
 public:
  using CommError::CommError;
};

}  // namespace adfft

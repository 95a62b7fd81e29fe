// Error types shared across the library. Each failure mode the callers are
// expected to distinguish gets its own type; everything derives from Error.

#pragma once

#include <stdexcept>
#include <string>

namespace aed {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// File opened but its contents are not in a supported format.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Audio stream decoded to zero samples.
class EmptyAudioError : public Error {
 public:
  explicit EmptyAudioError(const std::string& msg) : Error(msg) {}
};

// Clip shorter than one analysis window; caller may zero-pad and retry.
class ShortClipError : public Error {
 public:
  explicit ShortClipError(const std::string& msg) : Error(msg) {}
};

// Dimension mismatches, empty inputs, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

}  // namespace aed

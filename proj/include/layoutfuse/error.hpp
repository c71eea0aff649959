#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace layoutfuse {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Caller-supplied data violated a precondition or could not be parsed.
/// The CLI maps this family to exit code 2.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what) {}
};

/// Geometric input had insufficient rank (e.g. collinear points for a plane fit).
class DegenerateInputError : public InputError {
 public:
  DegenerateInputError(const std::string& what, int achieved_rank)
      : InputError(what), rank(achieved_rank) {}
  int rank;
};

/// Two planes were too close to parallel to intersect reliably.
class ParallelPlanesError : public Error {
 public:
  explicit ParallelPlanesError(const std::string& what) : Error(what) {}
};

/// A linear system for a plane triple was singular.
class DegenerateConfigurationError : public Error {
 public:
  explicit DegenerateConfigurationError(const std::string& what) : Error(what) {}
};

/// Rendering preconditions failed (e.g. camera outside the room volume).
class RenderError : public Error {
 public:
  explicit RenderError(const std::string& what) : Error(what) {}
};

/// A numeric parameter left its allowed domain (e.g. non-positive scale).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/// A required semantic plane (floor or ceiling) was absent from every view.
class MissingPlaneError : public Error {
 public:
  explicit MissingPlaneError(const std::string& what) : Error(what) {}
};

/// Metric computation could not proceed (e.g. empty segmentation).
class MetricError : public Error {
 public:
  explicit MetricError(const std::string& what) : Error(what) {}
};

/// A file did not match its expected on-disk format. Carries the offending
/// path and, where known, the byte offset of the first bad field.
class FormatError : public InputError {
 public:
  FormatError(const std::string& what, std::string file_path, std::size_t byte_offset)
      : InputError(what + " (file: " + file_path + ", byte offset " +
                   std::to_string(byte_offset) + ")"),
        path(std::move(file_path)),
        offset(byte_offset) {}
  std::string path;
  std::size_t offset;
};

}  // namespace layoutfuse

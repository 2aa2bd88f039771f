#pragma once

#include <stdexcept>
#include <string>

namespace scplabel {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter is outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a type invariant (non-finite values, bad labels, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A binary file has the wrong magic or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A binary file is truncated or its header disagrees with its payload.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A clustering metric is undefined for the given partition.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Synthetic data generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scplabel

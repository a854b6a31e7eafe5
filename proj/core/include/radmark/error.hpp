#pragma once

#include <stdexcept>
#include <string>

namespace radmark {

// Base of every exception thrown by the library. The CLI maps these to exit
// code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed dataset, manifest or record; the message names the offending item.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class UnsupportedSchemaError : public Error {
 public:
  using Error::Error;
};

// Truncated or otherwise damaged binary container.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during optimization.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class QueryError : public Error {
 public:
  using Error::Error;
};

}  // namespace radmark

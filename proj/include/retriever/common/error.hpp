#pragma once

#include <stdexcept>
#include <string>

namespace retriever {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration detected at load time (invalid regex, malformed file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An operation's precondition was violated by the caller.
class Rejected : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// An analyzer ran without the upstream features or model artifact it needs.
class DependencyError : public Error {
 public:
  using Error::Error;
};

// Storage is unavailable or contended; the caller may retry.
class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace retriever

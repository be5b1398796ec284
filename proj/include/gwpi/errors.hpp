#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gwpi {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model validation failures. `check()` names the violated condition.
class ModelError : public Error {
 public:
  ModelError(std::string check, const std::string& what)
      : Error(check + ": " + what), check_(std::move(check)) {}
  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

class NotCritical : public ModelError {
 public:
  explicit NotCritical(const std::string& what) : ModelError("NotCritical", what) {}
};

class DegenerateOffspring : public ModelError {
 public:
  explicit DegenerateOffspring(const std::string& what)
      : ModelError("DegenerateOffspring", what) {}
};

class NoImmigration : public ModelError {
 public:
  explicit NoImmigration(const std::string& what) : ModelError("NoImmigration", what) {}
};

class NotAProbability : public ModelError {
 public:
  explicit NotAProbability(const std::string& what) : ModelError("NotAProbability", what) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Raised when a replicate would allocate more particle records than allowed.
class ResourceLimit : public Error {
 public:
  ResourceLimit(const std::string& what, std::uint64_t cap) : Error(what), cap_(cap) {}
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t cap_;
};

/// Raised when exhaustive enumeration would visit more histories than allowed.
class ExplosionError : public Error {
 public:
  ExplosionError(const std::string& what, std::uint64_t cap) : Error(what), cap_(cap) {}
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t cap_;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace gwpi

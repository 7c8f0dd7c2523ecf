#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sg {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// A single validation failure, tied to the offending scenario/field.
struct Violation {
  std::string scenario_id;
  std::string field;
  std::string message;

  std::string str() const {
    std::string out;
    if (!scenario_id.empty()) out += scenario_id + ": ";
    if (!field.empty()) out += "[" + field + "] ";
    out += message;
    return out;
  }
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, std::vector<Violation> violations = {})
      : Error(message), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error("config field '" + field + "': " + message), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class MissingParamError : public Error {
 public:
  explicit MissingParamError(const std::string& placeholder)
      : Error("missing parameter: " + placeholder), placeholder_(placeholder) {}

  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};

class AuthenticationError : public Error {
 public:
  explicit AuthenticationError(const std::string& message) : Error(message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(message) {}
};

}  // namespace sg

#pragma once

#include <stdexcept>
#include <string>

namespace upms {

// Every toolkit error carries a machine-parsable category; the CLI prints
// "ERROR <category>: <message>" and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& m) : Error("usage", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct GenerationError : Error {
  explicit GenerationError(const std::string& m) : Error("generation", m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};
struct GuardError : Error {
  explicit GuardError(const std::string& m) : Error("guard", m) {}
};
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error("divergence", m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

}  // namespace upms

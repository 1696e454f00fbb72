#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgr {

// Base class for every error thrown by the library. `category()` is what the
// CLI prints in front of the message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* category() const noexcept { return "error"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* category() const noexcept override { return "parse error"; }

 private:
  std::size_t line_;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "vocabulary error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "dimension error"; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "numeric error"; }
};

class StateError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "state error"; }
};

class DegenerateCandidate : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "degenerate candidate"; }
};

class EmptySubgraphError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "empty subgraph"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config error"; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "format error"; }
};

}  // namespace sgr

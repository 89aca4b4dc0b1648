#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace steerlab {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A ToyModelSpec, CorpusSpec or policy violates its invariants.
class SpecError : public Error {
 public:
  using Error::Error;
};

class UnknownTokenError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InsufficientExamplesError : public Error {
 public:
  InsufficientExamplesError(std::size_t found, std::size_t required)
      : Error("insufficient accepted examples: found " + std::to_string(found) +
              " of " + std::to_string(required) + " required"),
        found_(found),
        required_(required) {}
  std::size_t found() const noexcept { return found_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t found_;
  std::size_t required_;
};

// Mean activations of the two prompt conditions coincide at some layer.
class DegenerateDirectionError : public Error {
 public:
  explicit DegenerateDirectionError(std::size_t layer)
      : Error("degenerate script direction at layer " + std::to_string(layer) +
              " (source and target means coincide)"),
        layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

// Not enough kept records on one side of a contrast ("SRC" or "TRG").
class EmptySideError : public Error {
 public:
  explicit EmptySideError(std::string side)
      : Error("no kept " + side + " records"), side_(std::move(side)) {}
  const std::string& side() const noexcept { return side_; }

 private:
  std::string side_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace steerlab

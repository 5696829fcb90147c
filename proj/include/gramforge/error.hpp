#pragma once

#include <stdexcept>
#include <string>

namespace gramforge {

// Root of every exception thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (corpora, matrices, grammar files).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// The oracle could not answer: remote failure, timeout, protocol violation.
class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

class OutOfVocabulary : public Error {
 public:
  explicit OutOfVocabulary(const std::string& token)
      : Error("token out of vocabulary: '" + token + "'"), token_(token) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// Grammar is inconsistent (dangling connector label, missing counterpart).
class GrammarError : public Error {
 public:
  using Error::Error;
};

// The generator exhausted its retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace gramforge

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdmia {

enum class ErrorCode {
  kValidation,
  kMalformedRecord,
  kDuplicateId,
  kMissingLabel,
  kDimensionMismatch,
  kEmptyInput,
  kDegenerateData,
  kUnprobeable,
  kInfeasible,
  kBudgetExhausted,
  kBackend,
  kCacheMiss,
  kRefused,
  kUnscorable,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// Base exception for everything raised by the toolkit.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(std::string id)
      : Error(ErrorCode::kDuplicateId, "duplicate id \"" + id + "\""),
        id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class MalformedRecordError : public Error {
 public:
  MalformedRecordError(std::size_t line, const std::string& what)
      : Error(ErrorCode::kMalformedRecord,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BudgetExhaustedError : public Error {
 public:
  BudgetExhaustedError(std::size_t accepted, std::size_t budget)
      : Error(ErrorCode::kBudgetExhausted,
              "attempt budget of " + std::to_string(budget) +
                  " spent with " + std::to_string(accepted) + " accepted"),
        accepted_(accepted) {}
  std::size_t accepted() const { return accepted_; }

 private:
  std::size_t accepted_;
};

// Transport or protocol failure of a backend after retries were exhausted.
class BackendError : public Error {
 public:
  BackendError(const std::string& backend, const std::string& what,
               int attempts)
      : Error(ErrorCode::kBackend, backend + ": " + what + " (after " +
                                       std::to_string(attempts) +
                                       " attempt(s))"),
        backend_(backend),
        attempts_(attempts) {}
  const std::string& backend() const { return backend_; }
  int attempts() const { return attempts_; }

 private:
  std::string backend_;
  int attempts_;
};

}  // namespace sdmia

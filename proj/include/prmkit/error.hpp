#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prmkit {

/// Root of every exception the toolkit throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input, broken invariant or unparseable data. The CLI maps it to exit 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Constructing a value would violate one of its documented invariants.
class InvariantViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyInput : public ValidationError {
 public:
  EmptyInput() : ValidationError("input has no non-whitespace content") {}
};

class MalformedTags : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A dataset line could not be decoded. `line` is 1-based.
class DatasetError : public ValidationError {
 public:
  DatasetError(std::size_t line, std::string field, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Judge output that cannot be turned into a verdict. `key` names the
/// offending step key ("STEP 3") when there is one.
class JudgeResponseError : public ValidationError {
 public:
  JudgeResponseError(const std::string& what, std::string key)
      : ValidationError(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class ParseFailure : public JudgeResponseError {
 public:
  explicit ParseFailure(const std::string& what) : JudgeResponseError(what, "") {}
};

class CoverageMismatch : public JudgeResponseError {
 public:
  using JudgeResponseError::JudgeResponseError;
};

class DomainError : public JudgeResponseError {
 public:
  using JudgeResponseError::JudgeResponseError;
};

/// Transport or protocol failure talking to a completion endpoint. The CLI
/// maps it to exit 2.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string endpoint = {}, int status = 0)
      : Error(what), endpoint_(std::move(endpoint)), status_(status) {}

  const std::string& endpoint() const { return endpoint_; }
  int status() const { return status_; }

 private:
  std::string endpoint_;
  int status_;
};

class RateLimited : public BackendError {
 public:
  using BackendError::BackendError;
};

/// The judge never produced a usable verdict within the retry budget.
class AnnotationFailed : public Error {
 public:
  AnnotationFailed(std::string problem_id, std::string raw_response, const std::string& reason)
      : Error("annotation failed for " + problem_id + ": " + reason),
        problem_id_(std::move(problem_id)),
        raw_response_(std::move(raw_response)),
        reason_(reason) {}

  const std::string& problem_id() const { return problem_id_; }
  const std::string& raw_response() const { return raw_response_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string problem_id_;
  std::string raw_response_;
  std::string reason_;
};

}  // namespace prmkit

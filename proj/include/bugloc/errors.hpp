#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bugloc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- lexing / module loading ---

class TokenizeError : public Error {
public:
  enum class Kind { UnterminatedBlockComment, UnterminatedString };

  TokenizeError(Kind kind, int line, const std::string& what)
      : Error(what), kind(kind), line(line) {}

  Kind kind;
  int line;
};

class LoadError : public Error {
public:
  enum class Kind { TooShort, NoModuleBoundary, TooLong, Lex };

  LoadError(Kind kind, const std::string& what, int line_count = 0)
      : Error(what), kind(kind), line_count(line_count) {}

  Kind kind;
  int line_count;
};

// --- mutation ---

class NoSitesError : public Error {
public:
  explicit NoSitesError(const std::string& what) : Error(what) {}
};

class InsufficientSitesError : public Error {
public:
  InsufficientSitesError(const std::string& what, std::size_t requested,
                         std::size_t available)
      : Error(what), requested(requested), available(available) {}

  std::size_t requested;
  std::size_t available;
};

class ExternalToolError : public Error {
public:
  ExternalToolError(const std::string& what, int exit_code,
                    const std::string& output_excerpt)
      : Error(what), exit_code(exit_code), output_excerpt(output_excerpt) {}

  int exit_code;
  std::string output_excerpt;
};

// --- dedup ---

class EmptyShingleSetError : public Error {
public:
  using Error::Error;
};

class IncompatibleSignaturesError : public Error {
public:
  using Error::Error;
};

// --- dataset pipeline ---

class InvalidThoughtError : public Error {
public:
  using Error::Error;
};

class NoEligibleLineError : public Error {
public:
  using Error::Error;
};

class BatchError : public Error {
public:
  using Error::Error;
};

// --- gateway ---

class AuthError : public Error {
public:
  using Error::Error;
};

class RateLimitedError : public Error {
public:
  using Error::Error;
};

class TransportError : public Error {
public:
  explicit TransportError(const std::string& what, int status = 0)
      : Error(what), status(status) {}

  int status;
};

class MalformedResponseError : public Error {
public:
  using Error::Error;
};

// --- numeric / eval ---

class DomainError : public Error {
public:
  using Error::Error;
};

class EmptySequenceError : public Error {
public:
  using Error::Error;
};

class EmptyBatchError : public Error {
public:
  using Error::Error;
};

class AllLinesBlankError : public Error {
public:
  using Error::Error;
};

class CaseMismatchError : public Error {
public:
  using Error::Error;
};

class MissingResponsesError : public Error {
public:
  using Error::Error;
};

// --- IO ---

class SchemaError : public Error {
public:
  SchemaError(const std::string& what, std::string path, int line)
      : Error(what), path(std::move(path)), line(line) {}

  std::string path;
  int line;
};

}  // namespace bugloc

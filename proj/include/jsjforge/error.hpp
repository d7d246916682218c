#pragma once

#include <stdexcept>
#include <string>

namespace jsj {

enum class ErrorCode {
  Ok = 0,
  Syntax,
  UndeclaredGenerator,
  DuplicatePeripheral,
  BackendNotValidated,
  BudgetExceeded,
  Disconnected,
  WindowTooSmall,
  Precondition,
  InvalidArgument,
  Io,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, int line, int col, const std::string& msg);
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

}  // namespace jsj

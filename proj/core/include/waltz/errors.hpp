#pragma once

#include <stdexcept>
#include <string>

namespace waltz {

// Root of every error this library throws on purpose. Anything else
// escaping is a bug.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BindingConflict : Error {
  explicit BindingConflict(std::string n)
      : Error("binding conflict on variable " + n), name(std::move(n)) {}
  std::string name;
};

struct UnboundVariable : Error {
  explicit UnboundVariable(std::string n)
      : Error("unbound variable " + n), name(std::move(n)) {}
  std::string name;
};

struct NonNumericOperand : Error {
  explicit NonNumericOperand(std::string n)
      : Error("variable " + n + " is not bound to an integer"), name(std::move(n)) {}
  std::string name;
};

struct NameAlreadyRegistered : Error {
  explicit NameAlreadyRegistered(std::string n)
      : Error("name already registered: " + n), name(std::move(n)) {}
  std::string name;
};

struct UnknownTarget : Error {
  explicit UnknownTarget(std::string t)
      : Error("unknown call target: " + t), target(std::move(t)) {}
  std::string target;
};

struct Timeout : Error {
  explicit Timeout(std::string what = "call timed out") : Error(std::move(what)) {}
};

struct AlreadyReplied : Error {
  AlreadyReplied() : Error("reply handle already used") {}
};

struct ParseError : Error {
  ParseError(int line_, int column_, std::string expected_)
      : Error("parse error at " + std::to_string(line_) + ":" + std::to_string(column_) +
              ", expected " + expected_),
        line(line_), column(column_), expected(std::move(expected_)) {}
  int line;
  int column;
  std::string expected;
};

struct NotWellFormed : Error {
  explicit NotWellFormed(std::string why) : Error("formula not well-formed: " + why) {}
};

struct InvalidInterval : Error {
  InvalidInterval(std::size_t i, std::size_t j, std::size_t len)
      : Error("invalid interval [" + std::to_string(i) + "," + std::to_string(j) +
              "] on trace of length " + std::to_string(len)) {}
};

struct ScenarioFailure : Error {
  using Error::Error;
};

struct IoFailure : Error {
  using Error::Error;
};

}  // namespace waltz

#pragma once

#include <stdexcept>
#include <string>

namespace ddeopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (shape, range, unknown name).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced by a user callback or an integrator.
class NumericFault : public Error {
 public:
  using Error::Error;
};

// alpha/T left the inequality regime the breakpoint layout was built for.
class RegimeFault : public Error {
 public:
  RegimeFault(const std::string& inequality)
      : Error("regime guard violated: " + inequality), inequality_(inequality) {}
  const std::string& inequality() const { return inequality_; }

 private:
  std::string inequality_;
};

class SolverFault : public Error {
 public:
  SolverFault(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class StallFault : public Error {
 public:
  using Error::Error;
};

class NotBranchPoint : public Error {
 public:
  using Error::Error;
};

// Oracle evaluated outside the domain of its closed form.
class DomainFault : public Error {
 public:
  using Error::Error;
};

class StageFault : public Error {
 public:
  StageFault(const std::string& stage, const std::string& why)
      : Error("stage '" + stage + "': " + why), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

}  // namespace ddeopt

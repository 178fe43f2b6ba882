#pragma once

#include <stdexcept>
#include <string>

namespace squidqct {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  numerical = 3,
  io = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for every run that had to stop because the numerics became untrustworthy.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericalAbort {
 public:
  using NumericalAbort::NumericalAbort;
};

class StepSizeError : public NumericalAbort {
 public:
  using NumericalAbort::NumericalAbort;
};

class TruncationError : public NumericalAbort {
 public:
  using NumericalAbort::NumericalAbort;
};

class EigenSolverError : public NumericalAbort {
 public:
  using NumericalAbort::NumericalAbort;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by section analysis when the input cannot define a histogram.
class SectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace squidqct

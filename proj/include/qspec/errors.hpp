#pragma once

#include <stdexcept>
#include <string>

namespace qspec {

/// Base class for all library errors. Each subclass names one failure mode
/// that callers are expected to handle differently.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The local-polynomial normal equations are numerically singular at an
/// evaluation point (too few effective observations in the window).
class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// A sample carries no spread (e.g. all values equal), so a reference
/// distribution or quantile inversion cannot be formed.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// The scale estimate is nonpositive somewhere on its grid.
class ScaleDegenerate : public Error {
 public:
  using Error::Error;
};

/// No observation falls inside the trimming window.
class TrimEmpty : public Error {
 public:
  using Error::Error;
};

/// Too many bootstrap replications failed for the critical values to be
/// trusted.
class BootstrapUnstable : public Error {
 public:
  using Error::Error;
};

}  // namespace qspec

#pragma once

#include <stdexcept>
#include <string>

namespace lobefit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value violates a domain invariant (negative stiffness, bad tie group, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Unsupported unit pair in convert_units.
class UnitError : public Error {
public:
  using Error::Error;
};

/// Both quadratic coefficients vanish: the cutter never engages.
class DegenerateEngagement : public Error {
public:
  using Error::Error;
};

/// No lobe branch reaches the requested speed range.
class EmptyCurve : public Error {
public:
  using Error::Error;
};

/// Requested speeds lie outside the curve's covered range.
class OutOfRange : public Error {
public:
  using Error::Error;
};

/// Stability oracle could not resolve the phase of the characteristic locus.
class ResolutionError : public Error {
public:
  using Error::Error;
};

/// Bisection bracket does not straddle the stability limit.
class BracketError : public Error {
public:
  using Error::Error;
};

/// Non-finite values that survive the retry/shrink logic.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// None of the starting points produced a usable boundary.
class Unfittable : public Error {
public:
  using Error::Error;
};

/// Malformed input file; the message carries the file name and line.
class ParseError : public Error {
public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

} // namespace lobefit

#pragma once

#include <stdexcept>
#include <string>

namespace oaf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No usable optical/acoustic depth pairs were available.
class ScaleUnavailable : public Error {
 public:
  using Error::Error;
};

/// RANSAC consensus too small to trust. Carries the best estimate anyway.
class ScaleUnreliable : public Error {
 public:
  ScaleUnreliable(const std::string& what, double scale, double inlier_fraction)
      : Error(what), scale_(scale), inlier_fraction_(inlier_fraction) {}
  double scale() const { return scale_; }
  double inlier_fraction() const { return inlier_fraction_; }

 private:
  double scale_;
  double inlier_fraction_;
};

class DegenerateRefinement : public Error {
 public:
  using Error::Error;
};

/// Malformed file or stream content.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace oaf

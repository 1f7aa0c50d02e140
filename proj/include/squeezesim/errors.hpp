#pragma once

#include <stdexcept>
#include <string>

namespace squeezesim {

/// Invalid input: bad parameter ranges, malformed files, inconsistent config.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (no convergence, degenerate data).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The anti-squeezed quadrature has no positive damping left
/// (1 - g_s + g_fb <= 0, or g_s >= 1 on the amplified branch).
///
/// The squeezed-quadrature variance is still well defined at the boundary and
/// is carried along so callers can report the limiting value.
class InstabilityError : public std::runtime_error {
public:
  InstabilityError(const std::string& what, double sigma1_sq)
      : std::runtime_error(what), sigma1_sq_(sigma1_sq) {}

  double sigma1_sq() const noexcept { return sigma1_sq_; }

private:
  double sigma1_sq_;
};

/// Electrostatic geometry with no valid operating point (gap closed,
/// pull-in, or spring softening past zero stiffness).
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class PullInError : public GeometryError {
public:
  using GeometryError::GeometryError;
};

class SofteningError : public GeometryError {
public:
  using GeometryError::GeometryError;
};

}  // namespace squeezesim

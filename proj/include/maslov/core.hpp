#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace maslov {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Error hierarchy. Everything the library refuses to do is an exception;
// soft conditions (conditioning warnings, sign warnings) are flags on results.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error { using Error::Error; };          // point outside chart
struct DimensionError : Error { using Error::Error; };       // n mismatch
struct ModelConfigError : Error { using Error::Error; };     // bad model parameters
struct UnsupportedModelError : Error { using Error::Error; };
struct MeshError : Error { using Error::Error; };            // degenerate mesh
struct NotLagrangianError : Error { using Error::Error; };
struct DegreeError : Error { using Error::Error; };
struct CycleError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };       // solver failure
struct RefinementError : Error { using Error::Error; };      // step too large
struct UnresolvedMeshError : Error { using Error::Error; };  // |eta| >= pi/2
struct HalfIntegerBoundaryError : Error { using Error::Error; };
struct NotApplicableError : Error { using Error::Error; };
struct StepRejectionError : Error { using Error::Error; };   // flow residual blow-up

// Principal value in (-pi, pi].
inline double wrap_to_pi(double a) {
  double r = std::remainder(a, two_pi);
  if (r <= -pi) r += two_pi;
  return r;
}

// Finite-difference steps. First derivatives use eps^{1/3}, second
// derivatives eps^{1/4}; both scaled by a coordinate scale.
inline double fd_step_first(double scale = 1.0) {
  static const double s = std::cbrt(std::numeric_limits<double>::epsilon());
  return s * std::max(1.0, scale);
}
inline double fd_step_second(double scale = 1.0) {
  static const double s = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));
  return s * std::max(1.0, scale);
}

}  // namespace maslov

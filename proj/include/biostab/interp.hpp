#ifndef BIOSTAB_INTERP_HPP
#define BIOSTAB_INTERP_HPP

#include <vector>

namespace biostab {

enum class InterpScheme { CubicSpline, MonotoneCubic };

/// Piecewise-cubic interpolant on strictly increasing knots.
///
/// CubicSpline uses natural end conditions; MonotoneCubic uses
/// Fritsch-Carlson limited tangents and never overshoots the data.
/// Evaluation outside [front, back] throws std::out_of_range; there is no
/// extrapolation, callers clamp explicitly when they mean to.
class Interpolant1D {
 public:
  Interpolant1D() = default;
  Interpolant1D(std::vector<double> knots, std::vector<double> values,
                InterpScheme scheme);

  double operator()(double x) const;
  double derivative(double x) const;

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  bool empty() const { return x_.empty(); }
  InterpScheme scheme() const { return scheme_; }

 private:
  int interval(double x) const;

  std::vector<double> x_, y_;
  std::vector<double> m_;  // nodal first derivatives (Hermite form)
  InterpScheme scheme_ = InterpScheme::CubicSpline;
};

}  // namespace biostab

#endif

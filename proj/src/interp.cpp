#include "biostab/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace biostab {

namespace {

// Natural cubic spline nodal derivatives: solve the standard tridiagonal
// system for second derivatives, then convert to first derivatives so both
// schemes share one Hermite representation.
std::vector<double> spline_tangents(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  std::vector<double> m2(n, 0.0), diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    const double hl = x[i] - x[i - 1];
    const double hr = x[i + 1] - x[i];
    diag[i] = 2.0 * (hl + hr);
    upper[i] = hr;
    rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
  }
  // Thomas sweep over interior rows, M_0 = M_{n-1} = 0.
  for (int i = 2; i < n - 1; ++i) {
    const double hl = x[i] - x[i - 1];
    const double w = hl / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (int i = n - 2; i >= 1; --i)
    m2[i] = (rhs[i] - upper[i] * m2[i + 1]) / diag[i];

  std::vector<double> m(n);
  for (int i = 0; i < n - 1; ++i) {
    const double h = x[i + 1] - x[i];
    m[i] = (y[i + 1] - y[i]) / h - h * (2.0 * m2[i] + m2[i + 1]) / 6.0;
  }
  const double hl = x[n - 1] - x[n - 2];
  m[n - 1] = (y[n - 1] - y[n - 2]) / hl + hl * (m2[n - 2] + 2.0 * m2[n - 1]) / 6.0;
  return m;
}

std::vector<double> monotone_tangents(const std::vector<double>& x,
                                      const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  std::vector<double> d(n - 1), m(n);
  for (int i = 0; i < n - 1; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (int i = 1; i < n - 1; ++i) {
    m[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
  }
  // Fritsch-Carlson limiter.
  for (int i = 0; i < n - 1; ++i) {
    if (d[i] == 0.0) {
      m[i] = m[i + 1] = 0.0;
      continue;
    }
    const double a = m[i] / d[i];
    const double b = m[i + 1] / d[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double t = 3.0 / std::sqrt(s);
      m[i] = t * a * d[i];
      m[i + 1] = t * b * d[i];
    }
  }
  return m;
}

}  // namespace

Interpolant1D::Interpolant1D(std::vector<double> knots, std::vector<double> values,
                             InterpScheme scheme)
    : x_(std::move(knots)), y_(std::move(values)), scheme_(scheme) {
  if (x_.size() != y_.size())
    throw std::invalid_argument("Interpolant1D: knot/value size mismatch");
  if (x_.size() < 4)
    throw std::invalid_argument("Interpolant1D: cubic schemes need >= 4 points");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("Interpolant1D: knots must be strictly increasing");
  m_ = (scheme_ == InterpScheme::CubicSpline) ? spline_tangents(x_, y_)
                                              : monotone_tangents(x_, y_);
}

int Interpolant1D::interval(double x) const {
  if (!(x >= x_.front() && x <= x_.back()))
    throw std::out_of_range("Interpolant1D: x = " + std::to_string(x) +
                            " outside [" + std::to_string(x_.front()) + ", " +
                            std::to_string(x_.back()) + "]");
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  int i = static_cast<int>(it - x_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(x_.size()) - 2);
}

double Interpolant1D::operator()(double x) const {
  const int i = interval(x);
  if (x == x_[i]) return y_[i];  // interpolation condition, exactly
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
         (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
}

double Interpolant1D::derivative(double x) const {
  const int i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[i] / h + (3 * t2 - 4 * t + 1) * m_[i] +
          (-6 * t2 + 6 * t) * y_[i + 1] / h + (3 * t2 - 2 * t) * m_[i + 1]);
}

}  // namespace biostab

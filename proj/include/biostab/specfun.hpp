#ifndef BIOSTAB_SPECFUN_HPP
#define BIOSTAB_SPECFUN_HPP

#include <vector>

namespace biostab {

/// Exponential integral E_n(x) = \int_1^inf exp(-x t) t^-n dt.
///
/// n >= 1 and x >= 0 required; E_1(0) diverges and raises std::domain_error.
/// Absolute accuracy is ~1e-14 for x <= 50; for very large x the value
/// underflows cleanly to 0.
double expint(int n, double x);

/// E_0(x) = exp(-x)/x, the kernel that appears when E_1 is differentiated.
double expint0(double x);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double a = 0.0;
  double b = 1.0;

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n, double a, double b);

/// Composite Simpson weights for a uniform grid of n nodes (n odd, spacing h).
/// For even n the last three intervals are closed with a 3/8 block.
std::vector<double> simpson_weights(int n, double h);

}  // namespace biostab

#endif

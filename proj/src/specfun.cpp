#include "biostab/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace biostab {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Power series, reliable for 0 < x <= 1:
//   E_1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k * k!)
double e1_series(double x) {
  double sum = 0.0;
  double term = 1.0;  // (-x)^k / k!
  for (int k = 1; k <= 64; ++k) {
    term *= -x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return -kEulerGamma - std::log(x) - sum;
}

// Modified Lentz continued fraction for E_1(x), x > 1.
double e1_contfrac(double x) {
  constexpr double tiny = std::numeric_limits<double>::min() * 1e10;
  const int n = 1;
  double b = x + n;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 200; ++i) {
    const double a = -static_cast<double>(i) * (n - 1 + i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

}  // namespace

double expint(int n, double x) {
  if (n < 1) throw std::domain_error("expint: order must be >= 1");
  if (x < 0.0 || std::isnan(x))
    throw std::domain_error("expint: argument must be >= 0, got " + std::to_string(x));
  if (x == 0.0) {
    if (n == 1) throw std::domain_error("expint: E_1(0) diverges");
    return 1.0 / (n - 1);
  }

  double en = (x <= 1.0) ? e1_series(x) : e1_contfrac(x);
  if (n == 1) return en;

  // Upward recurrence m*E_{m+1}(x) = exp(-x) - x*E_m(x); stable for the
  // small orders used here.
  const double emx = std::exp(-x);
  for (int m = 1; m < n; ++m) en = (emx - x * en) / m;
  return en;
}

double expint0(double x) {
  if (x <= 0.0) throw std::domain_error("expint0: argument must be > 0");
  return std::exp(-x) / x;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::domain_error("gauss_legendre: n must be >= 1");
  if (!(a < b)) throw std::domain_error("gauss_legendre: need a < b");

  QuadratureRule rule;
  rule.a = a;
  rule.b = b;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  // Newton iteration on P_n, symmetric pair fill.
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    // x is the i-th root from the +1 end; store ascending in [a,b].
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.nodes[i] = mid - half * x;
    rule.weights[n - 1 - i] = w * half;
    rule.weights[i] = w * half;
  }
  return rule;
}

std::vector<double> simpson_weights(int n, double h) {
  if (n < 2) throw std::domain_error("simpson_weights: need at least 2 nodes");
  std::vector<double> w(n, 0.0);
  if (n == 2) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  int last = n - 1;           // index after the Simpson part
  bool tail38 = (n % 2 == 0);  // even node count: close with a 3/8 block
  if (tail38) {
    if (n < 5) {  // pure 3/8 on 4 nodes
      w[0] = w[3] = 3.0 * h / 8.0;
      w[1] = w[2] = 9.0 * h / 8.0;
      return w;
    }
    last = n - 4;
  }
  for (int i = 0; i < last; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (tail38) {
    w[n - 4] += 3.0 * h / 8.0;
    w[n - 3] += 9.0 * h / 8.0;
    w[n - 2] += 9.0 * h / 8.0;
    w[n - 1] += 3.0 * h / 8.0;
  }
  return w;
}

}  // namespace biostab

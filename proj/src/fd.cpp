#include "biostab/fd.hpp"

#include <cmath>
#include <stdexcept>

namespace biostab {

std::vector<double> fornberg_weights(double z0, const std::vector<double>& xs, int m) {
  const int n = static_cast<int>(xs.size());
  if (m >= n) throw std::invalid_argument("fornberg_weights: need more points than order");
  // B. Fornberg, Math. Comp. 51 (1988): recursive weight generation.
  std::vector<double> c(n * (m + 1), 0.0);
  auto C = [&](int i, int k) -> double& { return c[i * (m + 1) + k]; };
  double c1 = 1.0;
  double c4 = xs[0] - z0;
  C(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - z0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
        C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
      C(j, 0) = c4 * C(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = C(i, m);
  return w;
}

Eigen::MatrixXd fd_matrix(int n, double h, int m) {
  if (m < 1 || m > 4) throw std::invalid_argument("fd_matrix: m must be in 1..4");
  // Centered widths give 4th order by symmetry; one-sided stencils need one
  // or two extra points to keep the same order.
  static const int centered[5] = {0, 5, 5, 7, 7};
  static const int edge[5] = {0, 5, 6, 7, 8};
  const int wc = centered[m], we = edge[m];
  if (n < we) throw std::invalid_argument("fd_matrix: grid too small for stencil");

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const int half = wc / 2;
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) {
    int start, w;
    if (i - half >= 0 && i + half <= n - 1) {
      start = i - half;
      w = wc;
    } else {
      w = we;
      start = std::min(std::max(i - we / 2, 0), n - we);
    }
    xs.resize(w);
    for (int j = 0; j < w; ++j) xs[j] = start + j;  // unit spacing, scale after
    const auto wt = fornberg_weights(static_cast<double>(i), xs, m);
    for (int j = 0; j < w; ++j) D(i, start + j) = wt[j];
  }
  return D / std::pow(h, m);
}

Eigen::MatrixXd cumulative_integral_matrix(int n, double h) {
  Eigen::MatrixXd M = fd_matrix(n, h, 1);
  M.row(n - 1).setZero();
  M(n - 1, n - 1) = 1.0;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  P.row(n - 1).setZero();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  return lu.solve(P);
}

}  // namespace biostab

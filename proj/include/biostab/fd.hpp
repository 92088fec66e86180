#ifndef BIOSTAB_FD_HPP
#define BIOSTAB_FD_HPP

#include <Eigen/Dense>
#include <vector>

namespace biostab {

/// Fornberg weights for the m-th derivative at z0 from samples at xs.
std::vector<double> fornberg_weights(double z0, const std::vector<double>& xs, int m);

/// Dense n x n differentiation matrix for the m-th derivative (m in 1..4) on a
/// uniform grid of spacing h, 4th-order accurate everywhere; stencils shift
/// one-sided near the boundaries.
Eigen::MatrixXd fd_matrix(int n, double h, int m);

/// Matrix C with Phi = C N, where D1 Phi = N on rows 0..n-2 and Phi(end) = 0;
/// the discrete antiderivative consistent with the 4th-order D1.
Eigen::MatrixXd cumulative_integral_matrix(int n, double h);

}  // namespace biostab

#endif

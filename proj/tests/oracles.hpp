#ifndef BIOSTAB_TEST_ORACLES_HPP
#define BIOSTAB_TEST_ORACLES_HPP

// Independent reference computations used by the test suites. Everything in
// here deliberately avoids the library's solver paths: straightforward
// quadrature, fixed-point loops and shooting on raw arrays.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracles {

/// Adaptive Simpson quadrature.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, int depth = 60);

/// E_1 by direct quadrature of the defining integral (substituted to a finite
/// interval), no series or continued fractions.
double e1_quadrature(double x);

/// integral_0^x E_1(u) du by series near zero plus adaptive quadrature.
double e1_primitive(double x);

/// Central finite difference of a scalar function.
double central_diff(const std::function<double(double)>& f, double x, double h);

/// Fine-grid Picard solution of the layer integral equation on a uniform
/// trapezoid grid; returns Lambda at the requested tau.
struct FiePicardResult {
  std::vector<double> tau, lambda;
};
FiePicardResult fie_picard_trapezoid(double kappa, double omega, double cos0,
                                     int n_nodes, double tol = 1e-12);

/// Diffuse upward-minus-downward flux at tau from the formal solution,
/// integrating over polar angle with Gauss nodes and over depth with a fine
/// composite rule. lambda_at must provide Lambda on [0, kappa].
double diffuse_flux_formal(const std::function<double(double)>& lambda_at,
                           double kappa, double omega, double tau, int n_mu = 64,
                           int n_t = 4001);

/// Same route for the diffuse mean intensity.
double diffuse_intensity_formal(const std::function<double(double)>& lambda_at,
                                double kappa, double omega, double tau,
                                int n_mu = 64, int n_t = 4001);

/// Equilibrium concentration by fixed-point iteration on the integral form
/// (quadrature + normalization, no shooting, no Runge-Kutta):
///   n(z) = n(0) exp(Vc int_0^z T(I(tau(s))) ds), tau(z) = kappa int_z^1 n.
std::vector<double> basic_state_collocation(
    const std::function<double(double)>& lambda_at, double kappa, double G_t,
    double Vc, const std::function<double(double)>& taxis, int n_nodes,
    int max_iter = 400, double tol = 1e-12);

/// Marginal Rayleigh number of the rotating Benard surrogate at fixed k by a
/// shooting determinant: integrate the 8th-order system from z = 0 with a
/// basis of wall-compatible solutions, root-find the top-wall determinant in
/// R. steps+1 grid points, classic RK4.
double benard_marginal_R(double k, double Ta, bool rigid_bottom, bool free_top,
                         int steps = 512);

/// Minimum of benard_marginal_R over k (golden section).
struct BenardCritical {
  double k_c, R_c;
};
BenardCritical benard_critical(double Ta, bool rigid_bottom, bool free_top,
                               double k_lo = 1.0, double k_hi = 8.0,
                               int steps = 512);

}  // namespace oracles

#endif
